#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lumenpaint/error.hpp"
#include "lumenpaint/geometry.hpp"
#include "lumenpaint/mesh.hpp"
#include "lumenpaint/parallel.hpp"
#include "lumenpaint/random.hpp"

namespace lumenpaint {

/// Random Fourier features: gamma(v) = (cos(2 pi G v), sin(2 pi G v)) with
/// G an F x 3 matrix of N(0, sigma^2) draws. G is stored as float32 so that a
/// checkpoint reproduces it exactly.
struct FourierEncoder {
  int frequencies = 0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::vector<float> g;  // F x 3, row-major

  static FourierEncoder make(int frequencies, double sigma, std::uint64_t seed) {
    if (frequencies < 1) throw Error(ErrorCode::kInvalidArgument, "frequency count must be >= 1");
    FourierEncoder enc;
    enc.frequencies = frequencies;
    enc.sigma = sigma;
    enc.seed = seed;
    SplitMix64 rng(seed);
    enc.g.resize(static_cast<std::size_t>(frequencies) * 3);
    for (auto& x : enc.g) x = static_cast<float>(sigma * rng.normal());
    return enc;
  }

  int dimension() const { return 2 * frequencies; }

  /// Row i = (cos(2 pi G v_i) [F values], sin(2 pi G v_i) [F values]).
  template <typename T>
  std::vector<T> encode(std::span<const Vec3> normalized) const {
    const auto f = static_cast<std::size_t>(frequencies);
    std::vector<T> out(normalized.size() * 2 * f);
    for (std::size_t i = 0; i < normalized.size(); ++i) {
      const Vec3& v = normalized[i];
      if (v.cwiseAbs().maxCoeff() > 1.0 + 1e-6) {
        throw Error(ErrorCode::kUnnormalizedInput,
                    "vertex " + std::to_string(i) + " lies outside [-1,1]^3; normalize positions first");
      }
      T* row = out.data() + i * 2 * f;
      for (std::size_t k = 0; k < f; ++k) {
        const double phase = 2.0 * std::numbers::pi *
                             (static_cast<double>(g[3 * k]) * v.x() + static_cast<double>(g[3 * k + 1]) * v.y() +
                              static_cast<double>(g[3 * k + 2]) * v.z());
        row[k] = static_cast<T>(std::cos(phase));
        row[f + k] = static_cast<T>(std::sin(phase));
      }
    }
    return out;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (float x : g) s += static_cast<double>(x) * x;
    return std::sqrt(s);
  }
};

/// Forward activations kept for the backward pass.
template <typename T>
struct MlpCache {
  std::size_t rows = 0;
  std::uint64_t version = 0;
  std::vector<std::vector<T>> inputs;  // input to each layer (features, then rectified hidden)
  std::vector<T> tanh_out;             // rows x 3
  std::vector<T> rgb;                  // rows x 3, (tanh + 1) / 2
};

/// Fully connected network [in, h x hidden_layers, 3]: rectifier hidden
/// activations, tanh output mapped to [0,1] by (x + 1) / 2.
///
/// Parameters live in one flat array, layer by layer: weight (fan_in x fan_out,
/// row-major) then bias (fan_out). Every output row is computed with the same
/// operation order regardless of batch composition or worker count, so
/// results are bit-reproducible.
template <typename T>
class Mlp {
 public:
  static constexpr std::size_t kRowChunk = 256;

  Mlp() = default;

  explicit Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "network needs at least two layer sizes");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      weight_offset_.push_back(offset);
      offset += static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
      bias_offset_.push_back(offset);
      offset += static_cast<std::size_t>(dims_[l + 1]);
    }
    params_.assign(offset, T(0));
  }

  static std::vector<int> standard_dims(int input, int hidden, int hidden_layers = 6) {
    std::vector<int> d{input};
    for (int i = 0; i < hidden_layers; ++i) d.push_back(hidden);
    d.push_back(3);
    return d;
  }

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  void init_glorot(std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (std::size_t l = 0; l < layers(); ++l) {
      const double limit = std::sqrt(6.0 / (dims_[l] + dims_[l + 1]));
      auto w = weights(l);
      for (auto& x : w) x = static_cast<T>(rng.uniform(-limit, limit));
      auto b = bias(l);
      std::fill(b.begin(), b.end(), T(0));
    }
    ++version_;
  }

  const std::vector<int>& dims() const { return dims_; }
  std::size_t layers() const { return dims_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }
  std::uint64_t version() const { return version_; }

  std::span<const T> params() const { return params_; }
  /// Mutable access invalidates outstanding forward caches.
  std::span<T> params_mut() {
    ++version_;
    return params_;
  }

  std::span<T> weights(std::size_t l) {
    return {params_.data() + weight_offset_[l], static_cast<std::size_t>(dims_[l]) * dims_[l + 1]};
  }
  std::span<const T> weights(std::size_t l) const {
    return {params_.data() + weight_offset_[l], static_cast<std::size_t>(dims_[l]) * dims_[l + 1]};
  }
  std::span<T> bias(std::size_t l) { return {params_.data() + bias_offset_[l], static_cast<std::size_t>(dims_[l + 1])}; }
  std::span<const T> bias(std::size_t l) const {
    return {params_.data() + bias_offset_[l], static_cast<std::size_t>(dims_[l + 1])};
  }
  std::size_t weight_offset(std::size_t l) const { return weight_offset_[l]; }
  std::size_t bias_offset(std::size_t l) const { return bias_offset_[l]; }

  MlpCache<T> forward(std::span<const T> features, std::size_t rows) const {
    const auto in = static_cast<std::size_t>(dims_.front());
    if (features.size() != rows * in) {
      throw Error(ErrorCode::kDimensionMismatch, "feature matrix has " + std::to_string(features.size()) +
                                                     " values, expected " + std::to_string(rows) + " x " +
                                                     std::to_string(in));
    }
    MlpCache<T> cache;
    cache.rows = rows;
    cache.version = version_;
    cache.inputs.resize(layers());
    cache.inputs[0].assign(features.begin(), features.end());
    for (std::size_t l = 1; l < layers(); ++l) cache.inputs[l].assign(rows * dims_[l], T(0));
    cache.tanh_out.assign(rows * 3, T(0));
    cache.rgb.assign(rows * 3, T(0));

    parallel_chunks(rows, kRowChunk, [&](std::size_t begin, std::size_t end, std::size_t) {
      std::vector<T> z;
      for (std::size_t l = 0; l < layers(); ++l) {
        const auto din = static_cast<std::size_t>(dims_[l]);
        const auto dout = static_cast<std::size_t>(dims_[l + 1]);
        const auto w = weights(l);
        const auto b = bias(l);
        z.resize(dout);
        for (std::size_t i = begin; i < end; ++i) {
          const T* a = cache.inputs[l].data() + i * din;
          std::copy(b.begin(), b.end(), z.begin());
          for (std::size_t k = 0; k < din; ++k) {
            const T ak = a[k];
            if (ak == T(0)) continue;
            const T* wk = w.data() + k * dout;
            for (std::size_t j = 0; j < dout; ++j) z[j] += ak * wk[j];
          }
          if (l + 1 < layers()) {
            T* next = cache.inputs[l + 1].data() + i * dout;
            for (std::size_t j = 0; j < dout; ++j) next[j] = z[j] > T(0) ? z[j] : T(0);
          } else {
            for (std::size_t j = 0; j < dout; ++j) {
              const T t = std::tanh(z[j]);
              cache.tanh_out[i * 3 + j] = t;
              cache.rgb[i * 3 + j] = (t + T(1)) / T(2);
            }
          }
        }
      }
    });
    return cache;
  }

  /// Gradient of sum_i grad_rgb[i] . rgb[i] with respect to every parameter,
  /// in the flat parameter layout.
  std::vector<T> backward(const MlpCache<T>& cache, std::span<const T> grad_rgb) const {
    if (cache.version != version_) {
      throw Error(ErrorCode::kStaleCache, "forward cache predates the current parameters");
    }
    if (grad_rgb.size() != cache.rows * 3) {
      throw Error(ErrorCode::kDimensionMismatch, "rgb gradient has " + std::to_string(grad_rgb.size()) +
                                                     " values, expected " + std::to_string(cache.rows * 3));
    }
    const std::size_t rows = cache.rows;
    const std::size_t chunks = (rows + kRowChunk - 1) / kRowChunk;

    // Transposed weights for the input-gradient pass.
    std::vector<std::vector<T>> wt(layers());
    for (std::size_t l = 1; l < layers(); ++l) {
      const auto din = static_cast<std::size_t>(dims_[l]);
      const auto dout = static_cast<std::size_t>(dims_[l + 1]);
      const auto w = weights(l);
      wt[l].resize(din * dout);
      for (std::size_t k = 0; k < din; ++k)
        for (std::size_t j = 0; j < dout; ++j) wt[l][j * din + k] = w[k * dout + j];
    }

    std::vector<std::vector<T>> partial(chunks);
    parallel_chunks(rows, kRowChunk, [&](std::size_t begin, std::size_t end, std::size_t c) {
      auto& grad = partial[c];
      grad.assign(params_.size(), T(0));
      const std::size_t n = end - begin;
      std::vector<T> dz(n * 3), da;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          const T t = cache.tanh_out[(begin + i) * 3 + j];
          dz[i * 3 + j] = grad_rgb[(begin + i) * 3 + j] * T(0.5) * (T(1) - t * t);
        }
      }
      for (std::size_t l = layers(); l-- > 0;) {
        const auto din = static_cast<std::size_t>(dims_[l]);
        const auto dout = static_cast<std::size_t>(dims_[l + 1]);
        T* gw = grad.data() + weight_offset_[l];
        T* gb = grad.data() + bias_offset_[l];
        for (std::size_t i = 0; i < n; ++i) {
          const T* a = cache.inputs[l].data() + (begin + i) * din;
          const T* d = dz.data() + i * dout;
          for (std::size_t j = 0; j < dout; ++j) gb[j] += d[j];
          for (std::size_t k = 0; k < din; ++k) {
            const T ak = a[k];
            if (ak == T(0)) continue;
            T* row = gw + k * dout;
            for (std::size_t j = 0; j < dout; ++j) row[j] += ak * d[j];
          }
        }
        if (l == 0) break;
        da.assign(n * din, T(0));
        for (std::size_t i = 0; i < n; ++i) {
          const T* d = dz.data() + i * dout;
          T* out = da.data() + i * din;
          for (std::size_t j = 0; j < dout; ++j) {
            const T dj = d[j];
            if (dj == T(0)) continue;
            const T* col = wt[l].data() + j * din;
            for (std::size_t k = 0; k < din; ++k) out[k] += dj * col[k];
          }
          const T* a = cache.inputs[l].data() + (begin + i) * din;
          for (std::size_t k = 0; k < din; ++k) {
            if (!(a[k] > T(0))) out[k] = T(0);
          }
        }
        dz.swap(da);
      }
    });

    std::vector<T> grad(params_.size(), T(0));
    for (const auto& p : partial) {
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += p[k];
    }
    return grad;
  }

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::vector<T> params_;
  std::uint64_t version_ = 0;
};

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamSettings settings;
  std::uint64_t step = 0;
  std::vector<T> m;
  std::vector<T> v;

  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamSettings s)
      : settings(s), m(parameter_count, T(0)), v(parameter_count, T(0)) {}
};

enum class StepResult { kApplied, kSkippedNonFinite };

/// Bias-corrected Adam update. A gradient containing NaN/Inf leaves both the
/// parameters and the state untouched.
template <typename T>
StepResult adam_step(AdamState<T>& state, std::span<T> params, std::span<const T> grads) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "optimizer state, parameters and gradients differ in size");
  }
  for (T g : grads) {
    if (!std::isfinite(g)) return StepResult::kSkippedNonFinite;
  }
  ++state.step;
  const auto& s = state.settings;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(s.beta1, t);
  const double correction2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = s.beta1 * state.m[i] + (1.0 - s.beta1) * g;
    const double v = s.beta2 * state.v[i] + (1.0 - s.beta2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    const double update = s.learning_rate * (m / correction1) / (std::sqrt(v / correction2) + s.epsilon);
    params[i] = static_cast<T>(params[i] - update);
  }
  return StepResult::kApplied;
}

struct ModelSettings {
  int frequencies = 128;
  double sigma = 5.0;
  int hidden = 256;
  int hidden_layers = 6;
  AdamSettings adam;
};

/// Everything a checkpoint holds: encoder, network, optimizer state, and the
/// normalization the encoder was fitted to.
struct TextureModel {
  FourierEncoder encoder;
  Mlp<float> mlp;
  AdamState<float> optimizer;
  BoundingBoxNormalizer normalizer;
  std::uint64_t vertex_count = 0;

  static TextureModel create(const TriMesh& mesh, const ModelSettings& settings, std::uint64_t seed);

  std::vector<float> features(std::span<const Vec3> positions) const;
  /// Per-vertex linear RGB for the given mesh positions.
  std::vector<Vec3> colors(std::span<const Vec3> positions) const;
};

/// Layout (little-endian): "MBRUSH01", uint32 F, float64 sigma, uint64 seed,
/// uint32 layer-size count, uint32 sizes..., float64 normalizer center xyz,
/// float64 half extent, uint64 vertex count, then float32 tensors G, network
/// parameters (per layer: weight fan_in x fan_out, bias), followed by the
/// optimizer block: uint64 step, float64 lr, beta1, beta2, epsilon, float32
/// first moments, float32 second moments.
void save_checkpoint(const TextureModel& model, const std::filesystem::path& path);
TextureModel load_checkpoint(const std::filesystem::path& path);

}  // namespace lumenpaint
