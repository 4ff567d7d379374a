#include "lumenpaint/texture_model.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

namespace lumenpaint {

namespace {

constexpr char kMagic[8] = {'M', 'B', 'R', 'U', 'S', 'H', '0', '1'};

class Writer {
 public:
  template <typename V>
  void put(V value) {
    out_.append(reinterpret_cast<const char*>(&value), sizeof(V));
  }
  template <typename V>
  void put_all(std::span<const V> values) {
    for (V v : values) put(v);
  }
  void raw(const char* data, std::size_t n) { out_.append(data, n); }
  const std::string& bytes() const { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <typename V>
  V get(const char* what) {
    if (pos_ + sizeof(V) > data_.size()) {
      throw Error(ErrorCode::kTruncated, std::string("checkpoint truncated while reading ") + what);
    }
    V value;
    std::memcpy(&value, data_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return value;
  }
  template <typename V>
  void get_all(std::span<V> out, const char* what) {
    for (auto& v : out) v = get<V>(what);
  }
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t size() const { return data_.size(); }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

TextureModel TextureModel::create(const TriMesh& mesh, const ModelSettings& settings, std::uint64_t seed) {
  TextureModel model;
  // Independent streams for the frequencies and the weights.
  model.encoder = FourierEncoder::make(settings.frequencies, settings.sigma, seed);
  model.mlp = Mlp<float>(Mlp<float>::standard_dims(model.encoder.dimension(), settings.hidden, settings.hidden_layers));
  model.mlp.init_glorot(mix64(seed ^ 0x5deece66dull));
  model.optimizer = AdamState<float>(model.mlp.parameter_count(), settings.adam);
  model.normalizer = BoundingBoxNormalizer::fit(mesh.vertices);
  model.vertex_count = mesh.vertices.size();
  return model;
}

std::vector<float> TextureModel::features(std::span<const Vec3> positions) const {
  std::vector<Vec3> normalized;
  normalized.reserve(positions.size());
  for (const auto& p : positions) normalized.push_back(normalizer.apply(p));
  return encoder.encode<float>(normalized);
}

std::vector<Vec3> TextureModel::colors(std::span<const Vec3> positions) const {
  const auto feats = features(positions);
  const auto cache = mlp.forward(feats, positions.size());
  std::vector<Vec3> out(positions.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Vec3(cache.rgb[3 * i], cache.rgb[3 * i + 1], cache.rgb[3 * i + 2]);
  }
  return out;
}

void save_checkpoint(const TextureModel& model, const std::filesystem::path& path) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.put(static_cast<std::uint32_t>(model.encoder.frequencies));
  w.put(model.encoder.sigma);
  w.put(model.encoder.seed);
  const auto& dims = model.mlp.dims();
  w.put(static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) w.put(static_cast<std::uint32_t>(d));
  w.put(model.normalizer.center.x());
  w.put(model.normalizer.center.y());
  w.put(model.normalizer.center.z());
  w.put(model.normalizer.half_extent);
  w.put(model.vertex_count);
  w.put_all<float>(model.encoder.g);
  w.put_all<float>(model.mlp.params());
  const auto& opt = model.optimizer;
  w.put(opt.step);
  w.put(opt.settings.learning_rate);
  w.put(opt.settings.beta1);
  w.put(opt.settings.beta2);
  w.put(opt.settings.epsilon);
  w.put_all<float>(opt.m);
  w.put_all<float>(opt.v);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  file.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!file) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

TextureModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  Reader r(std::string((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>()));
  if (r.size() < sizeof(kMagic)) throw Error(ErrorCode::kFormat, path.string() + ": not a checkpoint (too short)");
  char magic[8];
  for (auto& c : magic) c = r.get<char>("magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kFormat, path.string() + ": bad checkpoint magic");
  }

  TextureModel model;
  const auto frequencies = r.get<std::uint32_t>("frequency count");
  const auto sigma = r.get<double>("sigma");
  const auto seed = r.get<std::uint64_t>("seed");
  const auto layer_sizes = r.get<std::uint32_t>("layer count");
  if (frequencies == 0 || frequencies > (1u << 20) || layer_sizes < 2 || layer_sizes > 64) {
    throw Error(ErrorCode::kFormat, path.string() + ": implausible checkpoint header");
  }
  std::vector<int> dims;
  for (std::uint32_t i = 0; i < layer_sizes; ++i) {
    const auto d = r.get<std::uint32_t>("layer sizes");
    if (d == 0 || d > (1u << 16)) throw Error(ErrorCode::kFormat, path.string() + ": implausible layer size");
    dims.push_back(static_cast<int>(d));
  }
  if (dims.front() != static_cast<int>(2 * frequencies) || dims.back() != 3) {
    throw Error(ErrorCode::kDimensionMismatch, path.string() + ": network input " + std::to_string(dims.front()) +
                                                   " does not match 2 x " + std::to_string(frequencies) +
                                                   " Fourier features, or output is not RGB");
  }
  model.normalizer.center.x() = r.get<double>("normalizer");
  model.normalizer.center.y() = r.get<double>("normalizer");
  model.normalizer.center.z() = r.get<double>("normalizer");
  model.normalizer.half_extent = r.get<double>("normalizer");
  model.vertex_count = r.get<std::uint64_t>("vertex count");

  model.encoder.frequencies = static_cast<int>(frequencies);
  model.encoder.sigma = sigma;
  model.encoder.seed = seed;
  model.encoder.g.resize(static_cast<std::size_t>(frequencies) * 3);
  r.get_all<float>(model.encoder.g, "frequency matrix");

  model.mlp = Mlp<float>(dims);
  r.get_all<float>(model.mlp.params_mut(), "network parameters");

  auto& opt = model.optimizer;
  opt.step = r.get<std::uint64_t>("optimizer step");
  opt.settings.learning_rate = r.get<double>("learning rate");
  opt.settings.beta1 = r.get<double>("beta1");
  opt.settings.beta2 = r.get<double>("beta2");
  opt.settings.epsilon = r.get<double>("epsilon");
  opt.m.resize(model.mlp.parameter_count());
  opt.v.resize(model.mlp.parameter_count());
  r.get_all<float>(opt.m, "first moments");
  r.get_all<float>(opt.v, "second moments");
  if (!r.at_end()) throw Error(ErrorCode::kFormat, path.string() + ": trailing bytes after checkpoint");
  return model;
}

}  // namespace lumenpaint
