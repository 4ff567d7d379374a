#include "lumenpaint/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "lumenpaint/color.hpp"
#include "lumenpaint/error.hpp"
#include "lumenpaint/random.hpp"

namespace lumenpaint {

namespace {

Image to_normalized_lab(const Image& linear) {
  Image lab(linear.width, linear.height, ColorSpace::kLab);
  for (std::size_t p = 0; p < linear.pixels(); ++p) {
    const double* c = linear.at(p);
    const Vec3 n = color::rgb_to_lab_normalized(Vec3(c[0], c[1], c[2]));
    double* out = lab.at(p);
    out[0] = n.x();
    out[1] = n.y();
    out[2] = n.z();
  }
  return lab;
}

std::uint64_t hash_cell(long long x, long long y, long long z, std::uint64_t seed) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ull);
  h = mix64(h ^ static_cast<std::uint64_t>(x) * 0x9E3779B97F4A7C15ull);
  h = mix64(h ^ static_cast<std::uint64_t>(y) * 0xC2B2AE3D27D4EB4Full);
  h = mix64(h ^ static_cast<std::uint64_t>(z) * 0x165667B19E3779F9ull);
  return h;
}

}  // namespace

ViewTriplet make_triplet(const TriMesh& mesh, const CameraPose& pose, const Intrinsics& intrinsics,
                         const Image& target_linear, Heatmap heatmap, ShadingMode shading) {
  if (target_linear.width != intrinsics.width || target_linear.height != intrinsics.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "target for pose " + std::to_string(pose.pose_id) + " is " + std::to_string(target_linear.width) +
                    "x" + std::to_string(target_linear.height) + ", expected " + std::to_string(intrinsics.width) +
                    "x" + std::to_string(intrinsics.height));
  }
  if (heatmap.width != intrinsics.width || heatmap.height != intrinsics.height) {
    throw Error(ErrorCode::kDimensionMismatch, "heatmap for pose " + std::to_string(pose.pose_id) +
                                                   " does not match the image size");
  }
  ViewTriplet t;
  t.pose_id = pose.pose_id;
  t.pose = pose;
  t.fragments = rasterize(mesh, pose, intrinsics);
  t.op = build_render_operator(t.fragments, mesh, shading, &pose);
  t.target = to_normalized_lab(target_linear);
  // The heatmap may only weight pixels that the operator renders.
  for (std::size_t p = 0; p < t.fragments.pixels(); ++p) {
    if (!t.fragments.fragments[p].valid()) {
      heatmap.weight[p] = 0.0;
      heatmap.valid[p] = false;
    }
  }
  t.heatmap = std::move(heatmap);
  return t;
}

ViewTriplet make_triplet(const TriMesh& mesh, const CameraPose& pose, const Intrinsics& intrinsics,
                         const Image& target_linear, const HeatmapParams& heatmap_params, ShadingMode shading) {
  const auto frag = rasterize(mesh, pose, intrinsics);
  return make_triplet(mesh, pose, intrinsics, target_linear, compute_heatmap(frag, pose, heatmap_params), shading);
}

LossAndGrad loss_and_grad(const ViewTriplet& triplet, const Image& rendered, bool disable_heatmap) {
  if (rendered.width != triplet.target.width || rendered.height != triplet.target.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "rendered image is " + std::to_string(rendered.width) + "x" + std::to_string(rendered.height) +
                    ", target is " + std::to_string(triplet.target.width) + "x" +
                    std::to_string(triplet.target.height));
  }
  LossAndGrad out;
  out.grad.assign(rendered.data.size(), 0.0);
  const auto& entries = triplet.op.entries();
  if (entries.empty()) return out;
  const double count = static_cast<double>(entries.size());
  double total = 0.0;
  for (const auto& e : entries) {
    const double* c = rendered.at(e.pixel);
    const Vec3 rgb(c[0], c[1], c[2]);
    const double* b = triplet.target.at(e.pixel);
    const Vec3 diff = color::rgb_to_lab_normalized(rgb) - Vec3(b[0], b[1], b[2]);
    const double weight = disable_heatmap ? 1.0 : triplet.heatmap.weight[e.pixel];
    if (weight == 0.0) continue;
    total += weight * diff.squaredNorm();
    const Vec3 g = (2.0 / count) * weight * (color::lab_normalized_jacobian(rgb).transpose() * diff);
    double* out_g = out.grad.data() + 3 * static_cast<std::size_t>(e.pixel);
    out_g[0] = g.x();
    out_g[1] = g.y();
    out_g[2] = g.z();
  }
  out.loss = total / count;
  return out;
}

Image render_view(const TextureModel& model, const TriMesh& mesh, const ViewTriplet& triplet) {
  return triplet.op.apply(model.colors(mesh.vertices));
}

double evaluate_loss(const TextureModel& model, const TriMesh& mesh, const ViewTriplet& triplet,
                     bool disable_heatmap) {
  return loss_and_grad(triplet, render_view(model, mesh, triplet), disable_heatmap).loss;
}

TrainResult train(const TriMesh& mesh, std::span<const ViewTriplet> triplets, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  return train(mesh, triplets, config, TextureModel::create(mesh, config.model, config.seed), on_epoch);
}

TrainResult train(const TriMesh& mesh, std::span<const ViewTriplet> triplets, const TrainConfig& config,
                  TextureModel model, const EpochCallback& on_epoch) {
  if (config.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (triplets.empty()) throw Error(ErrorCode::kInvalidArgument, "training needs at least one view");
  if (model.vertex_count != mesh.vertices.size()) {
    throw Error(ErrorCode::kMismatchedMesh, "model was created for " + std::to_string(model.vertex_count) +
                                                " vertices, mesh has " + std::to_string(mesh.vertices.size()));
  }
  for (const auto& t : triplets) {
    if (t.op.vertex_count() != mesh.vertices.size()) {
      throw Error(ErrorCode::kMismatchedMesh, "view " + std::to_string(t.pose_id) + " was built for another mesh");
    }
  }

  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return triplets[a].pose_id < triplets[b].pose_id; });

  const auto features = model.features(mesh.vertices);
  const auto width = static_cast<std::size_t>(model.encoder.dimension());
  std::vector<std::vector<std::uint32_t>> active(triplets.size());
  for (std::size_t v = 0; v < triplets.size(); ++v) active[v] = triplets[v].op.active_vertices();

  TrainResult result;
  std::vector<Vec3> colors(mesh.vertices.size(), Vec3::Zero());
  std::vector<float> accumulated;
  std::vector<float> rows;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    if (config.accumulate_gradients) accumulated.assign(model.mlp.parameter_count(), 0.0f);
    for (std::size_t idx : order) {
      const auto& triplet = triplets[idx];
      const auto& verts = active[idx];
      rows.resize(verts.size() * width);
      for (std::size_t i = 0; i < verts.size(); ++i) {
        std::copy_n(features.data() + verts[i] * width, width, rows.data() + i * width);
      }
      const auto cache = model.mlp.forward(rows, verts.size());
      for (std::size_t i = 0; i < verts.size(); ++i) {
        colors[verts[i]] = Vec3(cache.rgb[3 * i], cache.rgb[3 * i + 1], cache.rgb[3 * i + 2]);
      }
      const auto rendered = triplet.op.apply(colors);
      const auto lg = loss_and_grad(triplet, rendered, config.disable_heatmap);
      if (!std::isfinite(lg.loss)) {
        throw Error(ErrorCode::kNonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch) + ", view " +
                                                   std::to_string(triplet.pose_id));
      }
      record.view_losses.push_back(lg.loss);

      const auto vertex_grad = triplet.op.apply_transpose(lg.grad);
      std::vector<float> grad_rgb(verts.size() * 3);
      for (std::size_t i = 0; i < verts.size(); ++i) {
        for (int c = 0; c < 3; ++c) grad_rgb[3 * i + c] = static_cast<float>(vertex_grad[verts[i]][c]);
      }
      const auto grads = model.mlp.backward(cache, grad_rgb);
      if (config.accumulate_gradients) {
        for (std::size_t k = 0; k < grads.size(); ++k) accumulated[k] += grads[k];
      } else if (adam_step<float>(model.optimizer, model.mlp.params_mut(), grads) != StepResult::kApplied) {
        ++result.skipped_steps;
      }
    }
    if (config.accumulate_gradients &&
        adam_step<float>(model.optimizer, model.mlp.params_mut(), accumulated) != StepResult::kApplied) {
      ++result.skipped_steps;
    }
    record.mean_loss = std::accumulate(record.view_losses.begin(), record.view_losses.end(), 0.0) /
                       static_cast<double>(record.view_losses.size());
    if (on_epoch) on_epoch(record, model);
    result.history.push_back(std::move(record));
  }
  result.model = std::move(model);
  return result;
}

TriMesh bake(const TriMesh& mesh, const TextureModel& model) {
  if (model.vertex_count != mesh.vertices.size()) {
    throw Error(ErrorCode::kMismatchedMesh, "checkpoint was trained on " + std::to_string(model.vertex_count) +
                                                " vertices, mesh has " + std::to_string(mesh.vertices.size()));
  }
  const auto fitted = BoundingBoxNormalizer::fit(mesh.vertices);
  const double scale = std::max(1.0, std::abs(model.normalizer.half_extent));
  if ((fitted.center - model.normalizer.center).norm() > 1e-9 * scale ||
      std::abs(fitted.half_extent - model.normalizer.half_extent) > 1e-9 * scale) {
    throw Error(ErrorCode::kMismatchedMesh, "checkpoint normalization does not match this mesh's bounding box");
  }
  TriMesh out = mesh;
  out.colors = model.colors(mesh.vertices);
  return out;
}

Vec3 rotate_hue(const Vec3& rgb, double radians) {
  const Vec3 k = Vec3::Ones().normalized();
  const double c = std::cos(radians), s = std::sin(radians);
  return rgb * c + k.cross(rgb) * s + k * k.dot(rgb) * (1.0 - c);
}

double mock_jitter_angle(std::uint64_t seed, int pose_id) {
  SplitMix64 rng(mix64(seed ^ 0x243f6a8885a308d3ull) ^ mix64(static_cast<std::uint64_t>(pose_id) + 1));
  return rng.uniform(-40.0, 40.0) * std::numbers::pi / 180.0;
}

Vec3 mock_surface_color(const Vec3& world_point, std::uint64_t seed) {
  const long long cx = static_cast<long long>(std::floor(world_point.x() / kMockCellSize));
  const long long cy = static_cast<long long>(std::floor(world_point.y() / kMockCellSize));
  const long long cz = static_cast<long long>(std::floor(world_point.z() / kMockCellSize));
  const Vec3 center = (Vec3(cx, cy, cz) + Vec3::Constant(0.5)) * kMockCellSize;

  // Broad folds.
  SplitMix64 rng(mix64(seed ^ 0x13198a2e03707344ull));
  double wave = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Vec3 dir = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const double wavelength = rng.uniform(4.0, 10.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    wave += std::sin(2.0 * std::numbers::pi * dir.dot(center) / wavelength + phase);
  }
  const double folds = 0.5 + 0.5 * wave / 3.0;

  // Cells: value of the nearest jittered lattice site (a Voronoi mosaic).
  const Vec3 q = center / kMockTileSize;
  const long long bx = static_cast<long long>(std::floor(q.x()));
  const long long by = static_cast<long long>(std::floor(q.y()));
  const long long bz = static_cast<long long>(std::floor(q.z()));
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t best_hash = 0;
  for (long long dz = -1; dz <= 1; ++dz) {
    for (long long dy = -1; dy <= 1; ++dy) {
      for (long long dx = -1; dx <= 1; ++dx) {
        const auto h = hash_cell(bx + dx, by + dy, bz + dz, seed ^ 0xa4093822299f31d0ull);
        SplitMix64 site(h);
        const Vec3 p(static_cast<double>(bx + dx) + site.uniform(), static_cast<double>(by + dy) + site.uniform(),
                     static_cast<double>(bz + dz) + site.uniform());
        const double d = (p - q).squaredNorm();
        if (d < best) {
          best = d;
          best_hash = site.next();
        }
      }
    }
  }
  const double cell = static_cast<double>(best_hash >> 11) * 0x1.0p-53;

  const double speckle = static_cast<double>(hash_cell(cx, cy, cz, seed) >> 11) * 0x1.0p-53;
  const double t = 0.3 * folds + 0.55 * cell + 0.15 * speckle;
  const Vec3 dark(0.45, 0.10, 0.09);
  const Vec3 light(0.95, 0.62, 0.55);
  return dark + t * (light - dark);
}

Image mock_style_image(const FragmentBuffer& frag, MockMode mode, std::uint64_t seed, int pose_id) {
  Image img(frag.width, frag.height, ColorSpace::kRgbLinear);
  const double angle = mode == MockMode::kJittered ? mock_jitter_angle(seed, pose_id) : 0.0;
  for (std::size_t p = 0; p < frag.pixels(); ++p) {
    const auto& fr = frag.fragments[p];
    if (!fr.valid()) continue;
    Vec3 c = mock_surface_color(fr.world_point, seed);
    if (mode == MockMode::kJittered) c = rotate_hue(c, angle).cwiseMax(0.0).cwiseMin(1.0);
    double* out = img.at(p);
    out[0] = c.x();
    out[1] = c.y();
    out[2] = c.z();
  }
  return img;
}

}  // namespace lumenpaint
