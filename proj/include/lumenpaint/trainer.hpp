#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lumenpaint/heatmap.hpp"
#include "lumenpaint/raster.hpp"
#include "lumenpaint/texture_model.hpp"

namespace lumenpaint {

/// One supervision unit: pose, style target (normalized LAB), heatmap, and the
/// precomputed fragments and render operator for that pose.
struct ViewTriplet {
  int pose_id = 0;
  CameraPose pose;
  Image target;  // ColorSpace::kLab, normalized channels
  Heatmap heatmap;
  FragmentBuffer fragments;
  RenderOperator op;
};

struct TrainConfig {
  int epochs = 300;
  int views = 25;
  Intrinsics intrinsics;
  HeatmapParams heatmap;
  std::uint64_t seed = 0;
  ModelSettings model;
  ShadingMode shading = ShadingMode::kUnlit;
  /// Sum gradients over all views and take one optimizer step per epoch.
  bool accumulate_gradients = false;
  /// Replace the heatmap by a uniform weight of 1 on every rendered pixel.
  bool disable_heatmap = false;
};

/// Converts a linear RGB target into normalized LAB and pairs it with the
/// fragments, heatmap, and render operator of `pose`.
ViewTriplet make_triplet(const TriMesh& mesh, const CameraPose& pose, const Intrinsics& intrinsics,
                         const Image& target_linear, const HeatmapParams& heatmap_params,
                         ShadingMode shading = ShadingMode::kUnlit);

/// Same, reusing a heatmap computed elsewhere (e.g. loaded from a workspace).
ViewTriplet make_triplet(const TriMesh& mesh, const CameraPose& pose, const Intrinsics& intrinsics,
                         const Image& target_linear, Heatmap heatmap, ShadingMode shading);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d rendered linear RGB, width*height*3
};

/// Heatmap-weighted squared error in normalized LAB, averaged over the pixels
/// the render operator covers.
LossAndGrad loss_and_grad(const ViewTriplet& triplet, const Image& rendered, bool disable_heatmap = false);

/// Renders the triplet's view from the model's current vertex colors.
Image render_view(const TextureModel& model, const TriMesh& mesh, const ViewTriplet& triplet);
double evaluate_loss(const TextureModel& model, const TriMesh& mesh, const ViewTriplet& triplet,
                     bool disable_heatmap = false);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  std::vector<double> view_losses;  // pre-step loss for each view, pose_id order
};

struct TrainResult {
  TextureModel model;
  std::vector<EpochRecord> history;
  std::size_t skipped_steps = 0;
};

using EpochCallback = std::function<void(const EpochRecord&, const TextureModel&)>;

/// Per epoch, visits views in ascending pose_id order and takes one Adam step
/// per view (or one per epoch when accumulating).
TrainResult train(const TriMesh& mesh, std::span<const ViewTriplet> triplets, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Continues training an existing model.
TrainResult train(const TriMesh& mesh, std::span<const ViewTriplet> triplets, const TrainConfig& config,
                  TextureModel model, const EpochCallback& on_epoch = {});

/// Evaluates the network at every vertex and attaches the colors.
TriMesh bake(const TriMesh& mesh, const TextureModel& model);

enum class MockMode { kConsistent, kJittered };

inline constexpr double kMockCellSize = 0.5;    // mm
inline constexpr double kMockTileSize = 2.0;  // mm, lattice spacing of the mosaic sites

/// Stand-in for an external image-to-image stylizer. CONSISTENT colors are a
/// function of the surface point quantized to a 0.5 mm cell: seeded folds and
/// a 2 mm cellular mosaic sampled at the cell center, plus per-cell speckle.
/// JITTERED additionally rotates hue by a per-view angle drawn from the seed.
Image mock_style_image(const FragmentBuffer& frag, MockMode mode, std::uint64_t seed, int pose_id);

/// Color assigned to a world point by the CONSISTENT mock.
Vec3 mock_surface_color(const Vec3& world_point, std::uint64_t seed);

/// Rotation of a linear RGB color about the gray axis.
Vec3 rotate_hue(const Vec3& rgb, double radians);

/// Per-view hue angle used by the JITTERED mock.
double mock_jitter_angle(std::uint64_t seed, int pose_id);

}  // namespace lumenpaint
