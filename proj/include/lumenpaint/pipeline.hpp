#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lumenpaint/bundle.hpp"
#include "lumenpaint/heatmap.hpp"
#include "lumenpaint/skeleton.hpp"
#include "lumenpaint/trainer.hpp"

namespace lumenpaint {

inline constexpr int kConfigSchema = 1;

struct PipelineConfig {
  std::filesystem::path mesh;
  int subdivisions = 1;
  std::optional<std::uint32_t> skeleton_seed;  // auto_seed when empty
  double ring_width = 3.0;
  std::filesystem::path skeleton_import;       // optional skeleton JSON
  int views = 25;
  Intrinsics intrinsics;
  HeatmapParams heatmap;
  bool use_heatmap = true;
  ModelSettings model;
  bool accumulate_gradients = false;
  int epochs = 300;
  int checkpoint_every = 50;  // 0 disables intermediate checkpoints
  std::uint64_t seed = 0;
  ShadingMode shading = ShadingMode::kUnlit;
  int frames_per_segment = 10;
  ShadingMode render_shading = ShadingMode::kHeadlight;
};

/// Parses and validates a config document. Relative paths resolve against
/// base_dir. All problems are collected into one kConfig error, each named by
/// its dotted key.
PipelineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json config_to_json(const PipelineConfig& config);

/// Hex SHA-256 of a file's bytes or of a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& data);

/// Paths inside a workspace directory.
struct Workspace {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path mesh() const { return root / "mesh.ply"; }
  std::filesystem::path poses() const { return root / "poses.json"; }
  std::filesystem::path skeleton() const { return root / "skeleton.json"; }
  std::filesystem::path render(int pose_id) const;
  std::filesystem::path heatmap(int pose_id) const;
  std::filesystem::path targets() const { return root / "targets"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path loss_log() const { return root / "logs" / "loss.csv"; }
  std::filesystem::path stamps() const { return root / "stamps"; }
};

/// Target file name for a pose inside a targets directory.
std::string target_name(int pose_id);

/// Workspace root: explicit value, else $LUMENPAINT_WORKSPACE, else "workspace".
std::filesystem::path resolve_workspace(const std::optional<std::filesystem::path>& explicit_root);

struct CommandStatus {
  bool skipped = false;  // inputs and outputs unchanged since the last run
  std::vector<std::filesystem::path> outputs;
};

/// Loads the mesh, subdivides it, and rounds positions through float32 so the
/// in-memory mesh equals what mesh.ply stores.
TriMesh prepare_mesh(const PipelineConfig& config);

SkeletonGraph prepare_skeleton(const TriMesh& mesh, const PipelineConfig& config);

/// Station poses in fly-through order; pose ids 0..views-1.
std::vector<CameraPose> station_poses(const SkeletonGraph& skeleton, int views);

/// Writes mesh.ply, skeleton.json, poses.json, renders/A_i.png,
/// heatmaps/H_i.f32 and manifest.json (config, seed, SHA-256 of every artifact).
void prepare_views(const TriMesh& mesh, const SkeletonGraph& skeleton, const PipelineConfig& config,
                   const Workspace& ws);

struct PreparedWorkspace {
  PipelineConfig config;
  TriMesh mesh;
  std::vector<CameraPose> poses;
};

/// Reads manifest, mesh and poses back.
PreparedWorkspace open_workspace(const Workspace& ws);

/// Writes targets/B_i.png for every pose.
std::filesystem::path mock_stylize(const Workspace& ws, MockMode mode, std::uint64_t seed);

std::vector<ViewTriplet> ingest_targets(const PreparedWorkspace& prepared, const Workspace& ws,
                                        const std::filesystem::path& targets_dir);

void write_loss_log(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

// Commands. Each is a no-op when a previous run with identical inputs left
// its outputs untouched, unless force is set.
CommandStatus cmd_prepare(const PipelineConfig& config, const Workspace& ws, bool force = false);
CommandStatus cmd_stylize_mock(const Workspace& ws, MockMode mode, std::uint64_t seed, bool force = false);

struct TrainOverrides {
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> checkpoint_every;
};

CommandStatus cmd_train(const Workspace& ws, const std::filesystem::path& targets_dir,
                        const TrainOverrides& overrides = {}, bool force = false);
CommandStatus cmd_bake(const Workspace& ws, const std::filesystem::path& checkpoint,
                       const std::filesystem::path& out_ply, bool force = false);

struct RenderOptions {
  std::optional<std::filesystem::path> checkpoint;    // texture from a checkpoint
  std::optional<std::filesystem::path> colored_mesh;  // or from a baked PLY
  std::optional<int> frames_per_segment;
  std::optional<ShadingMode> shading;
};

/// Renders the fly-through through the workspace's station poses and writes an
/// SfM bundle plus the geometry (mesh.ply) used for later verification.
CommandStatus cmd_render(const Workspace& ws, const RenderOptions& options, const std::filesystem::path& out_dir,
                         bool force = false);

struct EvalOptions {
  std::vector<int> gaps = {1, 5, 10};
  EvalSettings settings;
  std::optional<std::filesystem::path> mesh;  // defaults to <bundle>/mesh.ply
};

/// Writes <out_prefix>.csv and <out_prefix>.json for bundle A and, when given,
/// <out_prefix>_b.csv / _b.json for bundle B.
CommandStatus cmd_eval(const std::filesystem::path& bundle_a, const std::optional<std::filesystem::path>& bundle_b,
                       const EvalOptions& options, const std::filesystem::path& out_prefix, bool force = false);

std::vector<MatchReport> evaluate_bundle(const std::filesystem::path& bundle_dir, const EvalOptions& options);

}  // namespace lumenpaint
