#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lumenpaint/error.hpp"
#include "lumenpaint/fixture.hpp"
#include "lumenpaint/parallel.hpp"
#include "lumenpaint/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lumenpaint;

namespace {

// Single-line, machine-parsable: key=value pairs, message JSON-quoted.
void report_error(std::string_view code, const std::string& message) {
  std::cerr << "error code=" << code << " message=" << nlohmann::json(message).dump() << std::endl;
}

void report_ok(const char* command, const CommandStatus& st) {
  std::cout << "ok command=" << command << " skipped=" << (st.skipped ? "true" : "false")
            << " outputs=" << st.outputs.size() << std::endl;
}

// Applies "a.b.c=value" where value is JSON, or a bare string if it does not parse.
void apply_set(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::kConfig, "--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = nlohmann::json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

MockMode parse_mode(const std::string& s) {
  if (s == "consistent") return MockMode::kConsistent;
  if (s == "jittered") return MockMode::kJittered;
  throw Error(ErrorCode::kInvalidArgument, "mode must be consistent or jittered, got '" + s + "'");
}

ShadingMode parse_shading(const std::string& s) {
  if (s == "unlit") return ShadingMode::kUnlit;
  if (s == "headlight") return ShadingMode::kHeadlight;
  throw Error(ErrorCode::kInvalidArgument, "shading must be unlit or headlight, got '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn per-vertex mesh colors from styled renderings and evaluate fly-through consistency"};
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 1;
  bool force = false;
  std::string workspace;
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::Range(1, 1024));
  app.add_flag("--force", force, "Rerun even when inputs are unchanged");
  app.add_option("--workspace", workspace, "Workspace directory (default: $LUMENPAINT_WORKSPACE or ./workspace)");

  auto* prepare = app.add_subcommand("prepare", "Load mesh, extract skeleton, place cameras, render views and heatmaps");
  std::string config_path;
  std::vector<std::string> sets;
  std::string mesh_override;
  std::optional<int> views_override;
  std::optional<std::uint64_t> seed_prepare;
  prepare->add_option("--config", config_path, "Pipeline config JSON")->required();
  prepare->add_option("--mesh", mesh_override, "Override the mesh path");
  prepare->add_option("--views", views_override, "Override the number of views");
  prepare->add_option("--seed", seed_prepare, "Override the seed");
  prepare->add_option("--set", sets, "Override any config key, e.g. --set image.width=128");

  auto* stylize = app.add_subcommand("stylize-mock", "Write deterministic stand-in style targets");
  std::string mode = "consistent";
  std::optional<std::uint64_t> seed_mock;
  stylize->add_option("--mode", mode, "consistent or jittered");
  stylize->add_option("--seed", seed_mock, "Seed (default: the workspace seed)");

  auto* train_cmd = app.add_subcommand("train", "Fit the texture network to the targets");
  std::string targets;
  TrainOverrides overrides;
  train_cmd->add_option("--targets", targets, "Directory holding B_<pose_id>.png (default: <workspace>/targets)");
  train_cmd->add_option("--epochs", overrides.epochs, "Override epochs");
  train_cmd->add_option("--seed", overrides.seed, "Override the seed");
  train_cmd->add_option("--checkpoint-every", overrides.checkpoint_every, "Epochs between checkpoints (0: final only)");

  auto* bake_cmd = app.add_subcommand("bake", "Evaluate the network at every vertex and write a colored PLY");
  std::string checkpoint;
  std::string bake_out;
  bake_cmd->add_option("--checkpoint", checkpoint, "Checkpoint (default: <workspace>/checkpoints/final.mbrush)");
  bake_cmd->add_option("--out", bake_out, "Output PLY")->required();

  auto* render_cmd = app.add_subcommand("render", "Render a fly-through and export an SfM bundle");
  RenderOptions render_options;
  std::string render_checkpoint, colored_mesh, render_shading, render_out;
  bool untextured = false;
  render_cmd->add_option("--checkpoint", render_checkpoint, "Texture from a checkpoint");
  render_cmd->add_option("--colored-mesh", colored_mesh, "Texture from a baked PLY");
  render_cmd->add_flag("--untextured", untextured, "Uniform base color (default when no texture is given)");
  render_cmd->add_option("--frames-per-segment", render_options.frames_per_segment, "Frames between stations");
  render_cmd->add_option("--shading", render_shading, "unlit or headlight");
  render_cmd->add_option("--out", render_out, "Bundle directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Feature-matching consistency report over frame gaps");
  std::string bundle_a, bundle_b, eval_mesh, eval_out;
  EvalOptions eval_options;
  eval_cmd->add_option("--bundle", bundle_a, "Bundle to evaluate")->required();
  eval_cmd->add_option("--bundle-b", bundle_b, "Second bundle to evaluate alongside");
  eval_cmd->add_option("--mesh", eval_mesh, "Geometry for 3D verification (default: <bundle>/mesh.ply)");
  eval_cmd->add_option("--k", eval_options.gaps, "Frame gaps")->delimiter(',');
  eval_cmd->add_option("--threshold", eval_options.settings.detector.threshold, "Segment-test threshold");
  eval_cmd->add_option("--max-keypoints", eval_options.settings.detector.max_keypoints, "Keypoints per frame");
  eval_cmd->add_option("--max-hamming", eval_options.settings.max_hamming, "Hamming acceptance threshold");
  eval_cmd->add_option("--tolerance", eval_options.settings.tolerance, "3D correctness tolerance in mm");
  eval_cmd->add_option("--out", eval_out, "Output prefix for .csv and .json")->required();

  auto* fixture_cmd = app.add_subcommand("make-fixture", "Write the bundled bent-tube test mesh");
  std::string fixture_out;
  fixture_cmd->add_option("--out", fixture_out, "Output PLY")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  }

  try {
    set_worker_count(threads);
    const Workspace ws{resolve_workspace(workspace.empty() ? std::nullopt : std::optional<fs::path>(workspace))};

    if (*prepare) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw Error(ErrorCode::kConfig, "config: cannot read " + config_path);
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfig, "config: " + config_path + ": " + e.what());
      }
      const fs::path base = fs::path(config_path).parent_path();
      if (!mesh_override.empty()) doc["mesh"] = fs::absolute(mesh_override).string();
      if (views_override) doc["views"] = *views_override;
      if (seed_prepare) doc["seed"] = *seed_prepare;
      for (const auto& s : sets) apply_set(doc, s);
      report_ok("prepare", cmd_prepare(config_from_json(doc, base), ws, force));
    } else if (*stylize) {
      std::uint64_t seed = 0;
      if (seed_mock) {
        seed = *seed_mock;
      } else {
        seed = open_workspace(ws).config.seed;
      }
      report_ok("stylize-mock", cmd_stylize_mock(ws, parse_mode(mode), seed, force));
    } else if (*train_cmd) {
      const fs::path dir = targets.empty() ? ws.targets() : fs::path(targets);
      const auto st = cmd_train(ws, dir, overrides, force);
      report_ok("train", st);
    } else if (*bake_cmd) {
      const fs::path ckpt = checkpoint.empty() ? ws.checkpoints() / "final.mbrush" : fs::path(checkpoint);
      report_ok("bake", cmd_bake(ws, ckpt, bake_out, force));
    } else if (*render_cmd) {
      if (untextured && (!render_checkpoint.empty() || !colored_mesh.empty())) {
        throw Error(ErrorCode::kInvalidArgument, "--untextured cannot be combined with a texture source");
      }
      if (!render_checkpoint.empty()) render_options.checkpoint = render_checkpoint;
      if (!colored_mesh.empty()) render_options.colored_mesh = colored_mesh;
      if (!render_shading.empty()) render_options.shading = parse_shading(render_shading);
      report_ok("render", cmd_render(ws, render_options, render_out, force));
    } else if (*eval_cmd) {
      if (!eval_mesh.empty()) eval_options.mesh = eval_mesh;
      const auto st = cmd_eval(bundle_a, bundle_b.empty() ? std::nullopt : std::optional<fs::path>(bundle_b),
                               eval_options, eval_out, force);
      report_ok("eval", st);
    } else if (*fixture_cmd) {
      export_mesh(make_bent_tube_fixture(), fixture_out);
      std::cout << "ok command=make-fixture outputs=1" << std::endl;
    }
  } catch (const Error& e) {
    report_error(error_code_name(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 0;
}
