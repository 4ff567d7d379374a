#include "lumenpaint/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include <openssl/evp.h>

#include "lumenpaint/error.hpp"
#include "lumenpaint/parallel.hpp"

namespace lumenpaint {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing

class ConfigReader {
 public:
  std::vector<std::string> problems;

  void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) problems.push_back(dotted(prefix, key) + ": unknown key");
    }
  }

  const json* section(const json& obj, const char* key, const std::string& prefix) {
    if (!obj.contains(key)) return nullptr;
    const auto& v = obj.at(key);
    if (!v.is_object()) {
      problems.push_back(dotted(prefix, key) + ": expected an object");
      return nullptr;
    }
    return &v;
  }

  void integer(const json& obj, const char* key, const std::string& prefix, int& out, long long lo, long long hi) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
      problems.push_back(dotted(prefix, key) + ": expected an integer");
      return;
    }
    const auto x = v.get<long long>();
    if (x < lo || x > hi) {
      problems.push_back(dotted(prefix, key) + ": must be in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                         "], got " + std::to_string(x));
      return;
    }
    out = static_cast<int>(x);
  }

  void unsigned64(const json& obj, const char* key, const std::string& prefix, std::uint64_t& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      problems.push_back(dotted(prefix, key) + ": expected a non-negative integer");
      return;
    }
    out = v.get<std::uint64_t>();
  }

  // lo/hi bounds are open when the matching flag is set.
  void real(const json& obj, const char* key, const std::string& prefix, double& out, double lo, double hi,
            bool lo_open = false, bool hi_open = false) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      problems.push_back(dotted(prefix, key) + ": expected a number");
      return;
    }
    const double x = v.get<double>();
    const bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
    if (!ok) {
      problems.push_back(dotted(prefix, key) + ": must be in " + (lo_open ? "(" : "[") + number(lo) + ", " +
                         number(hi) + (hi_open ? ")" : "]") + ", got " + number(x));
      return;
    }
    out = x;
  }

  void boolean(const json& obj, const char* key, const std::string& prefix, bool& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) {
      problems.push_back(dotted(prefix, key) + ": expected true or false");
      return;
    }
    out = v.get<bool>();
  }

  void shading(const json& obj, const char* key, const std::string& prefix, ShadingMode& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (v.is_string() && v.get<std::string>() == "unlit") {
      out = ShadingMode::kUnlit;
    } else if (v.is_string() && v.get<std::string>() == "headlight") {
      out = ShadingMode::kHeadlight;
    } else {
      problems.push_back(dotted(prefix, key) + ": expected \"unlit\" or \"headlight\"");
    }
  }

  // Returns false when the key is absent.
  bool path(const json& obj, const char* key, const std::string& prefix, const fs::path& base, fs::path& out,
            bool check_exists) {
    if (!obj.contains(key) || obj.at(key).is_null()) return false;
    const auto& v = obj.at(key);
    if (!v.is_string() || v.get<std::string>().empty()) {
      problems.push_back(dotted(prefix, key) + ": expected a file path");
      return true;
    }
    fs::path p = v.get<std::string>();
    if (p.is_relative() && !base.empty()) p = base / p;
    p = p.lexically_normal();
    if (check_exists && !fs::is_regular_file(p)) {
      problems.push_back(dotted(prefix, key) + ": file not found: " + p.string());
      return true;
    }
    out = p;
    return true;
  }

  static std::string dotted(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  }

  static std::string number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
  }
};

const char* shading_name(ShadingMode m) { return m == ShadingMode::kUnlit ? "unlit" : "headlight"; }

PipelineConfig parse_config(const json& doc, const fs::path& base, bool check_paths) {
  if (!doc.is_object()) throw Error(ErrorCode::kConfig, "config: top level must be a JSON object");
  ConfigReader r;
  PipelineConfig c;
  r.reject_unknown(doc, "", {"schema", "mesh", "subdivisions", "skeleton", "views", "image", "heatmap", "model",
                             "optimizer", "epochs", "checkpoint_every", "seed", "shading", "render"});
  if (!doc.contains("schema")) {
    r.problems.push_back("schema: missing (expected " + std::to_string(kConfigSchema) + ")");
  } else if (!doc.at("schema").is_number_integer() || doc.at("schema").get<long long>() != kConfigSchema) {
    r.problems.push_back("schema: unsupported version, expected " + std::to_string(kConfigSchema));
  }
  if (!r.path(doc, "mesh", "", base, c.mesh, check_paths)) r.problems.push_back("mesh: missing");
  r.integer(doc, "subdivisions", "", c.subdivisions, 0, 6);
  if (const auto* s = r.section(doc, "skeleton", "")) {
    r.reject_unknown(*s, "skeleton", {"seed", "ring_width", "import"});
    if (s->contains("seed") && !s->at("seed").is_null()) {
      int seed = 0;
      r.integer(*s, "seed", "skeleton", seed, 0, std::numeric_limits<int>::max());
      c.skeleton_seed = static_cast<std::uint32_t>(seed);
    }
    r.real(*s, "ring_width", "skeleton", c.ring_width, 0.0, 1e6, true);
    r.path(*s, "import", "skeleton", base, c.skeleton_import, check_paths);
  }
  r.integer(doc, "views", "", c.views, 1, 100000);
  if (const auto* s = r.section(doc, "image", "")) {
    r.reject_unknown(*s, "image", {"width", "height", "fov_deg", "near", "far"});
    r.integer(*s, "width", "image", c.intrinsics.width, 8, 8192);
    r.integer(*s, "height", "image", c.intrinsics.height, 8, 8192);
    r.real(*s, "fov_deg", "image", c.intrinsics.vertical_fov, 0.0, 180.0, true, true);
    r.real(*s, "near", "image", c.intrinsics.near, 0.0, 1e9, true);
    r.real(*s, "far", "image", c.intrinsics.far, 0.0, 1e9, true);
    if (c.intrinsics.far <= c.intrinsics.near) r.problems.push_back("image.far: must exceed image.near");
  }
  if (const auto* s = r.section(doc, "heatmap", "")) {
    r.reject_unknown(*s, "heatmap", {"d_max", "theta_thresh", "invert_distance", "enabled"});
    r.real(*s, "d_max", "heatmap", c.heatmap.d_max, 0.0, 1e9, true);
    r.real(*s, "theta_thresh", "heatmap", c.heatmap.theta_thresh, -1.0, 1.0);
    r.boolean(*s, "invert_distance", "heatmap", c.heatmap.invert_distance);
    r.boolean(*s, "enabled", "heatmap", c.use_heatmap);
  }
  if (const auto* s = r.section(doc, "model", "")) {
    r.reject_unknown(*s, "model", {"frequencies", "sigma", "hidden", "hidden_layers"});
    r.integer(*s, "frequencies", "model", c.model.frequencies, 1, 4096);
    r.real(*s, "sigma", "model", c.model.sigma, 0.0, 1e6, true);
    r.integer(*s, "hidden", "model", c.model.hidden, 1, 4096);
    r.integer(*s, "hidden_layers", "model", c.model.hidden_layers, 1, 64);
  }
  if (const auto* s = r.section(doc, "optimizer", "")) {
    r.reject_unknown(*s, "optimizer", {"learning_rate", "beta1", "beta2", "epsilon", "accumulate_gradients"});
    r.real(*s, "learning_rate", "optimizer", c.model.adam.learning_rate, 0.0, 1e3, true);
    r.real(*s, "beta1", "optimizer", c.model.adam.beta1, 0.0, 1.0, false, true);
    r.real(*s, "beta2", "optimizer", c.model.adam.beta2, 0.0, 1.0, false, true);
    r.real(*s, "epsilon", "optimizer", c.model.adam.epsilon, 0.0, 1.0, true);
    r.boolean(*s, "accumulate_gradients", "optimizer", c.accumulate_gradients);
  }
  r.integer(doc, "epochs", "", c.epochs, 1, 1000000);
  r.integer(doc, "checkpoint_every", "", c.checkpoint_every, 0, 1000000);
  r.unsigned64(doc, "seed", "", c.seed);
  r.shading(doc, "shading", "", c.shading);
  if (const auto* s = r.section(doc, "render", "")) {
    r.reject_unknown(*s, "render", {"frames_per_segment", "shading"});
    r.integer(*s, "frames_per_segment", "render", c.frames_per_segment, 1, 10000);
    r.shading(*s, "shading", "render", c.render_shading);
  }
  if (!r.problems.empty()) {
    std::string msg = "invalid config: ";
    for (std::size_t i = 0; i < r.problems.size(); ++i) msg += (i ? "; " : "") + r.problems[i];
    throw Error(ErrorCode::kConfig, msg);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Files

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

void make_dirs(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::string relative_name(const fs::path& p, const fs::path& root) {
  return p.lexically_relative(root).generic_string();
}

std::vector<fs::path> files_under(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Content-hash stamps

class Stamp {
 public:
  explicit Stamp(std::string command) { add("command", std::move(command)); }

  void add(const std::string& key, const std::string& value) { doc_[key] = value; }
  void add_file(const std::string& key, const fs::path& path) {
    doc_[key] = fs::is_regular_file(path) ? sha256_file(path) : std::string("missing");
  }
  std::string digest() const { return sha256_hex(doc_.dump()); }

 private:
  ojson doc_;
};

bool up_to_date(const fs::path& stamp_file, const std::string& digest) {
  if (!fs::is_regular_file(stamp_file)) return false;
  json s;
  try {
    s = read_json_file(stamp_file);
  } catch (const Error&) {
    return false;
  }
  if (!s.is_object() || s.value("inputs", std::string()) != digest || !s.contains("outputs")) return false;
  for (const auto& [path, hash] : s.at("outputs").items()) {
    if (!fs::is_regular_file(path) || sha256_file(path) != hash.get<std::string>()) return false;
  }
  return true;
}

CommandStatus stamped_outputs(const fs::path& stamp_file) {
  CommandStatus st;
  st.skipped = true;
  const auto s = read_json_file(stamp_file);
  for (const auto& [path, hash] : s.at("outputs").items()) st.outputs.emplace_back(path);
  return st;
}

void write_stamp(const fs::path& stamp_file, const std::string& digest, const std::vector<fs::path>& outputs) {
  make_dirs(stamp_file.parent_path());
  ojson s;
  s["inputs"] = digest;
  ojson out = ojson::object();
  for (const auto& p : outputs) out[fs::absolute(p).lexically_normal().string()] = sha256_file(p);
  s["outputs"] = out;
  write_text(stamp_file, s.dump(2) + "\n");
}

std::string short_hash(const fs::path& p) {
  return sha256_hex(fs::absolute(p).lexically_normal().string()).substr(0, 16);
}

std::string format_loss(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string numbered(const char* prefix, int i, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%d%s", prefix, i, suffix);
  return buf;
}

}  // namespace

PipelineConfig config_from_json(const json& doc, const fs::path& base_dir) {
  return parse_config(doc, base_dir, true);
}

PipelineConfig load_config(const fs::path& path) {
  return config_from_json(read_json_file(path), path.parent_path());
}

ojson config_to_json(const PipelineConfig& c) {
  ojson j;
  j["schema"] = kConfigSchema;
  j["mesh"] = c.mesh.string();
  j["subdivisions"] = c.subdivisions;
  ojson sk;
  sk["seed"] = c.skeleton_seed ? ojson(*c.skeleton_seed) : ojson(nullptr);
  sk["ring_width"] = c.ring_width;
  sk["import"] = c.skeleton_import.empty() ? ojson(nullptr) : ojson(c.skeleton_import.string());
  j["skeleton"] = sk;
  j["views"] = c.views;
  j["image"] = {{"width", c.intrinsics.width},
                {"height", c.intrinsics.height},
                {"fov_deg", c.intrinsics.vertical_fov},
                {"near", c.intrinsics.near},
                {"far", c.intrinsics.far}};
  j["heatmap"] = {{"d_max", c.heatmap.d_max},
                  {"theta_thresh", c.heatmap.theta_thresh},
                  {"invert_distance", c.heatmap.invert_distance},
                  {"enabled", c.use_heatmap}};
  j["model"] = {{"frequencies", c.model.frequencies},
                {"sigma", c.model.sigma},
                {"hidden", c.model.hidden},
                {"hidden_layers", c.model.hidden_layers}};
  j["optimizer"] = {{"learning_rate", c.model.adam.learning_rate},
                    {"beta1", c.model.adam.beta1},
                    {"beta2", c.model.adam.beta2},
                    {"epsilon", c.model.adam.epsilon},
                    {"accumulate_gradients", c.accumulate_gradients}};
  j["epochs"] = c.epochs;
  j["checkpoint_every"] = c.checkpoint_every;
  j["seed"] = c.seed;
  j["shading"] = shading_name(c.shading);
  j["render"] = {{"frames_per_segment", c.frames_per_segment}, {"shading", shading_name(c.render_shading)}};
  return j;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

fs::path Workspace::render(int pose_id) const { return root / "renders" / numbered("A_", pose_id, ".png"); }
fs::path Workspace::heatmap(int pose_id) const { return root / "heatmaps" / numbered("H_", pose_id, ".f32"); }

std::string target_name(int pose_id) { return numbered("B_", pose_id, ".png"); }

fs::path resolve_workspace(const std::optional<fs::path>& explicit_root) {
  if (explicit_root && !explicit_root->empty()) return *explicit_root;
  if (const char* env = std::getenv("LUMENPAINT_WORKSPACE"); env && *env) return env;
  return "workspace";
}

TriMesh prepare_mesh(const PipelineConfig& config) {
  TriMesh mesh = subdivide(load_mesh(config.mesh), config.subdivisions);
  mesh.colors.reset();
  round_to_float(mesh);
  return mesh;
}

SkeletonGraph prepare_skeleton(const TriMesh& mesh, const PipelineConfig& config) {
  if (!config.skeleton_import.empty()) return load_skeleton(config.skeleton_import);
  if (config.skeleton_seed && *config.skeleton_seed >= mesh.vertices.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "skeleton.seed " + std::to_string(*config.skeleton_seed) +
                                                 " is not a vertex of the " +
                                                 std::to_string(mesh.vertices.size()) + "-vertex mesh");
  }
  return skeletonize(mesh, config.skeleton_seed, config.ring_width);
}

std::vector<CameraPose> station_poses(const SkeletonGraph& skeleton, int views) {
  const auto stations = sample_camera_stations(skeleton, static_cast<std::size_t>(views));
  const auto ordered = order_by_depth(skeleton, stations);
  return build_poses(skeleton, ordered);
}

void prepare_views(const TriMesh& mesh, const SkeletonGraph& skeleton, const PipelineConfig& config,
                   const Workspace& ws) {
  const auto poses = station_poses(skeleton, config.views);
  make_dirs(ws.root / "renders");
  make_dirs(ws.root / "heatmaps");
  export_mesh(mesh, ws.mesh());
  write_text(ws.skeleton(), skeleton_to_json(skeleton).dump(2) + "\n");
  write_text(ws.poses(), poses_to_json(poses).dump(2) + "\n");

  const std::vector<Vec3> base(mesh.vertices.size(), untextured_color());
  parallel_for(poses.size(), [&](std::size_t i) {
    const auto& pose = poses[i];
    const auto frag = rasterize(mesh, pose, config.intrinsics);
    write_png_rgb(ws.render(pose.pose_id), encode_srgb8(shade(mesh, base, frag, ShadingMode::kHeadlight, pose)));
    save_heatmap(compute_heatmap(frag, pose, config.heatmap), ws.heatmap(pose.pose_id));
  });

  ojson manifest;
  manifest["schema"] = kConfigSchema;
  manifest["config"] = config_to_json(config);
  manifest["seed"] = config.seed;
  manifest["mesh_source_sha256"] = sha256_file(config.mesh);
  manifest["vertices"] = mesh.vertices.size();
  manifest["faces"] = mesh.faces.size();
  ojson views = ojson::array();
  for (const auto& p : poses) {
    views.push_back({{"pose_id", p.pose_id},
                     {"render", relative_name(ws.render(p.pose_id), ws.root)},
                     {"heatmap", relative_name(ws.heatmap(p.pose_id), ws.root)}});
  }
  manifest["views"] = views;
  ojson artifacts = ojson::object();
  std::vector<fs::path> files = {ws.mesh(), ws.skeleton(), ws.poses()};
  for (const auto& p : poses) files.push_back(ws.render(p.pose_id));
  for (const auto& p : poses) files.push_back(ws.heatmap(p.pose_id));
  for (const auto& f : files) artifacts[relative_name(f, ws.root)] = sha256_file(f);
  manifest["artifacts"] = artifacts;
  write_text(ws.manifest(), manifest.dump(2) + "\n");
}

PreparedWorkspace open_workspace(const Workspace& ws) {
  if (!fs::is_regular_file(ws.manifest()) || !fs::is_regular_file(ws.mesh()) || !fs::is_regular_file(ws.poses())) {
    throw Error(ErrorCode::kMissingFragments,
                ws.root.string() + " is not a prepared workspace (run prepare first)");
  }
  const auto manifest = read_json_file(ws.manifest());
  PreparedWorkspace out;
  out.config = parse_config(manifest.at("config"), {}, false);
  out.mesh = load_mesh(ws.mesh());
  out.poses = poses_from_json(read_json_file(ws.poses()));
  if (manifest.contains("vertices") && manifest.at("vertices").get<std::size_t>() != out.mesh.vertices.size()) {
    throw Error(ErrorCode::kMismatchedMesh, ws.mesh().string() + " no longer matches the manifest");
  }
  return out;
}

fs::path mock_stylize(const Workspace& ws, MockMode mode, std::uint64_t seed) {
  const auto prepared = open_workspace(ws);
  make_dirs(ws.targets());
  parallel_for(prepared.poses.size(), [&](std::size_t i) {
    const auto& pose = prepared.poses[i];
    const auto frag = rasterize(prepared.mesh, pose, prepared.config.intrinsics);
    write_png_rgb(ws.targets() / target_name(pose.pose_id),
                  encode_srgb8(mock_style_image(frag, mode, seed, pose.pose_id)));
  });
  return ws.targets();
}

std::vector<ViewTriplet> ingest_targets(const PreparedWorkspace& prepared, const Workspace& ws,
                                        const fs::path& targets_dir) {
  const auto& intr = prepared.config.intrinsics;
  for (const auto& pose : prepared.poses) {
    const auto path = targets_dir / target_name(pose.pose_id);
    if (!fs::is_regular_file(path)) {
      throw Error(ErrorCode::kMissingTarget,
                  "no target for pose " + std::to_string(pose.pose_id) + ": " + path.string() + " not found");
    }
  }
  std::vector<ViewTriplet> triplets(prepared.poses.size());
  parallel_for(prepared.poses.size(), [&](std::size_t i) {
    const auto& pose = prepared.poses[i];
    const auto rgb = read_png_rgb(targets_dir / target_name(pose.pose_id));
    if (rgb.width != intr.width || rgb.height != intr.height) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "target for pose " + std::to_string(pose.pose_id) + " is " + std::to_string(rgb.width) + "x" +
                      std::to_string(rgb.height) + ", renders are " + std::to_string(intr.width) + "x" +
                      std::to_string(intr.height));
    }
    triplets[i] = make_triplet(prepared.mesh, pose, intr, decode_srgb8(rgb), load_heatmap(ws.heatmap(pose.pose_id)),
                               prepared.config.shading);
  });
  return triplets;
}

void write_loss_log(const std::vector<EpochRecord>& history, const fs::path& path) {
  make_dirs(path.parent_path());
  std::string text = "epoch,mean_loss";
  const std::size_t views = history.empty() ? 0 : history.front().view_losses.size();
  for (std::size_t v = 0; v < views; ++v) text += ",view_" + std::to_string(v);
  text += '\n';
  for (const auto& r : history) {
    text += std::to_string(r.epoch) + "," + format_loss(r.mean_loss);
    for (double l : r.view_losses) text += "," + format_loss(l);
    text += '\n';
  }
  write_text(path, text);
}

CommandStatus cmd_prepare(const PipelineConfig& config, const Workspace& ws, bool force) {
  Stamp stamp("prepare");
  stamp.add("config", config_to_json(config).dump());
  stamp.add_file("mesh", config.mesh);
  if (!config.skeleton_import.empty()) stamp.add_file("skeleton", config.skeleton_import);
  const auto stamp_file = ws.stamps() / "prepare.json";
  const auto digest = stamp.digest();
  if (!force && up_to_date(stamp_file, digest)) return stamped_outputs(stamp_file);

  const auto mesh = prepare_mesh(config);
  const auto skeleton = prepare_skeleton(mesh, config);
  prepare_views(mesh, skeleton, config, ws);

  CommandStatus st;
  st.outputs = {ws.manifest(), ws.mesh(), ws.skeleton(), ws.poses()};
  for (const auto& f : files_under(ws.root / "renders")) st.outputs.push_back(f);
  for (const auto& f : files_under(ws.root / "heatmaps")) st.outputs.push_back(f);
  write_stamp(stamp_file, digest, st.outputs);
  return st;
}

CommandStatus cmd_stylize_mock(const Workspace& ws, MockMode mode, std::uint64_t seed, bool force) {
  Stamp stamp("stylize-mock");
  stamp.add_file("manifest", ws.manifest());
  stamp.add("mode", mode == MockMode::kConsistent ? "consistent" : "jittered");
  stamp.add("seed", std::to_string(seed));
  const auto stamp_file = ws.stamps() / "stylize-mock.json";
  const auto digest = stamp.digest();
  if (!force && up_to_date(stamp_file, digest)) return stamped_outputs(stamp_file);

  const auto dir = mock_stylize(ws, mode, seed);
  CommandStatus st;
  const auto poses = poses_from_json(read_json_file(ws.poses()));
  for (const auto& p : poses) st.outputs.push_back(dir / target_name(p.pose_id));
  write_stamp(stamp_file, digest, st.outputs);
  return st;
}

CommandStatus cmd_train(const Workspace& ws, const fs::path& targets_dir, const TrainOverrides& overrides,
                        bool force) {
  auto prepared = open_workspace(ws);
  auto& cfg = prepared.config;
  if (overrides.epochs) cfg.epochs = *overrides.epochs;
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.checkpoint_every) cfg.checkpoint_every = *overrides.checkpoint_every;
  if (cfg.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");

  Stamp stamp("train");
  stamp.add_file("manifest", ws.manifest());
  stamp.add("config", config_to_json(cfg).dump());
  for (const auto& p : prepared.poses) stamp.add_file("target_" + std::to_string(p.pose_id), targets_dir / target_name(p.pose_id));
  const auto stamp_file = ws.stamps() / "train.json";
  const auto digest = stamp.digest();
  if (!force && up_to_date(stamp_file, digest)) return stamped_outputs(stamp_file);

  const auto triplets = ingest_targets(prepared, ws, targets_dir);
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.views = static_cast<int>(triplets.size());
  tc.intrinsics = cfg.intrinsics;
  tc.heatmap = cfg.heatmap;
  tc.seed = cfg.seed;
  tc.model = cfg.model;
  tc.shading = cfg.shading;
  tc.accumulate_gradients = cfg.accumulate_gradients;
  tc.disable_heatmap = !cfg.use_heatmap;

  make_dirs(ws.checkpoints());
  CommandStatus st;
  std::vector<EpochRecord> history;
  auto on_epoch = [&](const EpochRecord& record, const TextureModel& model) {
    history.push_back(record);
    write_loss_log(history, ws.loss_log());
    const int done = record.epoch + 1;
    if (cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 && done < cfg.epochs) {
      const auto path = ws.checkpoints() / numbered("epoch_", done, ".mbrush");
      save_checkpoint(model, path);
      st.outputs.push_back(path);
    }
  };
  const auto result = train(prepared.mesh, triplets, tc, on_epoch);
  const auto final_path = ws.checkpoints() / "final.mbrush";
  save_checkpoint(result.model, final_path);
  st.outputs.push_back(final_path);
  st.outputs.push_back(ws.loss_log());
  write_stamp(stamp_file, digest, st.outputs);
  return st;
}

CommandStatus cmd_bake(const Workspace& ws, const fs::path& checkpoint, const fs::path& out_ply, bool force) {
  Stamp stamp("bake");
  stamp.add_file("mesh", ws.mesh());
  stamp.add_file("checkpoint", checkpoint);
  const auto stamp_file = ws.stamps() / ("bake_" + short_hash(out_ply) + ".json");
  const auto digest = stamp.digest();
  if (!force && up_to_date(stamp_file, digest)) return stamped_outputs(stamp_file);

  const auto prepared = open_workspace(ws);
  const auto model = load_checkpoint(checkpoint);
  if (out_ply.has_parent_path()) make_dirs(out_ply.parent_path());
  export_colored_mesh(bake(prepared.mesh, model), out_ply);
  CommandStatus st;
  st.outputs = {out_ply};
  write_stamp(stamp_file, digest, st.outputs);
  return st;
}

CommandStatus cmd_render(const Workspace& ws, const RenderOptions& options, const fs::path& out_dir, bool force) {
  if (options.checkpoint && options.colored_mesh) {
    throw Error(ErrorCode::kInvalidArgument, "give either a checkpoint or a colored mesh, not both");
  }
  const auto prepared = open_workspace(ws);
  const int fps = options.frames_per_segment.value_or(prepared.config.frames_per_segment);
  const ShadingMode shading = options.shading.value_or(prepared.config.render_shading);

  Stamp stamp("render");
  stamp.add_file("manifest", ws.manifest());
  if (options.checkpoint) stamp.add_file("checkpoint", *options.checkpoint);
  if (options.colored_mesh) stamp.add_file("colored_mesh", *options.colored_mesh);
  stamp.add("frames_per_segment", std::to_string(fps));
  stamp.add("shading", shading_name(shading));
  const auto stamp_file = ws.stamps() / ("render_" + short_hash(out_dir) + ".json");
  const auto digest = stamp.digest();
  if (!force && up_to_date(stamp_file, digest)) return stamped_outputs(stamp_file);

  std::vector<Vec3> colors;
  if (options.checkpoint) {
    colors = bake(prepared.mesh, load_checkpoint(*options.checkpoint)).colors.value();
  } else if (options.colored_mesh) {
    const auto colored = load_mesh(*options.colored_mesh);
    if (!colored.colors) throw Error(ErrorCode::kMissingColors, options.colored_mesh->string() + " has no vertex colors");
    if (colored.vertices.size() != prepared.mesh.vertices.size()) {
      throw Error(ErrorCode::kMismatchedMesh, options.colored_mesh->string() + " has " +
                                                  std::to_string(colored.vertices.size()) + " vertices, workspace mesh has " +
                                                  std::to_string(prepared.mesh.vertices.size()));
    }
    colors = *colored.colors;
  }
  const auto trajectory = interpolate_trajectory(prepared.poses, fps);
  const auto bundle = render_frames(prepared.mesh, colors, trajectory, prepared.config.intrinsics, shading);
  export_sfm_bundle(bundle, out_dir);
  export_mesh(prepared.mesh, out_dir / "mesh.ply");

  CommandStatus st;
  st.outputs = files_under(out_dir);
  write_stamp(stamp_file, digest, st.outputs);
  return st;
}

std::vector<MatchReport> evaluate_bundle(const fs::path& bundle_dir, const EvalOptions& options) {
  auto bundle = load_sfm_bundle(bundle_dir);
  const fs::path mesh_path = options.mesh.value_or(bundle_dir / "mesh.ply");
  if (!fs::is_regular_file(mesh_path)) {
    throw Error(ErrorCode::kMissingFragments, "no mesh to re-rasterize " + bundle_dir.string() + " (looked for " +
                                                  mesh_path.string() + ")");
  }
  attach_fragments(bundle, load_mesh(mesh_path));
  const auto frames = eval_frames(bundle);
  return orb_k(frames, options.gaps, options.settings);
}

CommandStatus cmd_eval(const fs::path& bundle_a, const std::optional<fs::path>& bundle_b, const EvalOptions& options,
                       const fs::path& out_prefix, bool force) {
  Stamp stamp("eval");
  auto add_bundle = [&](const std::string& tag, const fs::path& dir) {
    for (const auto& f : files_under(dir)) stamp.add_file(tag + ":" + relative_name(f, dir), f);
  };
  add_bundle("a", bundle_a);
  if (bundle_b) add_bundle("b", *bundle_b);
  if (options.mesh) stamp.add_file("mesh", *options.mesh);
  ojson opts;
  opts["gaps"] = options.gaps;
  opts["threshold"] = options.settings.detector.threshold;
  opts["max_keypoints"] = options.settings.detector.max_keypoints;
  opts["descriptor_seed"] = options.settings.descriptor_seed;
  opts["max_hamming"] = options.settings.max_hamming;
  opts["tolerance"] = options.settings.tolerance;
  stamp.add("options", opts.dump());
  const fs::path stamp_file = out_prefix.string() + ".stamp.json";
  const auto digest = stamp.digest();
  if (!force && up_to_date(stamp_file, digest)) return stamped_outputs(stamp_file);

  if (out_prefix.has_parent_path()) make_dirs(out_prefix.parent_path());
  CommandStatus st;
  auto run = [&](const fs::path& dir, const std::string& suffix) {
    const auto reports = evaluate_bundle(dir, options);
    const fs::path csv = out_prefix.string() + suffix + ".csv";
    const fs::path js = out_prefix.string() + suffix + ".json";
    write_report_csv(reports, csv);
    write_report_json(reports, js);
    st.outputs.push_back(csv);
    st.outputs.push_back(js);
  };
  run(bundle_a, "");
  if (bundle_b) run(*bundle_b, "_b");
  write_stamp(stamp_file, digest, st.outputs);
  return st;
}

}  // namespace lumenpaint
