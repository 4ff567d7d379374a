#include "lumenpaint/bundle.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lumenpaint/error.hpp"
#include "lumenpaint/parallel.hpp"
#include "lumenpaint/skeleton.hpp"

namespace lumenpaint {

namespace fs = std::filesystem;

namespace {

std::string numbered(const char* prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu.png", prefix, i);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace

std::vector<std::uint16_t> quantize_depth(const FragmentBuffer& fragments, const Intrinsics& intrinsics) {
  const double unit = depth_unit_mm(intrinsics);
  std::vector<std::uint16_t> out(fragments.pixels(), 0);
  for (std::size_t p = 0; p < fragments.pixels(); ++p) {
    const auto& f = fragments.fragments[p];
    if (!f.covered()) continue;
    out[p] = static_cast<std::uint16_t>(std::clamp<long>(std::lround(f.depth / unit), 1, 65535));
  }
  return out;
}

FrameBundle render_frames(const TriMesh& mesh, std::span<const Vec3> colors, std::span<const CameraPose> poses,
                          const Intrinsics& intrinsics, ShadingMode shading) {
  std::vector<Vec3> uniform;
  if (colors.empty()) {
    uniform.assign(mesh.vertices.size(), untextured_color());
    colors = uniform;
  }
  FrameBundle bundle;
  bundle.intrinsics = intrinsics;
  bundle.frames.resize(poses.size());
  parallel_for(poses.size(), [&](std::size_t i) {
    auto& f = bundle.frames[i];
    f.pose = poses[i];
    f.fragments = rasterize(mesh, poses[i], intrinsics);
    f.image = encode_srgb8(shade(mesh, colors, f.fragments, shading, poses[i]));
    f.depth = quantize_depth(f.fragments, intrinsics);
  });
  return bundle;
}

void export_sfm_bundle(const FrameBundle& bundle, const fs::path& out_dir) {
  const auto& in = bundle.intrinsics;
  std::error_code ec;
  fs::create_directories(out_dir / "frames", ec);
  fs::create_directories(out_dir / "depth", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<CameraPose> poses;
  for (std::size_t i = 0; i < bundle.frames.size(); ++i) {
    const auto& f = bundle.frames[i];
    if (f.image.width != in.width || f.image.height != in.height ||
        f.depth.size() != static_cast<std::size_t>(in.width) * in.height) {
      throw Error(ErrorCode::kDimensionMismatch, "frame " + std::to_string(i) + " does not match the intrinsics");
    }
    write_png_rgb(out_dir / "frames" / numbered("frame", i), f.image);
    write_png_gray16(out_dir / "depth" / numbered("depth", i), in.width, in.height, f.depth);
    poses.push_back(f.pose);
  }
  write_text(out_dir / "poses.json", poses_to_json(poses).dump(2) + "\n");

  char line[256];
  std::snprintf(line, sizeof line, "1 PINHOLE %d %d %.17g %.17g %.17g %.17g\n", in.width, in.height, in.focal(),
                in.focal(), in.cx(), in.cy());
  write_text(out_dir / "cameras.txt",
             std::string("# camera_id model width height fx fy cx cy\n") + line);

  nlohmann::ordered_json cam;
  cam["model"] = "PINHOLE";
  cam["width"] = in.width;
  cam["height"] = in.height;
  cam["fx"] = in.focal();
  cam["fy"] = in.focal();
  cam["cx"] = in.cx();
  cam["cy"] = in.cy();
  cam["vertical_fov_deg"] = in.vertical_fov;
  cam["near_mm"] = in.near;
  cam["far_mm"] = in.far;
  cam["principal_point_convention"] =
      "pixel (row i, column j) is centred at (u, v) = (j, i); cx = width/2 - 0.5, cy = height/2 - 0.5";
  cam["pose_convention"] = "camera-to-world; rotation columns are camera right, down, forward";
  cam["depth_mm_per_unit"] = depth_unit_mm(in);
  cam["depth_empty_value"] = 0;
  cam["frames"] = bundle.frames.size();
  write_text(out_dir / "camera.json", cam.dump(2) + "\n");
}

FrameBundle load_sfm_bundle(const fs::path& dir) {
  const auto cam = read_json(dir / "camera.json");
  FrameBundle bundle;
  try {
    bundle.intrinsics.width = cam.at("width").get<int>();
    bundle.intrinsics.height = cam.at("height").get<int>();
    bundle.intrinsics.vertical_fov = cam.at("vertical_fov_deg").get<double>();
    bundle.intrinsics.near = cam.at("near_mm").get<double>();
    bundle.intrinsics.far = cam.at("far_mm").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, (dir / "camera.json").string() + ": " + e.what());
  }
  const auto poses = poses_from_json(read_json(dir / "poses.json"));
  bundle.frames.resize(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    auto& f = bundle.frames[i];
    f.pose = poses[i];
    f.image = read_png_rgb(dir / "frames" / numbered("frame", i));
    int w = 0, h = 0;
    f.depth = read_png_gray16(dir / "depth" / numbered("depth", i), w, h);
    if (f.image.width != bundle.intrinsics.width || f.image.height != bundle.intrinsics.height ||
        w != bundle.intrinsics.width || h != bundle.intrinsics.height) {
      throw Error(ErrorCode::kDimensionMismatch, dir.string() + ": frame " + std::to_string(i) +
                                                     " does not match camera.json");
    }
  }
  return bundle;
}

void attach_fragments(FrameBundle& bundle, const TriMesh& mesh) {
  parallel_for(bundle.frames.size(), [&](std::size_t i) {
    bundle.frames[i].fragments = rasterize(mesh, bundle.frames[i].pose, bundle.intrinsics);
  });
}

std::vector<EvalFrame> eval_frames(const FrameBundle& bundle) {
  std::vector<EvalFrame> out;
  out.reserve(bundle.frames.size());
  for (std::size_t i = 0; i < bundle.frames.size(); ++i) {
    const auto& f = bundle.frames[i];
    if (f.fragments.pixels() == 0) {
      throw Error(ErrorCode::kMissingFragments, "frame " + std::to_string(i) + " has no fragment buffer");
    }
    out.push_back({to_gray(f.image), f.fragments});
  }
  return out;
}

}  // namespace lumenpaint
