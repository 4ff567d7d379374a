#include "lumenpaint/heatmap.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include "lumenpaint/error.hpp"
#include "lumenpaint/mesh.hpp"

namespace lumenpaint {

Heatmap compute_heatmap(const FragmentBuffer& frag, const CameraPose& pose, const HeatmapParams& params) {
  if (!(params.d_max > 0.0)) throw Error(ErrorCode::kInvalidArgument, "d_max must be positive");
  if (params.theta_thresh < -1.0 || params.theta_thresh > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "theta_thresh must lie in [-1, 1]");
  }
  Heatmap h(frag.width, frag.height);
  for (std::size_t p = 0; p < frag.pixels(); ++p) {
    const auto& fr = frag.fragments[p];
    if (!fr.valid() || fr.depth > params.d_max) continue;
    const Vec3 view = (fr.world_point - pose.position).normalized();
    Vec3 n = fr.normal;
    if (n.dot(view) > 0.0) n = -n;
    const double theta = n.dot(view);
    if (theta > params.theta_thresh) continue;
    double d = std::min(fr.depth / params.d_max, 1.0);
    if (params.invert_distance) d = 1.0 - d;
    h.weight[p] = std::clamp(heatmap_weight(theta, d), 0.0, 1.0);
    h.valid[p] = true;
  }
  return h;
}

GrayImage heatmap_to_image(const Heatmap& h) {
  GrayImage img(h.width, h.height);
  for (std::size_t p = 0; p < h.weight.size(); ++p) img.data[p] = quantize_unit(h.weight[p]);
  return img;
}

void save_heatmap(const Heatmap& h, const std::filesystem::path& path) {
  std::string out;
  auto append = [&out](const auto& value) { out.append(reinterpret_cast<const char*>(&value), sizeof(value)); };
  append(static_cast<std::uint32_t>(h.width));
  append(static_cast<std::uint32_t>(h.height));
  for (double w : h.weight) append(static_cast<float>(w));
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Heatmap load_heatmap(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8) throw Error(ErrorCode::kTruncated, path.string() + ": heatmap header truncated");
  std::uint32_t w = 0, hgt = 0;
  std::memcpy(&w, bytes.data(), 4);
  std::memcpy(&hgt, bytes.data() + 4, 4);
  const std::size_t n = static_cast<std::size_t>(w) * hgt;
  if (bytes.size() != 8 + 4 * n) throw Error(ErrorCode::kTruncated, path.string() + ": heatmap payload size mismatch");
  Heatmap h(static_cast<int>(w), static_cast<int>(hgt));
  for (std::size_t p = 0; p < n; ++p) {
    float v = 0.0f;
    std::memcpy(&v, bytes.data() + 8 + 4 * p, 4);
    h.weight[p] = v;
    // Valid pixels always carry weight >= 1/4, so zero marks a masked pixel.
    h.valid[p] = v > 0.0f;
  }
  return h;
}

}  // namespace lumenpaint
