#pragma once

#include <filesystem>

#include "lumenpaint/camera.hpp"
#include "lumenpaint/image.hpp"
#include "lumenpaint/raster.hpp"

namespace lumenpaint {

/// Per-pixel supervision weight in [0,1]; zero wherever `valid` is false.
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<double> weight;
  std::vector<bool> valid;

  Heatmap() = default;
  Heatmap(int w, int h)
      : width(w), height(h), weight(static_cast<std::size_t>(w) * h, 0.0),
        valid(static_cast<std::size_t>(w) * h, false) {}
};

struct HeatmapParams {
  double d_max = 15.0;         // mm; deeper pixels are masked
  double theta_thresh = 0.0;   // cosine; pixels with theta above it are masked
  bool invert_distance = false;  // use 1 - D instead of D
};

/// H = ((1 - theta) / 2 + D) / 2, with theta the cosine between the view ray
/// and the camera-facing normal and D = min(depth / d_max, 1).
inline double heatmap_weight(double theta, double distance_term) {
  return 0.5 * ((1.0 - theta) / 2.0 + distance_term);
}

Heatmap compute_heatmap(const FragmentBuffer& frag, const CameraPose& pose, const HeatmapParams& params = {});

/// Grayscale visualisation: weight 0 -> 0, 1 -> 255.
GrayImage heatmap_to_image(const Heatmap& h);

/// Little-endian: uint32 width, uint32 height, then width*height float32.
void save_heatmap(const Heatmap& h, const std::filesystem::path& path);
Heatmap load_heatmap(const std::filesystem::path& path);

}  // namespace lumenpaint
