#pragma once

#include <span>
#include <vector>

#include "lumenpaint/camera.hpp"
#include "lumenpaint/image.hpp"
#include "lumenpaint/mesh.hpp"

namespace lumenpaint {

inline constexpr std::int32_t kEmptyFace = -1;

struct Fragment {
  std::int32_t face_id = kEmptyFace;
  std::array<double, 3> bary = {0.0, 0.0, 0.0};
  double depth = 0.0;  // camera-space z, mm
  Vec3 world_point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // interpolated vertex normal, unit, unflipped
  bool in_mask = false;

  bool covered() const { return face_id != kEmptyFace; }
  bool valid() const { return covered() && in_mask; }
};

struct FragmentBuffer {
  int width = 0;
  int height = 0;
  std::vector<Fragment> fragments;
  // Size of the mesh this buffer was rasterized from.
  std::size_t mesh_vertices = 0;
  std::size_t mesh_faces = 0;

  const Fragment& at(int x, int y) const { return fragments[static_cast<std::size_t>(y) * width + x]; }
  std::size_t pixels() const { return fragments.size(); }
};

/// True when the pixel center lies inside the inscribed circle of the image.
bool in_endoscope_mask(int x, int y, int width, int height);

/// Pixel-center, z-buffered rasterization of two-sided triangles. Ties in
/// depth keep the earlier face. Output is identical for any worker count.
FragmentBuffer rasterize(const TriMesh& mesh, const CameraPose& pose, const Intrinsics& intrinsics);

/// Closest surface hit along the camera ray through image coordinate (u, v),
/// which need not be a pixel center. Same tie rules as rasterize.
Fragment sample_fragment(const TriMesh& mesh, const CameraPose& pose, const Intrinsics& intrinsics,
                         double u, double v);

enum class ShadingMode { kUnlit, kHeadlight };

inline constexpr double kHeadlightReferenceDistance = 10.0;  // mm

/// Headlight attenuation |n.v| * min(1, (d0/depth)^2) for a covered fragment.
double headlight_factor(const Fragment& frag, const CameraPose& pose,
                        double reference_distance = kHeadlightReferenceDistance);

/// Barycentric interpolation of per-vertex colors for one fragment.
inline Vec3 interpolate_color(std::span<const Vec3> colors, const Face& face,
                              const std::array<double, 3>& w) {
  return w[0] * colors[face[0]] + w[1] * colors[face[1]] + w[2] * colors[face[2]];
}

Image shade(const TriMesh& mesh, std::span<const Vec3> colors, const FragmentBuffer& frag,
            ShadingMode mode, const CameraPose& pose,
            double reference_distance = kHeadlightReferenceDistance);

/// Sparse linear map from per-vertex colors to in-mask pixel colors. With
/// per-pixel scales it reproduces headlight shading; without, unlit shading.
class RenderOperator {
 public:
  struct Entry {
    std::uint32_t pixel;
    std::array<std::uint32_t, 3> vertex;
    std::array<double, 3> weight;
    double scale;
  };

  RenderOperator() = default;
  RenderOperator(int width, int height, std::size_t vertex_count, std::vector<Entry> entries)
      : width_(width), height_(height), vertex_count_(vertex_count), entries_(std::move(entries)) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t vertex_count() const { return vertex_count_; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Vertices referenced by at least one pixel, ascending.
  std::vector<std::uint32_t> active_vertices() const;

  /// colors: vertex_count x 3 (row-major). Returns width*height*3 image data.
  Image apply(std::span<const Vec3> colors) const;
  /// pixel_grad: width*height*3. Accumulates in ascending pixel order.
  std::vector<Vec3> apply_transpose(std::span<const double> pixel_grad) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::size_t vertex_count_ = 0;
  std::vector<Entry> entries_;
};

RenderOperator build_render_operator(const FragmentBuffer& frag, const TriMesh& mesh,
                                     ShadingMode mode = ShadingMode::kUnlit,
                                     const CameraPose* pose = nullptr,
                                     double reference_distance = kHeadlightReferenceDistance);

/// Fragment depths in mm, 0 where no face covers the pixel.
ScalarMap depth_map(const FragmentBuffer& frag);

}  // namespace lumenpaint
