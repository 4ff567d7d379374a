#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "lumenpaint/geometry.hpp"

namespace lumenpaint {

/// Triangle mesh in millimetres with counter-clockwise (outward) winding.
/// Colors, when present, are per-vertex linear RGB in [0,1].
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> normals;
  std::optional<std::vector<Vec3>> colors;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }
};

/// Maps the mesh bounding box into [-1,1]^3 using a single isotropic scale.
struct BoundingBoxNormalizer {
  Vec3 center = Vec3::Zero();
  double half_extent = 1.0;

  static BoundingBoxNormalizer fit(std::span<const Vec3> points);
  Vec3 apply(const Vec3& p) const { return (p - center) / half_extent; }
  Vec3 invert(const Vec3& q) const { return q * half_extent + center; }
};

/// Area-weighted vertex normals (sum of unnormalized face cross products).
std::vector<Vec3> compute_vertex_normals(const TriMesh& mesh);

double face_area(const TriMesh& mesh, std::size_t face);
double surface_area(const TriMesh& mesh);

/// Throws Error for out-of-range indices, degenerate faces, or fewer than four
/// vertices/faces.
void validate_mesh(const TriMesh& mesh);

/// Merges vertices whose coordinates agree within `tolerance` mm and remaps
/// faces. Returns the number of removed vertices.
std::size_t weld_vertices(TriMesh& mesh, double tolerance = 1e-6);

/// Loads ASCII/binary PLY or OBJ, welds duplicates, validates, and computes
/// normals. Vertex colors are read when the file carries them.
TriMesh load_mesh(const std::filesystem::path& path);

/// 1-to-4 midpoint subdivision, `iterations` times.
TriMesh subdivide(const TriMesh& mesh, int iterations);

/// Binary little-endian PLY with float32 positions, uchar colors and faces.
void export_colored_mesh(const TriMesh& mesh, const std::filesystem::path& path);

/// Same layout as export_colored_mesh but without color properties.
void export_mesh(const TriMesh& mesh, const std::filesystem::path& path);

/// Rounds every coordinate through float32, so in-memory geometry matches what
/// a PLY round-trip produces.
void round_to_float(TriMesh& mesh);

/// round(255 c) with halves away from zero, clamped to [0,255].
std::uint8_t quantize_unit(double c);

/// Edges (a<b) with the number of faces using each.
std::vector<std::pair<std::array<std::uint32_t, 2>, int>> edge_face_counts(const TriMesh& mesh);

/// Ray-parity containment test against the closed surface.
bool point_inside(const TriMesh& mesh, const Vec3& point);

}  // namespace lumenpaint
