#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>

namespace lumenpaint {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<std::uint32_t, 3>;

struct RayHit {
  double t = 0.0;
  double u = 0.0;  // weight of vertex 1
  double v = 0.0;  // weight of vertex 2
};

/// Two-sided Moller-Trumbore intersection. Barycentric weights may be
/// slightly negative (down to -edge_tolerance) so that rays through shared
/// edges hit at least one of the adjacent faces.
inline std::optional<RayHit> intersect_ray_triangle(const Vec3& origin, const Vec3& dir,
                                                    const Vec3& a, const Vec3& b,
                                                    const Vec3& c,
                                                    double edge_tolerance = 1e-12) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (det == 0.0) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv;
  if (u < -edge_tolerance || u > 1.0 + edge_tolerance) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < -edge_tolerance || u + v > 1.0 + edge_tolerance) return std::nullopt;
  return RayHit{e2.dot(q) * inv, u, v};
}

}  // namespace lumenpaint
