#include "lumenpaint/fixture.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "lumenpaint/error.hpp"

namespace lumenpaint {

namespace {

struct Frame {
  Vec3 center;
  Vec3 tangent;
  Vec3 normal;
  Vec3 binormal;
};

Frame centerline(const TubeParams& p, double s) {
  const double arc = p.bend_radius * p.bend_degrees * std::numbers::pi / 180.0;
  const Vec3 y(0.0, 1.0, 0.0);
  if (s <= p.straight_in || arc <= 0.0) {
    return {Vec3(0.0, 0.0, s), Vec3(0.0, 0.0, 1.0), Vec3(1.0, 0.0, 0.0), y};
  }
  if (s <= p.straight_in + arc) {
    const double a = (s - p.straight_in) / p.bend_radius;
    return {Vec3(p.bend_radius * (1.0 - std::cos(a)), 0.0, p.straight_in + p.bend_radius * std::sin(a)),
            Vec3(std::sin(a), 0.0, std::cos(a)), Vec3(std::cos(a), 0.0, -std::sin(a)), y};
  }
  const double a = arc / p.bend_radius;
  const double t = s - p.straight_in - arc;
  const Vec3 end(p.bend_radius * (1.0 - std::cos(a)), 0.0, p.straight_in + p.bend_radius * std::sin(a));
  const Vec3 tangent(std::sin(a), 0.0, std::cos(a));
  return {end + t * tangent, tangent, Vec3(std::cos(a), 0.0, -std::sin(a)), y};
}

}  // namespace

TriMesh make_tube(const TubeParams& p) {
  if (p.segments < 3 || p.radius <= 0.0 || p.ring_spacing <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "tube needs >= 3 segments and positive radius/spacing");
  }
  const double arc = p.bend_radius * p.bend_degrees * std::numbers::pi / 180.0;
  const double length = p.straight_in + std::max(arc, 0.0) + p.straight_out;
  const int rings = std::max(2, static_cast<int>(std::lround(length / p.ring_spacing)) + 1);
  const auto seg = static_cast<std::uint32_t>(p.segments);

  // Each ring: center, in-plane axes, radius. Dome rings sit on a hemisphere
  // continuing the wall past either end.
  struct Ring {
    Vec3 center, normal, binormal;
    double radius;
  };
  std::vector<Ring> ring_list;
  const int dome_rings = p.caps == TubeParams::Cap::kDome
                             ? std::max(1, static_cast<int>(std::lround(0.5 * std::numbers::pi * p.radius / p.ring_spacing)))
                             : 0;
  const Frame first = centerline(p, 0.0);
  const Frame last = centerline(p, length);
  for (int k = 1; k < dome_rings; ++k) {
    const double phi = 0.5 * std::numbers::pi * k / dome_rings;
    ring_list.push_back({first.center - p.radius * std::cos(phi) * first.tangent, first.normal, first.binormal,
                         p.radius * std::sin(phi)});
  }
  for (int i = 0; i < rings; ++i) {
    const Frame f = centerline(p, length * i / (rings - 1));
    ring_list.push_back({f.center, f.normal, f.binormal, p.radius});
  }
  for (int k = dome_rings - 1; k >= 1; --k) {
    const double phi = 0.5 * std::numbers::pi * k / dome_rings;
    ring_list.push_back({last.center + p.radius * std::cos(phi) * last.tangent, last.normal, last.binormal,
                         p.radius * std::sin(phi)});
  }
  const double tip = dome_rings > 0 ? p.radius : 0.0;

  TriMesh mesh;
  mesh.vertices.push_back(first.center - tip * first.tangent);
  for (const auto& r : ring_list) {
    for (int j = 0; j < p.segments; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / p.segments;
      mesh.vertices.push_back(r.center + r.radius * (std::cos(phi) * r.normal + std::sin(phi) * r.binormal));
    }
  }
  mesh.vertices.push_back(last.center + tip * last.tangent);
  const auto end_tip = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
  const int count = static_cast<int>(ring_list.size());

  auto ring_vertex = [&](int ring, std::uint32_t j) {
    return 1u + static_cast<std::uint32_t>(ring) * seg + (j % seg);
  };
  for (std::uint32_t j = 0; j < seg; ++j) mesh.faces.push_back({0u, ring_vertex(0, j + 1), ring_vertex(0, j)});
  for (int i = 0; i + 1 < count; ++i) {
    for (std::uint32_t j = 0; j < seg; ++j) {
      const auto a = ring_vertex(i, j), b = ring_vertex(i + 1, j);
      const auto c = ring_vertex(i, j + 1), d = ring_vertex(i + 1, j + 1);
      mesh.faces.push_back({a, c, b});
      mesh.faces.push_back({c, d, b});
    }
  }
  for (std::uint32_t j = 0; j < seg; ++j) {
    mesh.faces.push_back({end_tip, ring_vertex(count - 1, j), ring_vertex(count - 1, j + 1)});
  }
  mesh.normals = compute_vertex_normals(mesh);
  return mesh;
}

TriMesh make_cylinder(double length, double radius, int segments, double ring_spacing) {
  TubeParams p;
  p.radius = radius;
  p.segments = segments;
  p.ring_spacing = ring_spacing;
  p.straight_in = length;
  p.bend_degrees = 0.0;
  p.straight_out = 0.0;
  p.caps = TubeParams::Cap::kFlat;
  return make_tube(p);
}

TriMesh make_bent_tube_fixture() { return make_tube(TubeParams{}); }

}  // namespace lumenpaint
