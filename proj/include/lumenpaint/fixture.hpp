#pragma once

#include "lumenpaint/mesh.hpp"

namespace lumenpaint {

/// Closed tube around a centerline that runs up +z, optionally bends toward
/// +x along a circular arc, then continues straight. Vertex 0 is the tip of
/// the start cap (the unique vertex at minimal z); the end cap tip is last.
struct TubeParams {
  enum class Cap { kFlat, kDome };

  double radius = 5.0;
  int segments = 24;         // vertices per ring
  double ring_spacing = 1.5;  // mm between rings along the centerline
  double straight_in = 40.0;
  double bend_radius = 20.0;
  double bend_degrees = 90.0;
  double straight_out = 40.0;
  Cap caps = Cap::kDome;  // hemispheres keep the end nodes of a skeleton off the wall
};

TriMesh make_tube(const TubeParams& params);

/// Straight cylinder along +z from z = 0 to z = length with flat caps.
TriMesh make_cylinder(double length, double radius, int segments, double ring_spacing);

/// The bundled test scene: a 5 mm lumen with a 90 degree bend.
TriMesh make_bent_tube_fixture();

}  // namespace lumenpaint
