#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "lumenpaint/error.hpp"
#include "lumenpaint/fixture.hpp"
#include "lumenpaint/mesh.hpp"

namespace fs = std::filesystem;
using namespace lumenpaint;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lumenpaint_test_mesh";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const char* kTetraPly =
    "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
    "element face 4\nproperty list uchar int vertex_indices\nend_header\n"
    "0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
    "3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

TriMesh tetrahedron() {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  m.faces = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  m.normals = compute_vertex_normals(m);
  return m;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(MeshLoad, TetrahedronPlyHasUnitNormals) {
  const auto path = scratch("tetra.ply");
  write_file(path, kTetraPly);
  const TriMesh m = load_mesh(path);
  ASSERT_EQ(m.vertices.size(), 4u);
  ASSERT_EQ(m.faces.size(), 4u);
  ASSERT_EQ(m.normals.size(), 4u);
  for (const auto& n : m.normals) EXPECT_NEAR(n.norm(), 1.0, 1e-12);
  // The origin corner sees three axis-aligned faces of equal area.
  EXPECT_NEAR(m.normals[0].x(), -1.0 / std::sqrt(3.0), 1e-9);
}

TEST(MeshLoad, FaceIndexOutOfRange) {
  const auto path = scratch("bad_index.ply");
  std::string text = kTetraPly;
  text.replace(text.find("3 1 2 3"), 7, "3 1 2 99");
  write_file(path, text);
  EXPECT_EQ(code_of([&] { load_mesh(path); }), ErrorCode::kIndexOutOfRange);
}

TEST(MeshLoad, CubeCornerNormals) {
  // Unit cube as OBJ, outward winding, every face split along a diagonal
  // through (0,0,0) or (1,1,1).
  const auto path = scratch("cube.obj");
  write_file(path,
             "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n"
             "f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\n"
             "f 2 3 7\nf 2 7 6\nf 3 4 7\nf 4 8 7\nf 1 5 8\nf 1 8 4\n");
  const TriMesh m = load_mesh(path);
  ASSERT_EQ(m.vertices.size(), 8u);
  ASSERT_EQ(m.faces.size(), 12u);
  const Vec3 center(0.5, 0.5, 0.5);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    const Vec3 octant = (m.vertices[i] - center).cwiseSign();
    EXPECT_EQ(m.normals[i].cwiseSign(), octant) << "vertex " << i;
    // Both corners on every diagonal collect two triangles (area 1) from each
    // of their three faces, so the sum is (+-1,+-1,+-1) before normalizing.
    if (i == 0 || i == 6) EXPECT_NEAR((m.normals[i] - octant / std::sqrt(3.0)).norm(), 0.0, 1e-6) << "vertex " << i;
  }
}

TEST(MeshLoad, ObjWithQuadIsRejected) {
  const auto path = scratch("quad.obj");
  write_file(path, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  EXPECT_EQ(code_of([&] { load_mesh(path); }), ErrorCode::kNonTriangleFace);
}

TEST(MeshLoad, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { load_mesh("/nonexistent/mesh.ply"); }), ErrorCode::kIo);
}

TEST(MeshLoad, DegenerateFaceIsRejected) {
  TriMesh m = tetrahedron();
  m.faces[3] = {1, 1, 2};
  EXPECT_EQ(code_of([&] { validate_mesh(m); }), ErrorCode::kDegenerateFace);
}

TEST(Subdivide, TetrahedronOnce) {
  const TriMesh s = subdivide(tetrahedron(), 1);
  EXPECT_EQ(s.vertices.size(), 10u);
  EXPECT_EQ(s.faces.size(), 16u);
}

TEST(Subdivide, ZeroIterationsIsIdentity) {
  const TriMesh m = tetrahedron();
  const TriMesh s = subdivide(m, 0);
  EXPECT_EQ(s.vertices, m.vertices);
  EXPECT_EQ(s.faces, m.faces);
}

TEST(Subdivide, SingleTriangleTwice) {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {4, 0, 0}, {0, 4, 0}};
  m.faces = {{0, 1, 2}};
  const TriMesh s = subdivide(m, 2);
  // Brute enumeration: a triangle split into quarters twice has a 5-row lattice.
  std::set<std::array<double, 3>> lattice;
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; i + j <= 4; ++j) lattice.insert({double(i), double(j), 0.0});
  EXPECT_EQ(lattice.size(), 15u);
  EXPECT_EQ(s.vertices.size(), 15u);
  EXPECT_EQ(s.faces.size(), 16u);
  for (const auto& v : s.vertices) EXPECT_TRUE(lattice.count({v.x(), v.y(), v.z()}));
}

TEST(Subdivide, PreservesWindingAndArea) {
  const TriMesh m = tetrahedron();
  const TriMesh s = subdivide(m, 2);
  EXPECT_NEAR(surface_area(s), surface_area(m), 1e-12);
  for (const auto& [edge, count] : edge_face_counts(s)) EXPECT_EQ(count, 2);
}

TEST(ColoredPly, RedBytes) {
  TriMesh m = tetrahedron();
  m.colors = std::vector<Vec3>(4, Vec3(1, 0, 0));
  const auto path = scratch("red.ply");
  export_colored_mesh(m, path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes{std::istreambuf_iterator<char>(in), {}};
  const auto body = bytes.find("end_header\n") + 11;
  // Each vertex record: 3 float32 then 3 uchar.
  for (int v = 0; v < 4; ++v) {
    const std::size_t at = body + v * 15 + 12;
    EXPECT_EQ(static_cast<unsigned char>(bytes[at]), 255);
    EXPECT_EQ(static_cast<unsigned char>(bytes[at + 1]), 0);
    EXPECT_EQ(static_cast<unsigned char>(bytes[at + 2]), 0);
  }
}

TEST(ColoredPly, HalfRoundsUp) {
  EXPECT_EQ(quantize_unit(0.5), 128);
  EXPECT_EQ(quantize_unit(0.0), 0);
  EXPECT_EQ(quantize_unit(1.0), 255);
  EXPECT_EQ(quantize_unit(-0.3), 0);
  EXPECT_EQ(quantize_unit(1.7), 255);
}

TEST(ColoredPly, RoundTripWithinQuantization) {
  TriMesh m = subdivide(tetrahedron(), 1);
  std::vector<Vec3> colors;
  for (std::size_t i = 0; i < m.vertices.size(); ++i) colors.push_back(Vec3(0.1 * i, 0.37, 1.0 - 0.05 * i));
  m.colors = colors;
  const auto path = scratch("roundtrip.ply");
  export_colored_mesh(m, path);
  const TriMesh back = load_mesh(path);
  ASSERT_TRUE(back.colors.has_value());
  ASSERT_EQ(back.vertices.size(), m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    EXPECT_LE(((*back.colors)[i] - colors[i]).cwiseAbs().maxCoeff(), 1.0 / 255.0);
  }
}

TEST(ColoredPly, ExportWithoutColorsFails) {
  EXPECT_EQ(code_of([] { export_colored_mesh(tetrahedron(), scratch("none.ply")); }), ErrorCode::kMissingColors);
}

TEST(Normalizer, MapsIntoUnitCube) {
  const TriMesh tube = make_bent_tube_fixture();
  const auto norm = BoundingBoxNormalizer::fit(tube.vertices);
  double widest = 0.0;
  for (const auto& v : tube.vertices) {
    const Vec3 q = norm.apply(v);
    EXPECT_LE(q.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
    widest = std::max(widest, q.cwiseAbs().maxCoeff());
    EXPECT_NEAR((norm.invert(q) - v).norm(), 0.0, 1e-12);
  }
  EXPECT_NEAR(widest, 1.0, 1e-12);
}

TEST(Fixture, ClosedManifoldWithOutwardNormals) {
  const TriMesh tube = make_bent_tube_fixture();
  validate_mesh(tube);
  for (const auto& [edge, count] : edge_face_counts(tube)) ASSERT_EQ(count, 2);
  // Outward winding gives a positive signed volume.
  double volume = 0.0;
  for (const auto& f : tube.faces) {
    volume += tube.vertices[f[0]].dot(tube.vertices[f[1]].cross(tube.vertices[f[2]])) / 6.0;
  }
  EXPECT_GT(volume, 0.0);
  EXPECT_TRUE(point_inside(tube, Vec3(0, 0, 20)));
  EXPECT_FALSE(point_inside(tube, Vec3(20, 0, 20)));
}

TEST(RoundToFloat, EveryCoordinateIsFloatExact) {
  TriMesh tube = make_bent_tube_fixture();
  round_to_float(tube);
  for (const auto& v : tube.vertices)
    for (int k = 0; k < 3; ++k) ASSERT_EQ(static_cast<double>(static_cast<float>(v[k])), v[k]);
}
