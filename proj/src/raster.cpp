#include "lumenpaint/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lumenpaint/error.hpp"
#include "lumenpaint/parallel.hpp"

namespace lumenpaint {

namespace {

constexpr int kBandRows = 8;

struct ProjectedFace {
  std::array<Vec3, 3> cam;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounds
};

// Screen bounds of the part of the triangle in front of the near plane.
ProjectedFace project_face(const std::array<Vec3, 3>& cam, const Intrinsics& in) {
  ProjectedFace pf;
  pf.cam = cam;
  std::array<Vec3, 6> poly;
  int count = 0;
  for (int k = 0; k < 3; ++k) {
    const Vec3& a = cam[k];
    const Vec3& b = cam[(k + 1) % 3];
    const bool a_in = a.z() >= in.near;
    const bool b_in = b.z() >= in.near;
    if (a_in) poly[count++] = a;
    if (a_in != b_in) {
      const double t = (in.near - a.z()) / (b.z() - a.z());
      poly[count++] = a + t * (b - a);
    }
  }
  if (count == 0) return pf;
  const double f = in.focal();
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  for (int k = 0; k < count; ++k) {
    const double z = std::max(poly[k].z(), in.near);
    const double u = in.cx() + f * poly[k].x() / z;
    const double v = in.cy() + f * poly[k].y() / z;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const double w = in.width - 1, h = in.height - 1;
  if (umax < 0 || vmax < 0 || umin > w || vmin > h) return pf;
  pf.x0 = static_cast<int>(std::ceil(std::max(umin, 0.0) - 1e-9));
  pf.x1 = static_cast<int>(std::floor(std::min(umax, w) + 1e-9));
  pf.y0 = static_cast<int>(std::ceil(std::max(vmin, 0.0) - 1e-9));
  pf.y1 = static_cast<int>(std::floor(std::min(vmax, h) + 1e-9));
  pf.x0 = std::max(pf.x0, 0);
  pf.y0 = std::max(pf.y0, 0);
  pf.x1 = std::min(pf.x1, in.width - 1);
  pf.y1 = std::min(pf.y1, in.height - 1);
  return pf;
}

void fill_surface(Fragment& frag, const TriMesh& mesh) {
  const auto& f = mesh.faces[static_cast<std::size_t>(frag.face_id)];
  const auto& w = frag.bary;
  frag.world_point = w[0] * mesh.vertices[f[0]] + w[1] * mesh.vertices[f[1]] + w[2] * mesh.vertices[f[2]];
  Vec3 n = w[0] * mesh.normals[f[0]] + w[1] * mesh.normals[f[1]] + w[2] * mesh.normals[f[2]];
  const double len = n.norm();
  if (len > 0.0) {
    n /= len;
  } else {
    n = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]).normalized();
  }
  frag.normal = n;
}

void require_normals(const TriMesh& mesh) {
  if (mesh.normals.size() != mesh.vertices.size()) {
    throw Error(ErrorCode::kInvalidArgument, "mesh normals are missing; call compute_vertex_normals");
  }
}

}  // namespace

bool in_endoscope_mask(int x, int y, int width, int height) {
  const double cx = width / 2.0 - 0.5, cy = height / 2.0 - 0.5;
  const double r = std::min(width, height) / 2.0;
  const double dx = x - cx, dy = y - cy;
  return dx * dx + dy * dy <= r * r;
}

FragmentBuffer rasterize(const TriMesh& mesh, const CameraPose& pose, const Intrinsics& intrinsics) {
  require_normals(mesh);
  FragmentBuffer buf;
  buf.width = intrinsics.width;
  buf.height = intrinsics.height;
  buf.mesh_vertices = mesh.vertices.size();
  buf.mesh_faces = mesh.faces.size();
  buf.fragments.assign(static_cast<std::size_t>(buf.width) * buf.height, Fragment{});

  std::vector<ProjectedFace> projected(mesh.faces.size());
  parallel_chunks(mesh.faces.size(), 4096, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& f = mesh.faces[i];
      projected[i] = project_face({pose.world_to_camera(mesh.vertices[f[0]]),
                                   pose.world_to_camera(mesh.vertices[f[1]]),
                                   pose.world_to_camera(mesh.vertices[f[2]])},
                                  intrinsics);
    }
  });

  const Vec3 origin = Vec3::Zero();
  const int bands = (buf.height + kBandRows - 1) / kBandRows;
  parallel_for(static_cast<std::size_t>(bands), [&](std::size_t band) {
    const int row0 = static_cast<int>(band) * kBandRows;
    const int row1 = std::min(buf.height - 1, row0 + kBandRows - 1);
    for (std::size_t i = 0; i < projected.size(); ++i) {
      const auto& pf = projected[i];
      const int y0 = std::max(pf.y0, row0), y1 = std::min(pf.y1, row1);
      for (int y = y0; y <= y1; ++y) {
        for (int x = pf.x0; x <= pf.x1; ++x) {
          const Vec3 dir = intrinsics.ray(x, y);
          const auto hit = intersect_ray_triangle(origin, dir, pf.cam[0], pf.cam[1], pf.cam[2]);
          if (!hit) continue;
          const double depth = hit->t;  // dir.z == 1, so t is camera-space z
          if (!(depth > intrinsics.near && depth < intrinsics.far)) continue;
          auto& frag = buf.fragments[static_cast<std::size_t>(y) * buf.width + x];
          if (frag.covered() && !(depth < frag.depth)) continue;
          frag.face_id = static_cast<std::int32_t>(i);
          frag.depth = depth;
          frag.bary = {1.0 - hit->u - hit->v, hit->u, hit->v};
        }
      }
    }
    for (int y = row0; y <= row1; ++y) {
      for (int x = 0; x < buf.width; ++x) {
        auto& frag = buf.fragments[static_cast<std::size_t>(y) * buf.width + x];
        frag.in_mask = in_endoscope_mask(x, y, buf.width, buf.height);
        if (frag.covered()) fill_surface(frag, mesh);
      }
    }
  });
  return buf;
}

Fragment sample_fragment(const TriMesh& mesh, const CameraPose& pose, const Intrinsics& intrinsics,
                         double u, double v) {
  require_normals(mesh);
  Fragment best;
  const Vec3 dir = intrinsics.ray(u, v);
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const auto& f = mesh.faces[i];
    const auto hit = intersect_ray_triangle(Vec3::Zero(), dir, pose.world_to_camera(mesh.vertices[f[0]]),
                                            pose.world_to_camera(mesh.vertices[f[1]]),
                                            pose.world_to_camera(mesh.vertices[f[2]]));
    if (!hit) continue;
    const double depth = hit->t;
    if (!(depth > intrinsics.near && depth < intrinsics.far)) continue;
    if (best.covered() && !(depth < best.depth)) continue;
    best.face_id = static_cast<std::int32_t>(i);
    best.depth = depth;
    best.bary = {1.0 - hit->u - hit->v, hit->u, hit->v};
  }
  const double cx = intrinsics.cx(), cy = intrinsics.cy();
  const double r = std::min(intrinsics.width, intrinsics.height) / 2.0;
  best.in_mask = (u - cx) * (u - cx) + (v - cy) * (v - cy) <= r * r;
  if (best.covered()) fill_surface(best, mesh);
  return best;
}

double headlight_factor(const Fragment& frag, const CameraPose& pose, double reference_distance) {
  const Vec3 view = (frag.world_point - pose.position).normalized();
  const double facing = std::abs(frag.normal.dot(view));
  const double falloff = std::min(1.0, (reference_distance / frag.depth) * (reference_distance / frag.depth));
  return facing * falloff;
}

Image shade(const TriMesh& mesh, std::span<const Vec3> colors, const FragmentBuffer& frag,
            ShadingMode mode, const CameraPose& pose, double reference_distance) {
  if (colors.size() != mesh.vertices.size()) {
    throw Error(ErrorCode::kMissingColors, "expected " + std::to_string(mesh.vertices.size()) +
                                               " vertex colors, got " + std::to_string(colors.size()));
  }
  Image img(frag.width, frag.height, ColorSpace::kRgbLinear);
  for (std::size_t p = 0; p < frag.pixels(); ++p) {
    const auto& fr = frag.fragments[p];
    if (!fr.valid()) continue;
    Vec3 c = interpolate_color(colors, mesh.faces[static_cast<std::size_t>(fr.face_id)], fr.bary);
    if (mode == ShadingMode::kHeadlight) c = c * headlight_factor(fr, pose, reference_distance);
    double* out = img.at(p);
    out[0] = c.x();
    out[1] = c.y();
    out[2] = c.z();
  }
  return img;
}

std::vector<std::uint32_t> RenderOperator::active_vertices() const {
  std::vector<bool> used(vertex_count_, false);
  for (const auto& e : entries_) {
    for (auto v : e.vertex) used[v] = true;
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t v = 0; v < vertex_count_; ++v) {
    if (used[v]) out.push_back(v);
  }
  return out;
}

Image RenderOperator::apply(std::span<const Vec3> colors) const {
  if (colors.size() != vertex_count_) {
    throw Error(ErrorCode::kDimensionMismatch, "operator expects " + std::to_string(vertex_count_) +
                                                   " vertex colors, got " + std::to_string(colors.size()));
  }
  Image img(width_, height_, ColorSpace::kRgbLinear);
  for (const auto& e : entries_) {
    Vec3 c = interpolate_color(colors, e.vertex, e.weight);
    if (e.scale != 1.0) c = c * e.scale;
    double* out = img.at(e.pixel);
    out[0] = c.x();
    out[1] = c.y();
    out[2] = c.z();
  }
  return img;
}

std::vector<Vec3> RenderOperator::apply_transpose(std::span<const double> pixel_grad) const {
  const std::size_t expected = static_cast<std::size_t>(width_) * height_ * 3;
  if (pixel_grad.size() != expected) {
    throw Error(ErrorCode::kDimensionMismatch, "pixel gradient has " + std::to_string(pixel_grad.size()) +
                                                   " values, expected " + std::to_string(expected));
  }
  std::vector<Vec3> grad(vertex_count_, Vec3::Zero());
  for (const auto& e : entries_) {
    const double* g = pixel_grad.data() + 3 * static_cast<std::size_t>(e.pixel);
    const Vec3 gs = Vec3(g[0], g[1], g[2]) * e.scale;
    for (int j = 0; j < 3; ++j) grad[e.vertex[j]] += e.weight[j] * gs;
  }
  return grad;
}

RenderOperator build_render_operator(const FragmentBuffer& frag, const TriMesh& mesh, ShadingMode mode,
                                     const CameraPose* pose, double reference_distance) {
  if (frag.mesh_vertices != mesh.vertices.size() || frag.mesh_faces != mesh.faces.size()) {
    throw Error(ErrorCode::kMismatchedMesh,
                "fragments come from a mesh with " + std::to_string(frag.mesh_vertices) + " vertices/" +
                    std::to_string(frag.mesh_faces) + " faces, operator mesh has " +
                    std::to_string(mesh.vertices.size()) + "/" + std::to_string(mesh.faces.size()));
  }
  if (mode == ShadingMode::kHeadlight && pose == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "headlight operator needs the camera pose");
  }
  std::vector<RenderOperator::Entry> entries;
  for (std::size_t p = 0; p < frag.pixels(); ++p) {
    const auto& fr = frag.fragments[p];
    if (!fr.valid()) continue;
    const double scale = mode == ShadingMode::kHeadlight ? headlight_factor(fr, *pose, reference_distance) : 1.0;
    entries.push_back({static_cast<std::uint32_t>(p), mesh.faces[static_cast<std::size_t>(fr.face_id)], fr.bary, scale});
  }
  return RenderOperator(frag.width, frag.height, mesh.vertices.size(), std::move(entries));
}

ScalarMap depth_map(const FragmentBuffer& frag) {
  ScalarMap map(frag.width, frag.height);
  for (std::size_t p = 0; p < frag.pixels(); ++p) {
    if (frag.fragments[p].covered()) map.data[p] = frag.fragments[p].depth;
  }
  return map;
}

}  // namespace lumenpaint
