#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "lumenpaint/camera.hpp"
#include "lumenpaint/mesh.hpp"

namespace lumenpaint {

struct SkeletonGraph {
  std::vector<Vec3> nodes;
  std::vector<std::array<std::uint32_t, 2>> edges;
  std::vector<double> radius;

  std::vector<std::vector<std::uint32_t>> adjacency() const;
};

/// Wavefront skeleton: geodesic (edge-length Dijkstra) distance from the seed
/// vertex, binned into rings of `ring_width` mm. Each connected component of a
/// ring becomes a node at its vertex centroid; nodes are joined when a mesh edge
/// links their components. Node 0 holds the seed.
///
/// node radius is the mean distance of the component's vertices from the
/// local centerline (the line through the node along the skeleton tangent).
SkeletonGraph skeletonize(const TriMesh& mesh, std::optional<std::uint32_t> seed, double ring_width);

/// Vertex with minimal z, then minimal index.
std::uint32_t auto_seed(const TriMesh& mesh);

/// Shortest-path distance along skeleton edges from node 0.
std::vector<double> skeleton_depths(const SkeletonGraph& skeleton);

/// Greedy farthest-point sampling over skeleton nodes.
std::vector<std::uint32_t> sample_camera_stations(const SkeletonGraph& skeleton, std::size_t count);

std::vector<CameraPose> build_poses(const SkeletonGraph& skeleton, std::span<const std::uint32_t> stations);

/// Stations reordered by increasing skeleton depth (ties by index), which turns
/// a farthest-point sample into a fly-through order along the centerline.
std::vector<std::uint32_t> order_by_depth(const SkeletonGraph& skeleton,
                                          std::span<const std::uint32_t> stations);

/// Centripetal Catmull-Rom positions and slerped orientations between
/// consecutive station poses.
std::vector<CameraPose> interpolate_trajectory(std::span<const CameraPose> stations, int frames_per_segment);
std::vector<CameraPose> interpolate_trajectory(const SkeletonGraph& skeleton,
                                               std::span<const std::uint32_t> stations,
                                               int frames_per_segment);

nlohmann::json skeleton_to_json(const SkeletonGraph& skeleton);
SkeletonGraph skeleton_from_json(const nlohmann::json& j);
SkeletonGraph load_skeleton(const std::filesystem::path& path);

nlohmann::json poses_to_json(std::span<const CameraPose> poses);
std::vector<CameraPose> poses_from_json(const nlohmann::json& j);

}  // namespace lumenpaint
