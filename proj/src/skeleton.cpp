#include "lumenpaint/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <set>

#include "lumenpaint/error.hpp"

namespace lumenpaint {

namespace {

struct DisjointSet {
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;  // root is always the smallest member
  }
  std::vector<std::uint32_t> parent;
};

std::vector<std::vector<std::pair<std::uint32_t, double>>> vertex_graph(const TriMesh& mesh) {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> graph(mesh.vertices.size());
  for (const auto& [edge, count] : edge_face_counts(mesh)) {
    const double len = (mesh.vertices[edge[0]] - mesh.vertices[edge[1]]).norm();
    graph[edge[0]].emplace_back(edge[1], len);
    graph[edge[1]].emplace_back(edge[0], len);
  }
  return graph;
}

template <typename Graph>
std::vector<double> dijkstra(const Graph& graph, std::uint32_t source) {
  std::vector<double> dist(graph.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const auto& [w, len] : graph[v]) {
      if (d + len < dist[w]) {
        dist[w] = d + len;
        queue.emplace(dist[w], w);
      }
    }
  }
  return dist;
}

Mat3 frame_from(const Vec3& forward, const Vec3& up_hint) {
  const Vec3 f = forward.normalized();
  Vec3 up = up_hint - up_hint.dot(f) * f;
  if (up.norm() < 1e-6) {
    const Vec3 fallback(0.0, 1.0, 0.0);
    up = fallback - fallback.dot(f) * f;
    if (up.norm() < 1e-6) up = Vec3(1.0, 0.0, 0.0) - f.x() * f;
  }
  up.normalize();
  Vec3 right = f.cross(up).normalized();
  up = right.cross(f).normalized();
  Mat3 r;
  r.col(0) = right;
  r.col(1) = -up;
  r.col(2) = f;
  return r;
}

}  // namespace

std::vector<std::vector<std::uint32_t>> SkeletonGraph::adjacency() const {
  std::vector<std::vector<std::uint32_t>> adj(nodes.size());
  for (const auto& e : edges) {
    adj[e[0]].push_back(e[1]);
    adj[e[1]].push_back(e[0]);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

std::uint32_t auto_seed(const TriMesh& mesh) {
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < mesh.vertices.size(); ++i) {
    if (mesh.vertices[i].z() < mesh.vertices[best].z()) best = i;
  }
  return best;
}

SkeletonGraph skeletonize(const TriMesh& mesh, std::optional<std::uint32_t> seed, double ring_width) {
  if (!(ring_width > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ring_width must be positive");
  if (mesh.vertices.empty()) throw Error(ErrorCode::kEmptyMesh, "cannot skeletonize an empty mesh");
  const std::uint32_t source = seed ? *seed : auto_seed(mesh);
  if (source >= mesh.vertices.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "seed vertex " + std::to_string(source) + " out of range");
  }

  const auto graph = vertex_graph(mesh);
  const auto dist = dijkstra(graph, source);
  for (std::size_t v = 0; v < dist.size(); ++v) {
    if (!std::isfinite(dist[v])) {
      throw Error(ErrorCode::kDisconnectedMesh,
                  "vertex " + std::to_string(v) + " is unreachable from seed " + std::to_string(source));
    }
  }

  const auto n = static_cast<std::uint32_t>(mesh.vertices.size());
  std::vector<long long> ring(n);
  for (std::uint32_t v = 0; v < n; ++v) ring[v] = static_cast<long long>(std::floor(dist[v] / ring_width));

  DisjointSet components(n);
  for (std::uint32_t v = 0; v < n; ++v) {
    for (const auto& [w, len] : graph[v]) {
      if (ring[v] == ring[w]) components.unite(v, w);
    }
  }

  // Order nodes by (ring, smallest member vertex).
  std::vector<std::uint32_t> roots;
  for (std::uint32_t v = 0; v < n; ++v) {
    if (components.find(v) == v) roots.push_back(v);
  }
  std::stable_sort(roots.begin(), roots.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return ring[a] < ring[b]; });
  if (roots.size() < 2) {
    throw Error(ErrorCode::kSkeletonTooSmall,
                "ring width " + std::to_string(ring_width) + " yields " + std::to_string(roots.size()) +
                    " skeleton node(s); need at least 2");
  }
  std::vector<std::uint32_t> node_of(n);
  {
    std::vector<std::uint32_t> root_to_node(n, 0);
    for (std::uint32_t i = 0; i < roots.size(); ++i) root_to_node[roots[i]] = i;
    for (std::uint32_t v = 0; v < n; ++v) node_of[v] = root_to_node[components.find(v)];
  }

  SkeletonGraph skeleton;
  skeleton.nodes.assign(roots.size(), Vec3::Zero());
  std::vector<std::size_t> members(roots.size(), 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    skeleton.nodes[node_of[v]] += mesh.vertices[v];
    ++members[node_of[v]];
  }
  for (std::size_t i = 0; i < roots.size(); ++i) skeleton.nodes[i] /= static_cast<double>(members[i]);

  std::set<std::array<std::uint32_t, 2>> links;
  for (std::uint32_t v = 0; v < n; ++v) {
    for (const auto& [w, len] : graph[v]) {
      auto a = node_of[v], b = node_of[w];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      links.insert({a, b});
    }
  }
  skeleton.edges.assign(links.begin(), links.end());

  // Radius about the local centerline: tangent points from shallower to deeper
  // neighbouring nodes.
  const auto adj = skeleton.adjacency();
  std::vector<Vec3> tangent(roots.size(), Vec3::Zero());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (auto j : adj[i]) {
      const Vec3 d = (skeleton.nodes[j] - skeleton.nodes[i]).normalized();
      tangent[i] += ring[roots[j]] >= ring[roots[i]] ? d : Vec3(-d);
    }
    const double len = tangent[i].norm();
    tangent[i] = len > 1e-9 ? Vec3(tangent[i] / len) : Vec3::Zero();
  }
  std::vector<double> radial_sum(roots.size(), 0.0);
  for (std::uint32_t v = 0; v < n; ++v) {
    const auto i = node_of[v];
    const Vec3 offset = mesh.vertices[v] - skeleton.nodes[i];
    radial_sum[i] += (offset - offset.dot(tangent[i]) * tangent[i]).norm();
  }
  skeleton.radius.resize(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    skeleton.radius[i] = radial_sum[i] / static_cast<double>(members[i]);
  }
  return skeleton;
}

std::vector<double> skeleton_depths(const SkeletonGraph& skeleton) {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> graph(skeleton.nodes.size());
  for (const auto& e : skeleton.edges) {
    const double len = (skeleton.nodes[e[0]] - skeleton.nodes[e[1]]).norm();
    graph[e[0]].emplace_back(e[1], len);
    graph[e[1]].emplace_back(e[0], len);
  }
  if (skeleton.nodes.empty()) return {};
  return dijkstra(graph, 0);
}

std::vector<std::uint32_t> sample_camera_stations(const SkeletonGraph& skeleton, std::size_t count) {
  const std::size_t n = skeleton.nodes.size();
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "station count must be at least 1");
  if (count > n) {
    throw Error(ErrorCode::kTooManyStations, "requested " + std::to_string(count) +
                                                 " stations but skeleton has " + std::to_string(n) +
                                                 " nodes");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : skeleton.nodes) centroid += p;
  centroid /= static_cast<double>(n);

  std::uint32_t first = 0;
  double best = -1.0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const double d = (skeleton.nodes[i] - centroid).squaredNorm();
    if (d > best) {
      best = d;
      first = i;
    }
  }
  std::vector<std::uint32_t> chosen{first};
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < count) {
    const Vec3& last = skeleton.nodes[chosen.back()];
    std::uint32_t next = 0;
    double farthest = -1.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], (skeleton.nodes[i] - last).squaredNorm());
      if (min_dist[i] > farthest) {
        farthest = min_dist[i];
        next = i;
      }
    }
    chosen.push_back(next);
  }
  return chosen;
}

std::vector<std::uint32_t> order_by_depth(const SkeletonGraph& skeleton,
                                          std::span<const std::uint32_t> stations) {
  const auto depth = skeleton_depths(skeleton);
  std::vector<std::uint32_t> ordered(stations.begin(), stations.end());
  std::sort(ordered.begin(), ordered.end(), [&](std::uint32_t a, std::uint32_t b) {
    return depth[a] != depth[b] ? depth[a] < depth[b] : a < b;
  });
  return ordered;
}

std::vector<CameraPose> build_poses(const SkeletonGraph& skeleton, std::span<const std::uint32_t> stations) {
  if (stations.empty()) throw Error(ErrorCode::kInvalidArgument, "no camera stations given");
  const auto adj = skeleton.adjacency();
  const auto depth = skeleton_depths(skeleton);

  std::vector<CameraPose> poses;
  poses.reserve(stations.size());
  Vec3 up(0.0, 0.0, 1.0);
  Vec3 previous_forward = Vec3::Zero();
  for (std::size_t k = 0; k < stations.size(); ++k) {
    const auto s = stations[k];
    if (s >= skeleton.nodes.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "station " + std::to_string(s) + " is not a skeleton node");
    }
    if (adj[s].empty()) throw Error(ErrorCode::kIsolatedNode, "skeleton node " + std::to_string(s) + " has no edges");

    // Deepest neighbour; adjacency is sorted so ties keep the lower index.
    std::uint32_t target = adj[s].front();
    for (auto j : adj[s]) {
      if (depth[j] > depth[target]) target = j;
    }
    // At the deep end of the graph every neighbour lies behind: keep heading the same way.
    const Vec3 forward = depth[target] > depth[s] ? (skeleton.nodes[target] - skeleton.nodes[s]).normalized()
                                                  : (skeleton.nodes[s] - skeleton.nodes[target]).normalized();

    if (k > 0) {
      // Minimal rotation carrying the previous forward onto this one.
      up = Eigen::Quaterniond::FromTwoVectors(previous_forward, forward) * up;
    }
    CameraPose pose;
    pose.rotation = frame_from(forward, up);
    pose.position = skeleton.nodes[s];
    pose.pose_id = static_cast<int>(k);
    up = pose.up();
    previous_forward = forward;
    poses.push_back(pose);
  }
  return poses;
}

namespace {

Vec3 catmull_rom(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, double s) {
  auto knot = [](const Vec3& a, const Vec3& b) { return std::max(std::sqrt((b - a).norm()), 1e-9); };
  const double t0 = 0.0;
  const double t1 = t0 + knot(p0, p1);
  const double t2 = t1 + knot(p1, p2);
  const double t3 = t2 + knot(p2, p3);
  const double t = t1 + s * (t2 - t1);
  const Vec3 a1 = (t1 - t) / (t1 - t0) * p0 + (t - t0) / (t1 - t0) * p1;
  const Vec3 a2 = (t2 - t) / (t2 - t1) * p1 + (t - t1) / (t2 - t1) * p2;
  const Vec3 a3 = (t3 - t) / (t3 - t2) * p2 + (t - t2) / (t3 - t2) * p3;
  const Vec3 b1 = (t2 - t) / (t2 - t0) * a1 + (t - t0) / (t2 - t0) * a2;
  const Vec3 b2 = (t3 - t) / (t3 - t1) * a2 + (t - t1) / (t3 - t1) * a3;
  return (t2 - t) / (t2 - t1) * b1 + (t - t1) / (t2 - t1) * b2;
}

}  // namespace

std::vector<CameraPose> interpolate_trajectory(std::span<const CameraPose> stations, int frames_per_segment) {
  if (stations.size() < 2) {
    throw Error(ErrorCode::kTooFewStations,
                "trajectory needs at least 2 stations, got " + std::to_string(stations.size()));
  }
  if (frames_per_segment < 1) throw Error(ErrorCode::kInvalidArgument, "frames_per_segment must be >= 1");

  const std::size_t n = stations.size();
  auto point = [&](long long i) -> Vec3 {
    if (i < 0) return 2.0 * stations[0].position - stations[1].position;
    if (i >= static_cast<long long>(n)) return 2.0 * stations[n - 1].position - stations[n - 2].position;
    return stations[static_cast<std::size_t>(i)].position;
  };

  std::vector<CameraPose> out;
  out.reserve((n - 1) * static_cast<std::size_t>(frames_per_segment) + 1);
  for (std::size_t seg = 0; seg + 1 < n; ++seg) {
    const Eigen::Quaterniond q0(stations[seg].rotation);
    const Eigen::Quaterniond q1(stations[seg + 1].rotation);
    const auto i = static_cast<long long>(seg);
    for (int f = 0; f < frames_per_segment; ++f) {
      CameraPose pose;
      if (f == 0) {
        pose.rotation = stations[seg].rotation;
        pose.position = stations[seg].position;
      } else {
        const double s = static_cast<double>(f) / frames_per_segment;
        pose.position = catmull_rom(point(i - 1), point(i), point(i + 1), point(i + 2), s);
        pose.rotation = q0.slerp(s, q1).normalized().toRotationMatrix();
      }
      pose.pose_id = static_cast<int>(out.size());
      out.push_back(pose);
    }
  }
  CameraPose last = stations.back();
  last.pose_id = static_cast<int>(out.size());
  out.push_back(last);
  return out;
}

std::vector<CameraPose> interpolate_trajectory(const SkeletonGraph& skeleton,
                                               std::span<const std::uint32_t> stations,
                                               int frames_per_segment) {
  if (stations.size() < 2) {
    throw Error(ErrorCode::kTooFewStations,
                "trajectory needs at least 2 stations, got " + std::to_string(stations.size()));
  }
  const auto poses = build_poses(skeleton, stations);
  return interpolate_trajectory(poses, frames_per_segment);
}

nlohmann::json skeleton_to_json(const SkeletonGraph& skeleton) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& p : skeleton.nodes) j["nodes"].push_back({p.x(), p.y(), p.z()});
  j["edges"] = nlohmann::json::array();
  for (const auto& e : skeleton.edges) j["edges"].push_back({e[0], e[1]});
  j["radius"] = skeleton.radius;
  return j;
}

SkeletonGraph skeleton_from_json(const nlohmann::json& j) {
  SkeletonGraph s;
  try {
    for (const auto& p : j.at("nodes")) s.nodes.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    for (const auto& e : j.at("edges")) {
      const auto a = e.at(0).get<std::uint32_t>(), b = e.at(1).get<std::uint32_t>();
      if (a >= s.nodes.size() || b >= s.nodes.size()) {
        throw Error(ErrorCode::kIndexOutOfRange, "skeleton edge references missing node");
      }
      if (a == b) throw Error(ErrorCode::kParse, "skeleton edge " + std::to_string(a) + " is a self-loop");
      s.edges.push_back({std::min(a, b), std::max(a, b)});
    }
    if (j.contains("radius")) s.radius = j.at("radius").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("skeleton json: ") + e.what());
  }
  if (s.radius.empty()) s.radius.assign(s.nodes.size(), 0.0);
  if (s.radius.size() != s.nodes.size()) throw Error(ErrorCode::kParse, "skeleton json: radius/node count mismatch");
  return s;
}

SkeletonGraph load_skeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return skeleton_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

nlohmann::json poses_to_json(std::span<const CameraPose> poses) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : poses) {
    std::vector<double> rot;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
    j.push_back({{"pose_id", p.pose_id},
                 {"rotation", rot},
                 {"position", {p.position.x(), p.position.y(), p.position.z()}}});
  }
  return j;
}

std::vector<CameraPose> poses_from_json(const nlohmann::json& j) {
  std::vector<CameraPose> poses;
  try {
    for (const auto& item : j) {
      CameraPose p;
      p.pose_id = item.at("pose_id").get<int>();
      const auto rot = item.at("rotation").get<std::vector<double>>();
      const auto pos = item.at("position").get<std::vector<double>>();
      if (rot.size() != 9 || pos.size() != 3) throw Error(ErrorCode::kParse, "pose json: bad array sizes");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot[static_cast<std::size_t>(r * 3 + c)];
      p.position = Vec3(pos[0], pos[1], pos[2]);
      poses.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("pose json: ") + e.what());
  }
  return poses;
}

}  // namespace lumenpaint
