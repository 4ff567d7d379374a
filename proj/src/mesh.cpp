#include "lumenpaint/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>

#include "lumenpaint/error.hpp"

namespace lumenpaint {

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

// ---------------------------------------------------------------------------
// PLY

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

PlyType parse_ply_type(const std::string& name) {
  static const std::map<std::string, PlyType> kTypes = {
      {"char", PlyType::kInt8},      {"int8", PlyType::kInt8},
      {"uchar", PlyType::kUint8},    {"uint8", PlyType::kUint8},
      {"short", PlyType::kInt16},    {"int16", PlyType::kInt16},
      {"ushort", PlyType::kUint16},  {"uint16", PlyType::kUint16},
      {"int", PlyType::kInt32},      {"int32", PlyType::kInt32},
      {"uint", PlyType::kUint32},    {"uint32", PlyType::kUint32},
      {"float", PlyType::kFloat32},  {"float32", PlyType::kFloat32},
      {"double", PlyType::kFloat64}, {"float64", PlyType::kFloat64}};
  auto it = kTypes.find(name);
  if (it == kTypes.end()) throw Error(ErrorCode::kParse, "ply: unknown property type '" + name + "'");
  return it->second;
}

bool is_integer(PlyType t) { return t != PlyType::kFloat32 && t != PlyType::kFloat64; }

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUint8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

enum class PlyFormat { kAscii, kBinaryLe, kBinaryBe };

class PlyReader {
 public:
  PlyReader(const std::string& data, std::size_t offset, PlyFormat format)
      : data_(data), pos_(offset), format_(format) {}

  double read(PlyType type) {
    if (format_ == PlyFormat::kAscii) return read_ascii(type);
    switch (type) {
      case PlyType::kInt8: return read_binary<std::int8_t>();
      case PlyType::kUint8: return read_binary<std::uint8_t>();
      case PlyType::kInt16: return read_binary<std::int16_t>();
      case PlyType::kUint16: return read_binary<std::uint16_t>();
      case PlyType::kInt32: return read_binary<std::int32_t>();
      case PlyType::kUint32: return read_binary<std::uint32_t>();
      case PlyType::kFloat32: return read_binary<float>();
      case PlyType::kFloat64: return read_binary<double>();
    }
    return 0.0;
  }

 private:
  template <typename T>
  double read_binary() {
    if (pos_ + sizeof(T) > data_.size()) throw Error(ErrorCode::kParse, "ply: unexpected end of binary data");
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if (format_ == PlyFormat::kBinaryBe) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    pos_ += sizeof(T);
    return static_cast<double>(value);
  }

  double read_ascii(PlyType type) {
    while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    while (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    if (start == pos_) throw Error(ErrorCode::kParse, "ply: unexpected end of ascii data");
    const std::string token = data_.substr(start, pos_ - start);
    try {
      std::size_t used = 0;
      const double value = is_integer(type) ? static_cast<double>(std::stoll(token, &used))
                                            : std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "ply: bad number '" + token + "'");
    }
  }

  const std::string& data_;
  std::size_t pos_;
  PlyFormat format_;
};

TriMesh parse_ply(const std::string& data) {
  if (data.rfind("ply", 0) != 0) throw Error(ErrorCode::kParse, "ply: missing magic");
  const std::size_t header_end = data.find("end_header");
  if (header_end == std::string::npos) throw Error(ErrorCode::kParse, "ply: missing end_header");
  std::size_t body = data.find('\n', header_end);
  if (body == std::string::npos) throw Error(ErrorCode::kParse, "ply: truncated header");
  ++body;

  std::istringstream header(data.substr(0, header_end));
  std::string line;
  std::optional<PlyFormat> format;
  std::vector<PlyElement> elements;
  while (std::getline(header, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::string keyword;
    words >> keyword;
    if (keyword == "format") {
      std::string name;
      words >> name;
      if (name == "ascii") format = PlyFormat::kAscii;
      else if (name == "binary_little_endian") format = PlyFormat::kBinaryLe;
      else if (name == "binary_big_endian") format = PlyFormat::kBinaryBe;
      else throw Error(ErrorCode::kParse, "ply: unknown format '" + name + "'");
    } else if (keyword == "element") {
      PlyElement element;
      words >> element.name >> element.count;
      if (!words) throw Error(ErrorCode::kParse, "ply: bad element line '" + line + "'");
      elements.push_back(std::move(element));
    } else if (keyword == "property") {
      if (elements.empty()) throw Error(ErrorCode::kParse, "ply: property before element");
      PlyProperty prop;
      std::string type;
      words >> type;
      if (type == "list") {
        std::string count_type, item_type;
        words >> count_type >> item_type >> prop.name;
        prop.is_list = true;
        prop.count_type = parse_ply_type(count_type);
        prop.type = parse_ply_type(item_type);
      } else {
        prop.type = parse_ply_type(type);
        words >> prop.name;
      }
      if (prop.name.empty()) throw Error(ErrorCode::kParse, "ply: bad property line '" + line + "'");
      elements.back().properties.push_back(prop);
    }
  }
  if (!format) throw Error(ErrorCode::kParse, "ply: missing format line");

  TriMesh mesh;
  std::vector<Vec3> colors;
  bool has_colors = false;
  PlyReader reader(data, body, *format);
  for (const auto& element : elements) {
    const bool is_vertex = element.name == "vertex";
    const bool is_face = element.name == "face";
    int xyz[3] = {-1, -1, -1};
    int rgb[3] = {-1, -1, -1};
    for (std::size_t p = 0; p < element.properties.size(); ++p) {
      const auto& n = element.properties[p].name;
      const int idx = static_cast<int>(p);
      if (n == "x") xyz[0] = idx;
      if (n == "y") xyz[1] = idx;
      if (n == "z") xyz[2] = idx;
      if (n == "red") rgb[0] = idx;
      if (n == "green") rgb[1] = idx;
      if (n == "blue") rgb[2] = idx;
    }
    if (is_vertex) {
      if (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0) throw Error(ErrorCode::kParse, "ply: vertex element lacks x/y/z");
      has_colors = rgb[0] >= 0 && rgb[1] >= 0 && rgb[2] >= 0;
    }
    for (std::size_t i = 0; i < element.count; ++i) {
      std::vector<double> scalars(element.properties.size(), 0.0);
      Vec3 color = Vec3::Zero();
      for (std::size_t p = 0; p < element.properties.size(); ++p) {
        const auto& prop = element.properties[p];
        if (prop.is_list) {
          const auto n = static_cast<long long>(reader.read(prop.count_type));
          if (n < 0) throw Error(ErrorCode::kParse, "ply: negative list length");
          std::vector<double> items(static_cast<std::size_t>(n));
          for (auto& item : items) item = reader.read(prop.type);
          if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
            if (n != 3) {
              throw Error(ErrorCode::kNonTriangleFace,
                          "face " + std::to_string(i) + " has " + std::to_string(n) + " vertices");
            }
            Face f{};
            for (int k = 0; k < 3; ++k) {
              if (items[k] < 0) {
                throw Error(ErrorCode::kIndexOutOfRange,
                            "face " + std::to_string(i) + " has negative vertex index");
              }
              f[k] = static_cast<std::uint32_t>(items[k]);
            }
            mesh.faces.push_back(f);
          }
        } else {
          const double value = reader.read(prop.type);
          scalars[p] = value;
          if (is_vertex && has_colors) {
            for (int c = 0; c < 3; ++c) {
              if (static_cast<int>(p) == rgb[c]) {
                color[c] = is_integer(prop.type) ? value / 255.0 : value;
              }
            }
          }
        }
      }
      if (is_vertex) {
        mesh.vertices.emplace_back(scalars[xyz[0]], scalars[xyz[1]], scalars[xyz[2]]);
        if (has_colors) colors.push_back(color);
      }
    }
  }
  if (has_colors) mesh.colors = std::move(colors);
  return mesh;
}

// ---------------------------------------------------------------------------
// OBJ

TriMesh parse_obj(const std::string& data) {
  TriMesh mesh;
  std::vector<Vec3> colors;
  bool colors_consistent = true;
  std::istringstream in(data);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::string keyword;
    words >> keyword;
    if (keyword == "v") {
      std::vector<double> values;
      double x;
      while (words >> x) values.push_back(x);
      if (values.size() != 3 && values.size() != 6) {
        throw Error(ErrorCode::kParse, "obj: bad vertex on line " + std::to_string(line_no));
      }
      mesh.vertices.emplace_back(values[0], values[1], values[2]);
      if (values.size() == 6) colors.emplace_back(values[3], values[4], values[5]);
      else colors_consistent = false;
    } else if (keyword == "f") {
      std::vector<long long> idx;
      std::string token;
      while (words >> token) {
        const std::string head = token.substr(0, token.find('/'));
        try {
          std::size_t used = 0;
          const long long value = std::stoll(head, &used);
          if (used != head.size()) throw std::invalid_argument(head);
          idx.push_back(value);
        } catch (const std::exception&) {
          throw Error(ErrorCode::kParse, "obj: bad face index '" + token + "' on line " +
                                             std::to_string(line_no));
        }
      }
      const std::size_t face_no = mesh.faces.size();
      if (idx.size() != 3) {
        throw Error(ErrorCode::kNonTriangleFace,
                    "face " + std::to_string(face_no) + " has " + std::to_string(idx.size()) + " vertices");
      }
      Face f{};
      for (int k = 0; k < 3; ++k) {
        long long v = idx[k] > 0 ? idx[k] - 1 : static_cast<long long>(mesh.vertices.size()) + idx[k];
        if (idx[k] == 0 || v < 0) {
          throw Error(ErrorCode::kIndexOutOfRange,
                      "face " + std::to_string(face_no) + " has invalid index " + std::to_string(idx[k]));
        }
        f[k] = static_cast<std::uint32_t>(v);
      }
      mesh.faces.push_back(f);
    }
  }
  if (colors_consistent && !colors.empty() && colors.size() == mesh.vertices.size()) {
    mesh.colors = std::move(colors);
  }
  return mesh;
}

void check_indices(const TriMesh& mesh) {
  const auto n = mesh.vertices.size();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    for (auto v : mesh.faces[f]) {
      if (v >= n) {
        throw Error(ErrorCode::kIndexOutOfRange, "face " + std::to_string(f) + " references vertex " +
                                                     std::to_string(v) + " but mesh has " +
                                                     std::to_string(n) + " vertices");
      }
    }
  }
}

void write_ply(const TriMesh& mesh, const std::filesystem::path& path, bool with_colors) {
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n"
         << "element vertex " << mesh.vertices.size() << "\n"
         << "property float x\nproperty float y\nproperty float z\n";
  if (with_colors) header << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  header << "element face " << mesh.faces.size() << "\n"
         << "property list uchar int vertex_indices\nend_header\n";

  std::string out = header.str();
  auto append = [&out](const auto& value) {
    const auto* bytes = reinterpret_cast<const char*>(&value);
    out.append(bytes, sizeof(value));
  };
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    for (int k = 0; k < 3; ++k) append(static_cast<float>(mesh.vertices[i][k]));
    if (with_colors) {
      for (int k = 0; k < 3; ++k) append(quantize_unit((*mesh.colors)[i][k]));
    }
  }
  for (const auto& f : mesh.faces) {
    append(static_cast<std::uint8_t>(3));
    for (auto v : f) append(static_cast<std::int32_t>(v));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace

BoundingBoxNormalizer BoundingBoxNormalizer::fit(std::span<const Vec3> points) {
  BoundingBoxNormalizer n;
  if (points.empty()) return n;
  Vec3 lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  n.center = 0.5 * (lo + hi);
  n.half_extent = std::max(0.5 * (hi - lo).maxCoeff(), 1e-12);
  return n;
}

std::vector<Vec3> compute_vertex_normals(const TriMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (const auto& f : mesh.faces) {
    const Vec3 n = (mesh.vertices[f[1]] - mesh.vertices[f[0]])
                       .cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    for (auto v : f) normals[v] += n;
  }
  for (auto& n : normals) {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
  }
  return normals;
}

double face_area(const TriMesh& mesh, std::size_t face) {
  const auto& f = mesh.faces[face];
  return 0.5 * (mesh.vertices[f[1]] - mesh.vertices[f[0]])
                   .cross(mesh.vertices[f[2]] - mesh.vertices[f[0]])
                   .norm();
}

double surface_area(const TriMesh& mesh) {
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) total += face_area(mesh, f);
  return total;
}

void validate_mesh(const TriMesh& mesh) {
  if (mesh.vertices.empty() || mesh.faces.empty()) {
    throw Error(ErrorCode::kEmptyMesh, "mesh has " + std::to_string(mesh.vertices.size()) +
                                           " vertices and " + std::to_string(mesh.faces.size()) +
                                           " faces");
  }
  check_indices(mesh);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2] || face_area(mesh, f) <= 1e-12) {
      throw Error(ErrorCode::kDegenerateFace, "face " + std::to_string(f) + " is degenerate");
    }
  }
  if (mesh.vertices.size() < 4 || mesh.faces.size() < 4) {
    throw Error(ErrorCode::kEmptyMesh, "mesh needs at least 4 vertices and 4 faces, has " +
                                           std::to_string(mesh.vertices.size()) + " and " +
                                           std::to_string(mesh.faces.size()));
  }
}

std::size_t weld_vertices(TriMesh& mesh, double tolerance) {
  std::map<std::array<long long, 3>, std::uint32_t> seen;
  std::vector<std::uint32_t> remap(mesh.vertices.size());
  std::vector<Vec3> vertices;
  std::vector<Vec3> colors;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& p = mesh.vertices[i];
    const std::array<long long, 3> key = {std::llround(p.x() / tolerance), std::llround(p.y() / tolerance),
                                          std::llround(p.z() / tolerance)};
    auto [it, inserted] = seen.emplace(key, static_cast<std::uint32_t>(vertices.size()));
    if (inserted) {
      vertices.push_back(p);
      if (mesh.colors) colors.push_back((*mesh.colors)[i]);
    }
    remap[i] = it->second;
  }
  const std::size_t removed = mesh.vertices.size() - vertices.size();
  if (removed == 0) return 0;
  for (auto& f : mesh.faces) {
    for (auto& v : f) v = remap[v];
  }
  mesh.vertices = std::move(vertices);
  if (mesh.colors) mesh.colors = std::move(colors);
  return removed;
}

TriMesh load_mesh(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  TriMesh mesh;
  if (ext == ".obj") {
    mesh = parse_obj(data);
  } else if (ext == ".ply" || data.rfind("ply", 0) == 0) {
    mesh = parse_ply(data);
  } else {
    throw Error(ErrorCode::kParse, "unsupported mesh format '" + ext + "'");
  }
  if (mesh.vertices.empty() || mesh.faces.empty()) {
    throw Error(ErrorCode::kEmptyMesh, path.string() + " contains no triangles");
  }
  check_indices(mesh);
  weld_vertices(mesh);
  validate_mesh(mesh);
  mesh.normals = compute_vertex_normals(mesh);
  return mesh;
}

TriMesh subdivide(const TriMesh& mesh, int iterations) {
  if (iterations < 0) throw Error(ErrorCode::kInvalidArgument, "subdivision iterations must be >= 0");
  TriMesh current = mesh;
  for (int it = 0; it < iterations; ++it) {
    TriMesh next;
    next.vertices = current.vertices;
    if (current.colors) next.colors = current.colors;
    next.faces.reserve(current.faces.size() * 4);
    std::unordered_map<std::uint64_t, std::uint32_t> midpoints;
    midpoints.reserve(current.faces.size() * 2);
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      auto [pos, inserted] = midpoints.emplace(edge_key(a, b), static_cast<std::uint32_t>(next.vertices.size()));
      if (inserted) {
        next.vertices.push_back(0.5 * (current.vertices[a] + current.vertices[b]));
        if (next.colors) next.colors->push_back(0.5 * ((*current.colors)[a] + (*current.colors)[b]));
      }
      return pos->second;
    };
    for (const auto& f : current.faces) {
      const auto ab = midpoint(f[0], f[1]);
      const auto bc = midpoint(f[1], f[2]);
      const auto ca = midpoint(f[2], f[0]);
      next.faces.push_back({f[0], ab, ca});
      next.faces.push_back({ab, f[1], bc});
      next.faces.push_back({ca, bc, f[2]});
      next.faces.push_back({ab, bc, ca});
    }
    current = std::move(next);
  }
  current.normals = compute_vertex_normals(current);
  return current;
}

std::uint8_t quantize_unit(double c) {
  const double clamped = std::clamp(c, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * clamped));
}

void export_colored_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
  if (!mesh.colors || mesh.colors->size() != mesh.vertices.size()) {
    throw Error(ErrorCode::kMissingColors, "mesh has no per-vertex colors to export");
  }
  write_ply(mesh, path, true);
}

void export_mesh(const TriMesh& mesh, const std::filesystem::path& path) { write_ply(mesh, path, false); }

void round_to_float(TriMesh& mesh) {
  double* d = mesh.vertices.empty() ? nullptr : mesh.vertices.front().data();
  for (std::size_t i = 0; i < 3 * mesh.vertices.size(); ++i) d[i] = static_cast<double>(static_cast<float>(d[i]));
  mesh.normals = compute_vertex_normals(mesh);
}

std::vector<std::pair<std::array<std::uint32_t, 2>, int>> edge_face_counts(const TriMesh& mesh) {
  std::map<std::array<std::uint32_t, 2>, int> counts;
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      auto a = f[k], b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++counts[{a, b}];
    }
  }
  return {counts.begin(), counts.end()};
}

bool point_inside(const TriMesh& mesh, const Vec3& point) {
  const Vec3 dir = Vec3(0.5377, 0.3141, 0.7826).normalized();
  int crossings = 0;
  for (const auto& f : mesh.faces) {
    auto hit = intersect_ray_triangle(point, dir, mesh.vertices[f[0]], mesh.vertices[f[1]],
                                      mesh.vertices[f[2]], 0.0);
    if (hit && hit->t > 1e-9) ++crossings;
  }
  return (crossings % 2) == 1;
}

}  // namespace lumenpaint
