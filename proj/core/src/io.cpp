#include "jawgrasp/io.hpp"

#include "jawgrasp/errors.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace jawgrasp {

namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_long(std::string_view s, long& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string path_string(const std::filesystem::path& p) { return p.string(); }

// PLY scalar types by name; size 0 means unknown.
std::size_t ply_type_size(std::string_view t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

double read_binary_scalar(const char* p, std::string_view t) {
  auto load = [p]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  if (t == "char" || t == "int8") return load(std::int8_t{});
  if (t == "uchar" || t == "uint8") return load(std::uint8_t{});
  if (t == "short" || t == "int16") return load(std::int16_t{});
  if (t == "ushort" || t == "uint16") return load(std::uint16_t{});
  if (t == "int" || t == "int32") return load(std::int32_t{});
  if (t == "uint" || t == "uint32") return load(std::uint32_t{});
  if (t == "float" || t == "float32") return load(float{});
  return load(double{});
}

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

}  // namespace

TriMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  const std::string name = path_string(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + name);
  const auto ext = path.extension().string();
  if (ext != ".obj" && ext != ".OBJ") throw Error(ErrorCode::UnsupportedFormat, name + ": only OBJ meshes are supported");

  TriMesh mesh;
  std::vector<std::pair<std::array<long, 3>, std::size_t>> pending;  // faces with source line
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) throw ParseError(name, lineno, "vertex needs three coordinates");
      Vec3 v;
      for (int k = 0; k < 3; ++k) {
        if (!parse_double(tok[1 + k], v[k]) || !std::isfinite(v[k])) {
          throw ParseError(name, lineno, "bad vertex coordinate '" + std::string(tok[1 + k]) + "'");
        }
      }
      mesh.vertices.push_back(v);
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw ParseError(name, lineno, "face needs at least three vertices");
      std::vector<long> idx;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const auto slash = tok[k].find('/');
        long v = 0;
        if (!parse_long(tok[k].substr(0, slash), v) || v == 0) {
          throw ParseError(name, lineno, "bad face index '" + std::string(tok[k]) + "'");
        }
        // Negative indices are relative to the vertices read so far.
        const long resolved = v > 0 ? v - 1 : static_cast<long>(mesh.vertices.size()) + v;
        idx.push_back(resolved);
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) pending.push_back({{idx[0], idx[k], idx[k + 1]}, lineno});
    }
    // vn, vt, o, g, s, usemtl, mtllib and the rest carry nothing we need.
  }
  if (in.bad()) throw Error(ErrorCode::Io, "read failure on " + name);

  const auto nv = static_cast<long>(mesh.vertices.size());
  for (const auto& [f, at] : pending) {
    for (auto v : f) {
      if (v < 0 || v >= nv) throw ParseError(name, at, "face index out of range");
    }
    Face face{static_cast<std::uint32_t>(f[0]), static_cast<std::uint32_t>(f[1]), static_cast<std::uint32_t>(f[2])};
    const Vec3 c = (mesh.vertices[face[1]] - mesh.vertices[face[0]]).cross(mesh.vertices[face[2]] - mesh.vertices[face[0]]);
    if (c.norm() < 1e-12) continue;
    mesh.faces.push_back(face);
  }
  if (mesh.faces.empty()) throw ParseError(name, lineno, "no faces");
  return mesh;
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path_string(path));
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failure on " + path_string(path));
}

PointCloud load_cloud(const std::filesystem::path& path) {
  const std::string name = path_string(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + name);
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  std::size_t lineno = 0;
  auto next_line = [&](std::string& line) {
    if (pos >= data.size()) return false;
    const auto nl = data.find('\n', pos);
    const auto end = nl == std::string::npos ? data.size() : nl;
    line.assign(data, pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = nl == std::string::npos ? data.size() : nl + 1;
    ++lineno;
    return true;
  };

  std::string line;
  if (!next_line(line) || line != "ply") throw ParseError(name, 1, "missing 'ply' magic");
  std::string format;
  std::vector<PlyElement> elements;
  bool header_done = false;
  while (next_line(line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw ParseError(name, lineno, "bad format line");
      format = std::string(tok[1]);
    } else if (tok[0] == "element") {
      long count = 0;
      if (tok.size() < 3 || !parse_long(tok[2], count) || count < 0) throw ParseError(name, lineno, "bad element line");
      elements.push_back({std::string(tok[1]), static_cast<std::size_t>(count), {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError(name, lineno, "property before element");
      if (tok.size() >= 5 && tok[1] == "list") {
        elements.back().props.push_back({std::string(tok[4]), std::string(tok[3]), true});
      } else if (tok.size() >= 3) {
        if (ply_type_size(tok[1]) == 0) throw ParseError(name, lineno, "unknown property type");
        elements.back().props.push_back({std::string(tok[2]), std::string(tok[1]), false});
      } else {
        throw ParseError(name, lineno, "bad property line");
      }
    } else if (tok[0] == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw ParseError(name, lineno, "header not terminated");
  const bool binary = format == "binary_little_endian";
  if (!binary && format != "ascii") throw Error(ErrorCode::UnsupportedFormat, name + ": PLY format '" + format + "'");

  std::size_t vertex_el = elements.size();
  for (std::size_t e = 0; e < elements.size(); ++e) {
    if (elements[e].name == "vertex") {
      vertex_el = e;
      break;
    }
  }
  if (vertex_el == elements.size()) throw ParseError(name, lineno, "no vertex element");
  for (std::size_t e = 0; e < vertex_el; ++e) {
    if (elements[e].count > 0) throw Error(ErrorCode::UnsupportedFormat, name + ": data before the vertex element");
  }
  const auto& vel = elements[vertex_el];
  int slot[6] = {-1, -1, -1, -1, -1, -1};
  const char* names[6] = {"x", "y", "z", "nx", "ny", "nz"};
  for (std::size_t p = 0; p < vel.props.size(); ++p) {
    if (vel.props[p].is_list) throw Error(ErrorCode::UnsupportedFormat, name + ": list property in vertex element");
    for (int k = 0; k < 6; ++k) {
      if (vel.props[p].name == names[k]) slot[k] = static_cast<int>(p);
    }
  }
  if (slot[0] < 0 || slot[1] < 0 || slot[2] < 0) throw ParseError(name, lineno, "vertex element lacks x/y/z");
  const bool with_normals = slot[3] >= 0 && slot[4] >= 0 && slot[5] >= 0;

  PointCloud cloud;
  cloud.points.reserve(vel.count);
  if (with_normals) cloud.normals.reserve(vel.count);
  std::vector<double> values(vel.props.size());
  if (binary) {
    std::vector<std::size_t> offsets;
    std::size_t stride = 0;
    for (const auto& p : vel.props) {
      offsets.push_back(stride);
      stride += ply_type_size(p.type);
    }
    if (data.size() - pos < stride * vel.count) {
      const std::size_t have = data.size() - pos;
      throw ParseError(name, pos + (have / std::max<std::size_t>(stride, 1)) * stride, "truncated vertex data");
    }
    for (std::size_t i = 0; i < vel.count; ++i) {
      const char* rec = data.data() + pos + i * stride;
      for (std::size_t p = 0; p < vel.props.size(); ++p) values[p] = read_binary_scalar(rec + offsets[p], vel.props[p].type);
      cloud.points.emplace_back(values[slot[0]], values[slot[1]], values[slot[2]]);
      if (with_normals) cloud.normals.emplace_back(values[slot[3]], values[slot[4]], values[slot[5]]);
    }
  } else {
    for (std::size_t i = 0; i < vel.count; ++i) {
      if (!next_line(line)) throw ParseError(name, lineno + 1, "truncated vertex data");
      const auto tok = split_ws(line);
      if (tok.size() < vel.props.size()) throw ParseError(name, lineno, "too few values in vertex row");
      for (std::size_t p = 0; p < vel.props.size(); ++p) {
        if (!parse_double(tok[p], values[p])) throw ParseError(name, lineno, "bad number '" + std::string(tok[p]) + "'");
        if (vel.props[p].type == "float" || vel.props[p].type == "float32") values[p] = static_cast<float>(values[p]);
      }
      cloud.points.emplace_back(values[slot[0]], values[slot[1]], values[slot[2]]);
      if (with_normals) cloud.normals.emplace_back(values[slot[3]], values[slot[4]], values[slot[5]]);
    }
  }
  for (const auto& p : cloud.points) {
    if (!p.allFinite()) throw ParseError(name, lineno, "non-finite coordinate");
  }
  return cloud;
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, PlyEncoding encoding) {
  cloud.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path_string(path));
  const bool normals = cloud.has_normals();
  out << "ply\n"
      << "format " << (encoding == PlyEncoding::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
      << "element vertex " << cloud.size() << '\n'
      << "property float x\nproperty float y\nproperty float z\n";
  if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    float v[6];
    for (int k = 0; k < 3; ++k) v[k] = static_cast<float>(cloud.points[i][k]);
    if (normals) {
      for (int k = 0; k < 3; ++k) v[3 + k] = static_cast<float>(cloud.normals[i][k]);
    }
    const int n = normals ? 6 : 3;
    if (encoding == PlyEncoding::Ascii) {
      out << std::setprecision(9);
      for (int k = 0; k < n; ++k) out << v[k] << (k + 1 < n ? ' ' : '\n');
    } else {
      out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(sizeof(float) * n));
    }
  }
  if (!out) throw Error(ErrorCode::Io, "write failure on " + path_string(path));
}

}  // namespace jawgrasp
