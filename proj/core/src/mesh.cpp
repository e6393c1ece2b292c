#include "jawgrasp/mesh.hpp"

#include "jawgrasp/errors.hpp"
#include "jawgrasp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <utility>

namespace jawgrasp {

namespace {

Vec3 face_cross(const TriMesh& mesh, std::size_t face) {
  const auto& f = mesh.faces[face];
  const Vec3& a = mesh.vertices[f[0]];
  const Vec3& b = mesh.vertices[f[1]];
  const Vec3& c = mesh.vertices[f[2]];
  return (b - a).cross(c - a);
}

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidDimensions, std::string(what) + " must be positive");
  }
}

}  // namespace

void TriMesh::validate() const {
  const auto n = vertices.size();
  for (std::size_t i = 0; i < faces.size(); ++i) {
    for (auto v : faces[i]) {
      if (v >= n) {
        throw Error(ErrorCode::InvalidArgument, "face " + std::to_string(i) + " index out of range");
      }
    }
    if (face_cross(*this, i).norm() < 1e-12) {
      throw Error(ErrorCode::DegenerateFace, "face " + std::to_string(i) + " has zero area");
    }
  }
}

bool TriMesh::is_watertight() const {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& f : faces) {
    for (int k = 0; k < 3; ++k) {
      ++directed[{f[k], f[(k + 1) % 3]}];
    }
  }
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    const auto it = directed.find({edge.second, edge.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return !faces.empty();
}

Vec3 face_normal(const TriMesh& mesh, std::size_t face) {
  if (face >= mesh.faces.size()) {
    throw Error(ErrorCode::InvalidArgument, "face index out of range");
  }
  const Vec3 n = face_cross(mesh, face);
  const double len = n.norm();
  if (len < 1e-12) {
    throw Error(ErrorCode::DegenerateFace, "face " + std::to_string(face) + " has zero area");
  }
  return n / len;
}

double face_area(const TriMesh& mesh, std::size_t face) { return 0.5 * face_cross(mesh, face).norm(); }

double surface_area(const TriMesh& mesh) {
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) total += face_area(mesh, i);
  return total;
}

Vec3 bounding_box_center(const TriMesh& mesh) {
  if (mesh.vertices.empty()) return Vec3::Zero();
  Vec3 lo = mesh.vertices.front();
  Vec3 hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return 0.5 * (lo + hi);
}

PointCloud sample_surface(const TriMesh& mesh, std::size_t count, std::uint64_t seed) {
  if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "cannot sample an empty mesh");
  PointCloud out;
  if (count == 0) return out;

  std::vector<double> cumulative(mesh.faces.size());
  std::vector<Vec3> normals(mesh.faces.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const Vec3 n = face_cross(mesh, i);
    total += 0.5 * n.norm();
    cumulative[i] = total;
    normals[i] = n.normalized();
  }
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyMesh, "mesh has zero surface area");

  Rng rng(seed);
  out.points.reserve(count);
  out.normals.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double target = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    const auto fi = static_cast<std::size_t>(it - cumulative.begin());
    const auto& f = mesh.faces[fi];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    out.normals.push_back(normals[fi]);
  }
  return out;
}

double distance_to_surface(const TriMesh& mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : mesh.faces) {
    const Vec3 q = closest_on_triangle(p, mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    best = std::min(best, (q - p).squaredNorm());
  }
  return std::sqrt(best);
}

std::size_t closest_face(const TriMesh& mesh, const Vec3& p) {
  if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no faces");
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_face = 0;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const auto& f = mesh.faces[i];
    const double d =
        (closest_on_triangle(p, mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]) - p)
            .squaredNorm();
    if (d < best) {
      best = d;
      best_face = i;
    }
  }
  return best_face;
}

TriMesh make_box(double sx, double sy, double sz) {
  require_positive(sx, "box size x");
  require_positive(sy, "box size y");
  require_positive(sz, "box size z");
  const double hx = 0.5 * sx;
  const double hy = 0.5 * sy;
  const double hz = 0.5 * sz;
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? hx : -hx, (i & 2) ? hy : -hy, (i & 4) ? hz : -hz);
  }
  // Two CCW triangles per face, viewed from outside.
  m.faces = {
      {0, 2, 3}, {0, 3, 1},  // -z
      {4, 5, 7}, {4, 7, 6},  // +z
      {0, 1, 5}, {0, 5, 4},  // -y
      {2, 6, 7}, {2, 7, 3},  // +y
      {0, 4, 6}, {0, 6, 2},  // -x
      {1, 3, 7}, {1, 7, 5},  // +x
  };
  return m;
}

TriMesh make_cylinder(double radius, double height, int resolution) {
  require_positive(radius, "cylinder radius");
  require_positive(height, "cylinder height");
  if (resolution < 3) throw Error(ErrorCode::InvalidDimensions, "cylinder resolution must be >= 3");
  const auto n = static_cast<std::uint32_t>(resolution);
  const double hz = 0.5 * height;
  TriMesh m;
  for (std::uint32_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -hz);
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), hz);
  }
  const std::uint32_t bottom = 2 * n;
  const std::uint32_t top = 2 * n + 1;
  m.vertices.emplace_back(0.0, 0.0, -hz);
  m.vertices.emplace_back(0.0, 0.0, hz);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    m.faces.push_back({i, j, n + j});
    m.faces.push_back({i, n + j, n + i});
    m.faces.push_back({bottom, j, i});
    m.faces.push_back({top, n + i, n + j});
  }
  return m;
}

TriMesh make_sphere(double radius, int resolution) {
  require_positive(radius, "sphere radius");
  if (resolution < 4) throw Error(ErrorCode::InvalidDimensions, "sphere resolution must be >= 4");
  const auto slices = static_cast<std::uint32_t>(resolution);
  const auto stacks = std::max<std::uint32_t>(2, slices / 2);
  TriMesh m;
  m.vertices.emplace_back(0.0, 0.0, radius);  // north pole
  for (std::uint32_t s = 1; s < stacks; ++s) {
    const double phi = std::numbers::pi * s / stacks;
    for (std::uint32_t i = 0; i < slices; ++i) {
      const double theta = 2.0 * std::numbers::pi * i / slices;
      m.vertices.emplace_back(radius * std::sin(phi) * std::cos(theta),
                              radius * std::sin(phi) * std::sin(theta), radius * std::cos(phi));
    }
  }
  const auto south = static_cast<std::uint32_t>(m.vertices.size());
  m.vertices.emplace_back(0.0, 0.0, -radius);

  auto ring = [slices](std::uint32_t s, std::uint32_t i) { return 1 + (s - 1) * slices + (i % slices); };
  for (std::uint32_t i = 0; i < slices; ++i) {
    m.faces.push_back({0, ring(1, i), ring(1, i + 1)});
  }
  for (std::uint32_t s = 1; s + 1 < stacks; ++s) {
    for (std::uint32_t i = 0; i < slices; ++i) {
      m.faces.push_back({ring(s, i), ring(s + 1, i), ring(s + 1, i + 1)});
      m.faces.push_back({ring(s, i), ring(s + 1, i + 1), ring(s, i + 1)});
    }
  }
  for (std::uint32_t i = 0; i < slices; ++i) {
    m.faces.push_back({south, ring(stacks - 1, i + 1), ring(stacks - 1, i)});
  }
  return m;
}

TriMesh make_primitive(const PrimitiveSpec& spec) {
  switch (spec.kind) {
    case PrimitiveKind::Box: return make_box(spec.size.x(), spec.size.y(), spec.size.z());
    case PrimitiveKind::Cylinder: return make_cylinder(spec.radius, spec.height, spec.resolution);
    case PrimitiveKind::Sphere: return make_sphere(spec.radius, spec.resolution);
  }
  throw Error(ErrorCode::InvalidDimensions, "unknown primitive kind");
}

TriMesh transformed(const TriMesh& mesh, const RigidTransform& t) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = t.apply(v);
  return out;
}

TriMesh merged(const TriMesh& a, const TriMesh& b) {
  TriMesh out = a;
  const auto base = static_cast<std::uint32_t>(a.vertices.size());
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (const auto& f : b.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  return out;
}

}  // namespace jawgrasp
