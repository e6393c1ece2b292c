#include "jawgrasp/hull.hpp"

#include "jawgrasp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace jawgrasp {

namespace {

struct WorkFace {
  std::array<std::size_t, 3> v;
  Vec3 normal;
  double offset = 0.0;
  std::vector<std::size_t> outside;
  bool alive = true;
};

using Edge = std::pair<std::size_t, std::size_t>;

class QuickHullBuilder {
 public:
  QuickHullBuilder(std::span<const Vec3> pts, double tol) : pts_(pts), tol_(tol) {}

  ConvexHull run() {
    build_simplex();
    for (;;) {
      const auto next = pick_face();
      if (next == npos) break;
      add_point(next);
    }
    return collect();
  }

 private:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  double distance(const WorkFace& f, std::size_t p) const { return f.normal.dot(pts_[p]) - f.offset; }

  std::size_t make_face(std::size_t a, std::size_t b, std::size_t c) {
    WorkFace f;
    f.v = {a, b, c};
    f.normal = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]).normalized();
    f.offset = f.normal.dot(pts_[a]);
    faces_.push_back(std::move(f));
    const std::size_t id = faces_.size() - 1;
    edges_[{a, b}] = id;
    edges_[{b, c}] = id;
    edges_[{c, a}] = id;
    return id;
  }

  void build_simplex() {
    const std::size_t n = pts_.size();
    // Extreme points along each axis seed the first edge.
    std::array<std::size_t, 6> ext{};
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) {
        if (pts_[i][k] < pts_[ext[2 * k]][k]) ext[2 * k] = i;
        if (pts_[i][k] > pts_[ext[2 * k + 1]][k]) ext[2 * k + 1] = i;
      }
    }
    std::size_t i0 = 0, i1 = 0;
    double best = -1.0;
    for (auto a : ext) {
      for (auto b : ext) {
        const double d = (pts_[a] - pts_[b]).squaredNorm();
        if (d > best) {
          best = d;
          i0 = a;
          i1 = b;
        }
      }
    }
    if (std::sqrt(best) <= tol_) throw Error(ErrorCode::Degenerate, "points are coincident");

    const Vec3 dir = (pts_[i1] - pts_[i0]).normalized();
    std::size_t i2 = npos;
    best = tol_;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 r = pts_[i] - pts_[i0];
      const double d = (r - r.dot(dir) * dir).norm();
      if (d > best) {
        best = d;
        i2 = i;
      }
    }
    if (i2 == npos) throw Error(ErrorCode::Degenerate, "points are collinear");

    const Vec3 pn = (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]).normalized();
    std::size_t i3 = npos;
    best = tol_;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::abs(pn.dot(pts_[i] - pts_[i0]));
      if (d > best) {
        best = d;
        i3 = i;
      }
    }
    if (i3 == npos) throw Error(ErrorCode::Degenerate, "points are coplanar");

    // Orient the base so the apex is behind it.
    if (pn.dot(pts_[i3] - pts_[i0]) > 0.0) std::swap(i1, i2);
    make_face(i0, i1, i2);
    make_face(i0, i3, i1);
    make_face(i1, i3, i2);
    make_face(i2, i3, i0);

    std::vector<std::size_t> all;
    all.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i != i0 && i != i1 && i != i2 && i != i3) all.push_back(i);
    }
    assign(all, {0, 1, 2, 3});
  }

  void assign(const std::vector<std::size_t>& points, const std::vector<std::size_t>& candidates) {
    for (auto p : points) {
      double best = tol_;
      std::size_t owner = npos;
      for (auto f : candidates) {
        const double d = distance(faces_[f], p);
        if (d > best) {
          best = d;
          owner = f;
        }
      }
      if (owner != npos) faces_[owner].outside.push_back(p);
    }
  }

  std::size_t pick_face() const {
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      if (faces_[i].alive && !faces_[i].outside.empty()) return i;
    }
    return npos;
  }

  void add_point(std::size_t face_id) {
    const auto& src = faces_[face_id];
    std::size_t eye = src.outside.front();
    double far = distance(src, eye);
    for (auto p : src.outside) {
      const double d = distance(src, p);
      if (d > far) {
        far = d;
        eye = p;
      }
    }

    std::vector<std::size_t> visible;
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      if (faces_[i].alive && distance(faces_[i], eye) > tol_) visible.push_back(i);
    }
    std::vector<char> is_visible(faces_.size(), 0);
    for (auto v : visible) is_visible[v] = 1;

    std::vector<Edge> horizon;
    for (auto v : visible) {
      const auto& f = faces_[v];
      for (int k = 0; k < 3; ++k) {
        const Edge e{f.v[k], f.v[(k + 1) % 3]};
        const auto twin = edges_.find({e.second, e.first});
        if (twin != edges_.end() && !is_visible[twin->second]) horizon.push_back(e);
      }
    }

    std::vector<std::size_t> orphans;
    for (auto v : visible) {
      auto& f = faces_[v];
      f.alive = false;
      for (int k = 0; k < 3; ++k) edges_.erase({f.v[k], f.v[(k + 1) % 3]});
      for (auto p : f.outside) {
        if (p != eye) orphans.push_back(p);
      }
      f.outside.clear();
      f.outside.shrink_to_fit();
    }

    std::vector<std::size_t> created;
    created.reserve(horizon.size());
    for (const auto& [a, b] : horizon) created.push_back(make_face(a, b, eye));
    std::sort(orphans.begin(), orphans.end());
    assign(orphans, created);
  }

  ConvexHull collect() const {
    ConvexHull hull;
    for (const auto& f : faces_) {
      if (!f.alive) continue;
      hull.facets.push_back({f.v, f.normal, f.offset});
      hull.vertices.insert(hull.vertices.end(), f.v.begin(), f.v.end());
    }
    std::sort(hull.vertices.begin(), hull.vertices.end());
    hull.vertices.erase(std::unique(hull.vertices.begin(), hull.vertices.end()), hull.vertices.end());
    return hull;
  }

  std::span<const Vec3> pts_;
  double tol_;
  std::vector<WorkFace> faces_;
  std::map<Edge, std::size_t> edges_;
};

}  // namespace

double ConvexHull::volume(std::span<const Vec3> points) const {
  if (vertices.empty()) return 0.0;
  Vec3 c = Vec3::Zero();
  for (auto v : vertices) c += points[v];
  c /= static_cast<double>(vertices.size());
  double vol = 0.0;
  for (const auto& f : facets) {
    vol += (points[f.vertices[0]] - c).dot((points[f.vertices[1]] - c).cross(points[f.vertices[2]] - c));
  }
  return vol / 6.0;
}

double ConvexHull::min_signed_distance(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : facets) best = std::min(best, f.offset - f.normal.dot(p));
  return best;
}

ConvexHull convex_hull(std::span<const Vec3> points, double eps) {
  if (points.size() < 4) throw Error(ErrorCode::Degenerate, "convex hull needs at least 4 points");
  double extent = 0.0;
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite hull input");
    extent = std::max(extent, p.cwiseAbs().maxCoeff());
  }
  return QuickHullBuilder(points, eps * std::max(1.0, extent)).run();
}

}  // namespace jawgrasp
