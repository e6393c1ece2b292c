#include "jawgrasp/raycast.hpp"

#include "jawgrasp/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace jawgrasp {

namespace {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void grow(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void grow(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }

  // Slab test; returns the entry distance or +inf on a miss.
  double hit(const Vec3& o, const Vec3& inv_dir, double t_max) const {
    double t0 = 0.0;
    double t1 = t_max;
    for (int k = 0; k < 3; ++k) {
      double a = (lo[k] - o[k]) * inv_dir[k];
      double b = (hi[k] - o[k]) * inv_dir[k];
      if (a > b) std::swap(a, b);
      if (std::isnan(a) || std::isnan(b)) continue;  // ray parallel and on the slab boundary
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
      if (t0 > t1 + 1e-12 * (1.0 + std::abs(t1))) return std::numeric_limits<double>::infinity();
    }
    return t0;
  }
};

struct Node {
  Aabb box;
  std::uint32_t first = 0;  // leaf: first triangle slot; inner: left child
  std::uint32_t count = 0;  // 0 for inner nodes
  std::uint32_t right = 0;
};

class Bvh {
 public:
  explicit Bvh(const TriMesh& mesh) : mesh_(mesh) {
    order_.resize(mesh.faces.size());
    std::iota(order_.begin(), order_.end(), 0u);
    centroids_.reserve(mesh.faces.size());
    for (const auto& f : mesh.faces) {
      centroids_.push_back((mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]) / 3.0);
    }
    if (!order_.empty()) build(0, static_cast<std::uint32_t>(order_.size()));
  }

  std::optional<double> intersect(const Vec3& o, const Vec3& d) const {
    if (nodes_.empty()) return std::nullopt;
    const Vec3 inv(1.0 / d.x(), 1.0 / d.y(), 1.0 / d.z());
    double best = std::numeric_limits<double>::infinity();
    std::array<std::uint32_t, 64> stack{};
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& n = nodes_[stack[--top]];
      if (n.box.hit(o, inv, best) == std::numeric_limits<double>::infinity()) continue;
      if (n.count > 0) {
        for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
          const auto& f = mesh_.faces[order_[i]];
          const auto t = ray_triangle(o, d, mesh_.vertices[f[0]], mesh_.vertices[f[1]], mesh_.vertices[f[2]]);
          if (t && *t < best) best = *t;
        }
      } else {
        stack[top++] = n.first;
        stack[top++] = n.right;
      }
    }
    if (best == std::numeric_limits<double>::infinity()) return std::nullopt;
    return best;
  }

 private:
  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    Aabb cbox;
    for (std::uint32_t i = begin; i < end; ++i) {
      const auto& f = mesh_.faces[order_[i]];
      for (auto v : f) box.grow(mesh_.vertices[v]);
      cbox.grow(centroids_[order_[i]]);
    }
    nodes_[id].box = box;
    const Vec3 ext = cbox.hi - cbox.lo;
    if (end - begin <= 4 || ext.maxCoeff() <= 0.0) {
      nodes_[id].first = begin;
      nodes_[id].count = end - begin;
      return id;
    }
    int axis = 0;
    ext.maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return centroids_[a][axis] < centroids_[b][axis]; });
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].first = left;
    nodes_[id].right = right;
    nodes_[id].count = 0;
    return id;
  }

  const TriMesh& mesh_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "camera intrinsics must be positive");
  }
}

RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = any_perpendicular(z);
  x.normalize();
  const Vec3 y = z.cross(x);  // image rows grow "down", away from `up`
  RigidTransform t;
  t.rotation.col(0) = x;
  t.rotation.col(1) = y;
  t.rotation.col(2) = z;
  t.translation = eye;
  return t;
}

std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b,
                                   const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-300) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv;
  // Edges shared by two faces must not leak rays through rounding.
  constexpr double kEdgeSlack = 1e-12;
  if (u < -kEdgeSlack || u > 1.0 + kEdgeSlack) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < -kEdgeSlack || u + v > 1.0 + kEdgeSlack) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t <= 1e-12) return std::nullopt;
  return t;
}

PointCloud raycast_depth(const TriMesh& mesh, const RigidTransform& camera_pose,
                         const CameraIntrinsics& intrinsics) {
  intrinsics.validate();
  if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "cannot render an empty mesh");
  const Bvh bvh(mesh);
  PointCloud out;
  const Vec3& origin = camera_pose.translation;
  for (int row = 0; row < intrinsics.height; ++row) {
    for (int col = 0; col < intrinsics.width; ++col) {
      // Camera-frame ray with unit z, so the hit parameter is the depth.
      const Vec3 ray_cam((col - intrinsics.cx) / intrinsics.fx, (row - intrinsics.cy) / intrinsics.fy, 1.0);
      const Vec3 ray_world = camera_pose.rotation * ray_cam;
      const auto t = bvh.intersect(origin, ray_world);
      if (t) out.points.push_back(ray_cam * *t);
    }
  }
  return out;
}

}  // namespace jawgrasp
