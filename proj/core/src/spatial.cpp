#include "jawgrasp/spatial.hpp"

#include "jawgrasp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jawgrasp {

PointGrid::PointGrid(std::span<const Vec3> points, double cell_size) : points_(points) {
  if (points.empty()) return;
  Vec3 lo = points.front();
  Vec3 hi = lo;
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  origin_ = lo;
  const Vec3 ext = (hi - lo).cwiseMax(Vec3::Constant(1e-9));
  if (cell_size <= 0.0) {
    // Roughly two points per occupied cell for surface-like sets.
    const double volume = ext.x() * ext.y() * ext.z();
    const double area = 2.0 * (ext.x() * ext.y() + ext.y() * ext.z() + ext.x() * ext.z());
    const double n = static_cast<double>(points.size());
    cell_size = std::max(std::sqrt(2.0 * area / n), std::cbrt(2.0 * volume / n));
    cell_size = std::max(cell_size, ext.maxCoeff() * 1e-4);
  }
  cell_ = cell_size;
  max_ring_ = static_cast<long>(std::ceil(ext.maxCoeff() / cell_)) + 1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    long ix, iy, iz;
    cell_of(points[i], ix, iy, iz);
    cells_[key(ix, iy, iz)].push_back(static_cast<std::uint32_t>(i));
  }
}

PointGrid::Key PointGrid::key(long ix, long iy, long iz) const noexcept {
  const auto u = [](long v) { return static_cast<std::uint64_t>(v + (1L << 20)) & 0x1FFFFF; };
  return (u(ix) << 42) | (u(iy) << 21) | u(iz);
}

void PointGrid::cell_of(const Vec3& p, long& ix, long& iy, long& iz) const noexcept {
  const Vec3 r = (p - origin_) / cell_;
  ix = static_cast<long>(std::floor(r.x()));
  iy = static_cast<long>(std::floor(r.y()));
  iz = static_cast<long>(std::floor(r.z()));
}

template <typename Visit>
void PointGrid::visit_shell(long cx, long cy, long cz, long ring, Visit&& visit) const {
  auto visit_cell = [&](long x, long y, long z) {
    const auto it = cells_.find(key(x, y, z));
    if (it == cells_.end()) return;
    for (auto i : it->second) visit(static_cast<std::size_t>(i));
  };
  if (ring == 0) {
    visit_cell(cx, cy, cz);
    return;
  }
  for (long dx = -ring; dx <= ring; ++dx) {
    for (long dy = -ring; dy <= ring; ++dy) {
      if (std::abs(dx) == ring || std::abs(dy) == ring) {
        for (long dz = -ring; dz <= ring; ++dz) visit_cell(cx + dx, cy + dy, cz + dz);
      } else {
        visit_cell(cx + dx, cy + dy, cz - ring);
        visit_cell(cx + dx, cy + dy, cz + ring);
      }
    }
  }
}

std::size_t PointGrid::nearest(const Vec3& q) const {
  if (points_.empty()) throw Error(ErrorCode::InsufficientPoints, "nearest() on an empty grid");
  long cx, cy, cz;
  cell_of(q, cx, cy, cz);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  auto visit = [&](std::size_t i) {
    const double d = (points_[i] - q).squaredNorm();
    if (d < best || (d == best && i < best_i)) {
      best = d;
      best_i = i;
    }
  };
  // A query far outside the grid needs rings out to its own cell offset.
  const long far = std::max({std::abs(cx), std::abs(cy), std::abs(cz)}) + max_ring_ + 1;
  for (long ring = 0; ring <= far; ++ring) {
    visit_shell(cx, cy, cz, ring, visit);
    // Everything beyond this shell is at least ring * cell away.
    if (best < std::numeric_limits<double>::infinity()) {
      const double reach = static_cast<double>(ring) * cell_;
      if (reach * reach >= best) break;
    }
  }
  return best_i;
}

std::vector<std::size_t> PointGrid::k_nearest(const Vec3& q, std::size_t k) const {
  std::vector<std::pair<double, std::size_t>> found;
  if (points_.empty() || k == 0) return {};
  k = std::min(k, points_.size());
  long cx, cy, cz;
  cell_of(q, cx, cy, cz);
  const long far = std::max({std::abs(cx), std::abs(cy), std::abs(cz)}) + max_ring_ + 1;
  for (long ring = 0; ring <= far; ++ring) {
    visit_shell(cx, cy, cz, ring, [&](std::size_t i) { found.emplace_back((points_[i] - q).squaredNorm(), i); });
    if (found.size() >= k) {
      std::nth_element(found.begin(), found.begin() + static_cast<long>(k) - 1, found.end());
      const double kth = found[k - 1].first;
      const double reach = static_cast<double>(ring) * cell_;
      if (reach * reach >= kth) break;
    }
  }
  std::sort(found.begin(), found.end());
  if (found.size() > k) found.resize(k);
  std::vector<std::size_t> out;
  out.reserve(found.size());
  for (const auto& f : found) out.push_back(f.second);
  return out;
}

std::vector<std::size_t> PointGrid::within_radius(const Vec3& q, double radius) const {
  std::vector<std::size_t> out;
  if (points_.empty()) return out;
  long cx, cy, cz;
  cell_of(q, cx, cy, cz);
  const long reach = static_cast<long>(std::ceil(radius / cell_));
  const double r2 = radius * radius;
  for (long dx = -reach; dx <= reach; ++dx) {
    for (long dy = -reach; dy <= reach; ++dy) {
      for (long dz = -reach; dz <= reach; ++dz) {
        const auto it = cells_.find(key(cx + dx, cy + dy, cz + dz));
        if (it == cells_.end()) continue;
        for (auto i : it->second) {
          if ((points_[i] - q).squaredNorm() <= r2) out.push_back(i);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace jawgrasp
