#pragma once

#include "jawgrasp/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace jawgrasp {

/// Uniform hash grid over a fixed point set for nearest-neighbor queries.
class PointGrid {
 public:
  explicit PointGrid(std::span<const Vec3> points, double cell_size = 0.0);

  /// Index of the nearest point; ties go to the lower index.
  std::size_t nearest(const Vec3& q) const;

  /// Up to `k` nearest indices sorted by distance, then index.
  std::vector<std::size_t> k_nearest(const Vec3& q, std::size_t k) const;

  /// Indices within `radius` (inclusive), ascending.
  std::vector<std::size_t> within_radius(const Vec3& q, double radius) const;

  double cell_size() const noexcept { return cell_; }

 private:
  using Key = std::uint64_t;
  Key key(long ix, long iy, long iz) const noexcept;
  void cell_of(const Vec3& p, long& ix, long& iy, long& iz) const noexcept;
  template <typename Visit>
  void visit_shell(long cx, long cy, long cz, long ring, Visit&& visit) const;

  std::span<const Vec3> points_;
  double cell_ = 1.0;
  Vec3 origin_ = Vec3::Zero();
  long max_ring_ = 0;
  std::unordered_map<Key, std::vector<std::uint32_t>> cells_;
};

}  // namespace jawgrasp
