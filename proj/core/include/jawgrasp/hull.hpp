#pragma once

#include "jawgrasp/geometry.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace jawgrasp {

/// Triangular hull facet: outward unit normal and plane offset (n.x = offset).
struct HullFacet {
  std::array<std::size_t, 3> vertices;  // indices into the input point list
  Vec3 normal;
  double offset;
};

struct ConvexHull {
  std::vector<std::size_t> vertices;  // input indices on the hull, ascending
  std::vector<HullFacet> facets;

  double volume(std::span<const Vec3> points) const;
  /// Smallest signed distance from `p` to any facet plane (positive inside).
  double min_signed_distance(const Vec3& p) const;
};

/// Incremental quickhull with coplanarity tolerance `eps` (scaled by the
/// input extent when that exceeds 1). Throws Degenerate when fewer than four
/// points are given or they span fewer than three dimensions.
ConvexHull convex_hull(std::span<const Vec3> points, double eps = 1e-9);

}  // namespace jawgrasp
