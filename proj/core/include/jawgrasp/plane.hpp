#pragma once

#include "jawgrasp/cloud.hpp"
#include "jawgrasp/geometry.hpp"

#include <cstdint>
#include <vector>

namespace jawgrasp {

/// {x : normal . x = offset}, |normal| = 1.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

struct PlaneFit {
  Plane plane;
  std::vector<std::size_t> inliers;
};

struct RansacOptions {
  double inlier_tol = 0.002;
  int iterations = 500;
  std::uint64_t seed = 0;
};

/// RANSAC over sampled triples, then a least-squares refit on the inliers.
/// The normal points toward the side holding most non-inlier points.
PlaneFit fit_plane_ransac(const PointCloud& cloud, const RansacOptions& options = {});

/// Copy of `cloud` without the points within `tol` of the plane.
PointCloud remove_near_plane(const PointCloud& cloud, const Plane& plane, double tol);

}  // namespace jawgrasp
