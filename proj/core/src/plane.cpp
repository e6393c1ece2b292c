#include "jawgrasp/plane.hpp"

#include "jawgrasp/errors.hpp"
#include "jawgrasp/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace jawgrasp {

namespace {

std::vector<std::size_t> inliers_of(const PointCloud& cloud, const Plane& plane, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (std::abs(plane.signed_distance(cloud.points[i])) <= tol) out.push_back(i);
  }
  return out;
}

Plane least_squares_plane(const PointCloud& cloud, const std::vector<std::size_t>& idx) {
  Vec3 c = Vec3::Zero();
  for (auto i : idx) c += cloud.points[i];
  c /= static_cast<double>(idx.size());
  Mat3 cov = Mat3::Zero();
  for (auto i : idx) {
    const Vec3 d = cloud.points[i] - c;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  Plane p;
  p.normal = es.eigenvectors().col(0).normalized();
  p.offset = p.normal.dot(c);
  return p;
}

}  // namespace

PlaneFit fit_plane_ransac(const PointCloud& cloud, const RansacOptions& options) {
  const std::size_t n = cloud.size();
  if (n < 3) throw Error(ErrorCode::InsufficientPoints, "plane fit needs at least 3 points");

  Rng rng(options.seed);
  Plane best;
  std::size_t best_count = 0;
  bool found = false;
  for (int it = 0; it < std::max(1, options.iterations); ++it) {
    const auto tri = rng.sample_without_replacement(n, 3);
    const Vec3& a = cloud.points[tri[0]];
    const Vec3 nrm = (cloud.points[tri[1]] - a).cross(cloud.points[tri[2]] - a);
    if (nrm.norm() < 1e-15) continue;
    Plane cand;
    cand.normal = nrm.normalized();
    cand.offset = cand.normal.dot(a);
    std::size_t count = 0;
    for (const auto& p : cloud.points) {
      if (std::abs(cand.signed_distance(p)) <= options.inlier_tol) ++count;
    }
    if (!found || count > best_count) {
      best = cand;
      best_count = count;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::InsufficientPoints, "all sampled triples were collinear");

  PlaneFit fit;
  fit.plane = best;
  fit.inliers = inliers_of(cloud, best, options.inlier_tol);
  if (fit.inliers.size() >= 3) {
    const Plane refit = least_squares_plane(cloud, fit.inliers);
    auto refit_inliers = inliers_of(cloud, refit, options.inlier_tol);
    if (refit_inliers.size() >= fit.inliers.size()) {
      fit.plane = refit;
      fit.inliers = std::move(refit_inliers);
    }
  }

  std::size_t above = 0;
  std::size_t below = 0;
  for (const auto& p : cloud.points) {
    const double d = fit.plane.signed_distance(p);
    if (d > options.inlier_tol) ++above;
    if (d < -options.inlier_tol) ++below;
  }
  if (below > above) {
    fit.plane.normal = -fit.plane.normal;
    fit.plane.offset = -fit.plane.offset;
  }
  return fit;
}

PointCloud remove_near_plane(const PointCloud& cloud, const Plane& plane, double tol) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (std::abs(plane.signed_distance(cloud.points[i])) > tol) keep.push_back(i);
  }
  return cloud.subset(keep);
}

}  // namespace jawgrasp
