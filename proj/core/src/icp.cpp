#include "jawgrasp/icp.hpp"

#include "jawgrasp/errors.hpp"
#include "jawgrasp/spatial.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <optional>

namespace jawgrasp {

namespace {

constexpr std::size_t kBruteForceLimit = 5000;

Vec3 centroid(std::span<const Vec3> pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

std::size_t brute_nearest(std::span<const Vec3> pts, const Vec3& q) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = (pts[i] - q).squaredNorm();
    if (d < best) {
      best = d;
      best_i = i;
    }
  }
  return best_i;
}

}  // namespace

RigidTransform best_fit_transform(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size() || src.empty()) {
    throw Error(ErrorCode::InvalidArgument, "best_fit_transform needs equal, nonempty point sets");
  }
  const Vec3 cs = centroid(src);
  const Vec3 cd = centroid(dst);
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (dst[i] - cd) * (src[i] - cs).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  RigidTransform t;
  t.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  t.translation = cd - t.rotation * cs;
  return t;
}

IcpResult icp_rigid(const PointCloud& source, const PointCloud& target, int max_iters, double tol) {
  if (source.empty() || target.empty()) {
    throw Error(ErrorCode::InsufficientPoints, "ICP needs nonempty source and target clouds");
  }
  const std::span<const Vec3> tgt(target.points);
  const bool use_grid = tgt.size() > kBruteForceLimit;
  std::optional<PointGrid> grid;
  if (use_grid) grid.emplace(tgt);

  IcpResult result;
  result.transform.translation = centroid(tgt) - centroid(source.points);

  std::vector<Vec3> moved(source.size());
  std::vector<Vec3> matched(source.size());
  double prev_rms = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    double sq = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      moved[i] = result.transform.apply(source.points[i]);
      const std::size_t j = use_grid ? grid->nearest(moved[i]) : brute_nearest(tgt, moved[i]);
      matched[i] = tgt[j];
      sq += (matched[i] - moved[i]).squaredNorm();
    }
    const double rms = std::sqrt(sq / static_cast<double>(source.size()));
    result.iterations = it + 1;
    result.rms = rms;
    if (std::abs(prev_rms - rms) < tol) break;
    prev_rms = rms;
    // Re-solve from the original source so errors do not accumulate.
    result.transform = best_fit_transform(source.points, matched);
  }

  double sq = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 p = result.transform.apply(source.points[i]);
    const std::size_t j = use_grid ? grid->nearest(p) : brute_nearest(tgt, p);
    sq += (tgt[j] - p).squaredNorm();
  }
  result.rms = std::sqrt(sq / static_cast<double>(source.size()));
  return result;
}

}  // namespace jawgrasp
