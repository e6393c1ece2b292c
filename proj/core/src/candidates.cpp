#include "jawgrasp/candidates.hpp"

#include "jawgrasp/errors.hpp"
#include "jawgrasp/parallel.hpp"
#include "jawgrasp/rng.hpp"
#include "jawgrasp/spatial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace jawgrasp {

namespace {

Mat3 covariance(const PointCloud& cloud, const std::vector<std::size_t>& idx) {
  Vec3 c = Vec3::Zero();
  for (auto i : idx) c += cloud.points[i];
  c /= static_cast<double>(idx.size());
  Mat3 cov = Mat3::Zero();
  for (auto i : idx) {
    const Vec3 d = cloud.points[i] - c;
    cov += d * d.transpose();
  }
  return cov / static_cast<double>(idx.size());
}

Vec3 project_tangent(const Vec3& v, const Vec3& n) { return (v - v.dot(n) * n).normalized(); }

}  // namespace

std::vector<LocalFrame> estimate_local_frames(const PointCloud& cloud, const FrameOptions& options) {
  const std::size_t n = cloud.size();
  if (n == 0) return {};
  const std::size_t k = options.k_neighbors;
  if (k < 3) throw Error(ErrorCode::InvalidArgument, "frame estimation needs at least 3 neighbors");
  if (n < k) throw Error(ErrorCode::TooFewPoints, "cloud has " + std::to_string(n) + " points, need " + std::to_string(k));

  Rng rng(options.seed);
  auto seeds = rng.sample_without_replacement(n, std::min(options.count, n));
  std::sort(seeds.begin(), seeds.end());

  const PointGrid grid(cloud.points);
  auto normal_at = [&](std::size_t i, std::vector<std::size_t>* neighbors) {
    auto nb = grid.k_nearest(cloud.points[i], k);
    const Mat3 cov = covariance(cloud, nb);
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    Vec3 nrm = es.eigenvectors().col(0).normalized();
    if (nrm.dot(options.viewpoint - cloud.points[i]) < 0.0) nrm = -nrm;
    if (neighbors) *neighbors = std::move(nb);
    return std::pair{nrm, es};
  };

  std::vector<LocalFrame> frames(seeds.size());
  parallel_for(seeds.size(), options.threads, [&](std::size_t s) {
    const std::size_t i = seeds[s];
    std::vector<std::size_t> nb;
    const auto [nrm, pos_es] = normal_at(i, &nb);

    // Normals of the neighbors vary most across the curvature direction and
    // least along the principal axis.
    Mat3 ncov = Mat3::Zero();
    for (auto j : nb) {
      Vec3 nj = normal_at(j, nullptr).first;
      if (nj.dot(nrm) < 0.0) nj = -nj;
      const Vec3 t = nj - nj.dot(nrm) * nrm;
      ncov += t * t.transpose();
    }
    ncov /= static_cast<double>(nb.size());
    Eigen::SelfAdjointEigenSolver<Mat3> nes(ncov);

    LocalFrame f;
    f.origin = cloud.points[i];
    f.normal = nrm;
    Vec3 major;
    // Tangential normal spread below ~0.5 degrees: treat the patch as flat.
    if (nes.eigenvalues()(2) < 1e-4) {
      major = project_tangent(pos_es.eigenvectors().col(2), nrm);
    } else {
      major = nrm.cross(nes.eigenvectors().col(2)).normalized();
    }
    if (!major.allFinite()) major = any_perpendicular(nrm);
    f.major_axis = major;
    f.minor_axis = nrm.cross(major).normalized();
    frames[s] = f;
  });
  return frames;
}

namespace {

// Depth s moves the hand by s along the approach axis from the placement with
// the fingertips at the frame origin. A point at local (x, y, z) for s = 0 is
// at (x - s, y, z) for depth s, so each point meets the hand over an interval
// of depths and the search reduces to interval arithmetic.
struct DepthPlan {
  double first_contact;
  double deepest_clear;
};

// Keeps the first contact strictly inside the region rather than on the fingertip plane.
constexpr double kMinPenetration = 1e-6;
constexpr double kBoundaryMargin = 1e-9;

std::optional<DepthPlan> plan_depth(const std::vector<Vec3>& slab, const GripperModel& gripper, double s_start) {
  const double d = gripper.finger_depth;
  const double hw = 0.5 * gripper.max_aperture;
  double first = std::numeric_limits<double>::infinity();
  double block = std::numeric_limits<double>::infinity();
  for (const auto& p : slab) {
    const double ay = std::abs(p.y());
    double lo;
    double hi;
    if (ay <= hw) {
      first = std::min(first, p.x() - d);
      lo = p.x();  // reaches the base plate
      hi = p.x() + gripper.base_depth;
    } else {
      lo = p.x() - d;  // meets a finger tip
      hi = p.x() + gripper.base_depth;
    }
    if (hi < s_start) continue;  // already behind the hand
    if (lo <= s_start) return std::nullopt;
    block = std::min(block, lo);
  }
  if (!std::isfinite(first)) return std::nullopt;
  return DepthPlan{std::max(first, s_start), block};
}

}  // namespace

std::vector<Candidate> generate_candidates(const PointCloud& cloud, const GripperModel& gripper,
                                           const std::vector<LocalFrame>& frames, const SearchOptions& options) {
  if (cloud.empty() || frames.empty()) return {};
  gripper.validate();
  const double d = gripper.finger_depth;
  const double half_span = 0.5 * gripper.max_aperture + gripper.finger_thickness;
  const double hh = 0.5 * gripper.hand_height;
  const int yaws = std::max(1, options.yaw_steps);
  const int offsets = std::max(1, options.offset_steps);

  std::vector<std::vector<Candidate>> per_frame(frames.size());
  parallel_for(frames.size(), options.threads, [&](std::size_t fi) {
    const LocalFrame& f = frames[fi];
    const Vec3 approach = -f.normal;
    for (int yi = 0; yi < yaws; ++yi) {
      const double yaw = std::numbers::pi * yi / yaws;
      const Vec3 closing = (std::cos(yaw) * f.minor_axis + std::sin(yaw) * f.major_axis).normalized();
      GraspConfig g;
      g.rotation.col(0) = approach;
      g.rotation.col(1) = closing;
      g.rotation.col(2) = approach.cross(closing);
      for (int oi = 0; oi < offsets; ++oi) {
        const double off = offsets == 1 ? 0.0 : options.offset_span * (2.0 * oi / (offsets - 1) - 1.0);
        // Depth 0: fingertips level with the (offset) frame origin.
        const Vec3 tip = f.origin + off * closing;
        const Vec3 origin0 = tip - d * approach;
        const Mat3 rt = g.rotation.transpose();
        std::vector<Vec3> slab;
        for (const auto& p : cloud.points) {
          const Vec3 l = rt * (p - origin0);
          if (std::abs(l.y()) <= half_span && std::abs(l.z()) <= hh) slab.push_back(l);
        }
        const auto plan = plan_depth(slab, gripper, -options.start_clearance);
        if (!plan) continue;
        const double s_best = std::min(plan->first_contact + 0.5 * d, plan->deepest_clear - 1e-6);
        if (s_best < plan->first_contact + kMinPenetration) continue;

        g.center = origin0 + (s_best + 0.5 * d) * approach;
        // Re-verify in world coordinates so boundary rounding cannot slip through.
        const auto in_region = points_in_closing_region(g, gripper, cloud, gripper.max_aperture);
        if (in_region.empty() || count_body_collisions(g, gripper, cloud, gripper.max_aperture) != 0) continue;
        per_frame[fi].push_back({g, in_region.size(), fi, yi, oi});
      }
    }
  });

  std::vector<Candidate> out;
  for (auto& v : per_frame) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::vector<Candidate> apply_table_rules(const std::vector<Candidate>& candidates, const PointCloud& scene,
                                         const PointCloud& object, const Plane& table,
                                         const GripperModel& gripper, const TableRules& rules) {
  std::vector<Candidate> out;
  const double w = gripper.max_aperture;
  const auto boxes = body_boxes(gripper, w);
  for (const auto& c0 : candidates) {
    if (c0.grasp.approach().dot(table.normal) > 0.0) continue;
    Candidate c = c0;
    bool clear = false;
    for (int pull = 0; pull <= rules.max_pulls; ++pull) {
      c.grasp.center = c0.grasp.center - (pull * rules.pull_step) * c0.grasp.approach();
      const RigidTransform to_world = gripper_to_world_transform(c.grasp, gripper);
      bool above = true;
      for (const auto& b : boxes) {
        for (const auto& corner : b.corners()) {
          if (table.signed_distance(to_world.apply(corner)) < 0.0) above = false;
        }
      }
      if (above && count_body_collisions(c.grasp, gripper, scene, w) == 0) {
        clear = true;
        break;
      }
    }
    if (!clear) continue;
    // Pulls move in whole steps, which can park a point exactly on the fingertip plane.
    const Mat3 rt = c.grasp.rotation.transpose();
    const Vec3 origin = gripper_origin(c.grasp, gripper);
    Box3 inner = closing_region(gripper, w);
    inner.lo.array() += kBoundaryMargin;
    inner.hi.array() -= kBoundaryMargin;
    std::size_t inside = 0;
    for (const auto& p : object.points)
      if (inner.contains(rt * (p - origin))) ++inside;
    if (inside == 0) continue;
    c.region_count = inside;
    out.push_back(c);
  }
  return out;
}

CandidateResult plan_candidates(const PointCloud& cloud, const GripperModel& gripper, TableMode mode,
                                const CandidatePipeline& options, std::optional<Plane> table_override) {
  CandidateResult result;
  if (cloud.empty()) return result;

  PointCloud object = cloud;
  if (table_override) {
    result.table = table_override;
  } else if (mode == TableMode::Auto && cloud.size() >= 3) {
    result.table = fit_plane_ransac(cloud, options.ransac).plane;
  }
  if (result.table) object = remove_near_plane(cloud, *result.table, options.table.near_tol);
  if (object.size() < options.frames.k_neighbors) return result;

  const auto frames = estimate_local_frames(object, options.frames);
  auto candidates = generate_candidates(object, gripper, frames, options.search);
  if (result.table) {
    candidates = apply_table_rules(candidates, cloud, object, *result.table, gripper, options.table);
  }
  result.candidates = std::move(candidates);
  return result;
}

}  // namespace jawgrasp
