#include "jawgrasp/metrics.hpp"

#include "jawgrasp/errors.hpp"
#include "jawgrasp/hull.hpp"
#include "jawgrasp/rng.hpp"

#include <algorithm>
#include <cmath>

namespace jawgrasp {

namespace {

// Slack on the cone test so that a contact built at exactly atan(gamma)
// is not lost to rounding in cos/atan.
constexpr double kConeSlack = 1e-12;
constexpr double kInsideMargin = 1e-9;

void check_unit(const Vec3& n, const char* what) {
  if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a unit vector");
  }
}

}  // namespace

void ContactPair::validate() const {
  if (!p1.allFinite() || !p2.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite contact");
  if ((p2 - p1).norm() <= 1e-6) throw Error(ErrorCode::InvalidArgument, "contacts closer than 1e-6 m");
  check_unit(n1, "n1");
  check_unit(n2, "n2");
}

void FrictionGrid::validate() const {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "friction grid is empty");
  if (std::abs(values.front() - 0.4) > 1e-12) throw Error(ErrorCode::InvalidArgument, "friction grid must start at 0.4");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || (i > 0 && !(values[i] > values[i - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "friction grid must be positive and strictly increasing");
    }
  }
}

bool is_antipodal(const ContactPair& c, double gamma) {
  const Vec3 u = (c.p2 - c.p1).normalized();
  const double cos_limit = 1.0 / std::sqrt(1.0 + gamma * gamma);  // cos(atan(gamma))
  return u.dot(-c.n1) >= cos_limit - kConeSlack && (-u).dot(-c.n2) >= cos_limit - kConeSlack;
}

ForceClosureScore q_fc(const ContactPair& c, const FrictionGrid& grid) {
  // Antipodality is monotone in gamma, so the first hit is the smallest.
  for (double gamma : grid.values) {
    if (is_antipodal(c, gamma)) return {gamma, 1.0 / gamma};
  }
  return {};
}

double q_gws_from_wrenches(std::span<const Vec3> wrenches) {
  if (wrenches.size() < 4) return 0.0;
  ConvexHull hull;
  try {
    hull = convex_hull(wrenches);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Degenerate) return 0.0;
    throw;
  }
  const double radius = hull.min_signed_distance(Vec3::Zero());
  return radius > kInsideMargin ? radius : 0.0;
}

SurfacePatches::SurfacePatches(const TriMesh& mesh, std::size_t samples, std::uint64_t seed)
    : cloud_(std::make_unique<PointCloud>(sample_surface(mesh, samples, seed))),
      grid_(std::make_unique<PointGrid>(cloud_->points)) {}

double q_gws(const ContactPair& c, const TriMesh& mesh, const SurfacePatches& patches,
             const MetricsConfig& config) {
  c.validate();
  for (const Vec3* p : {&c.p1, &c.p2}) {
    const double d = distance_to_surface(mesh, *p);
    if (d > config.surface_tolerance) {
      throw Error(ErrorCode::ContactOffSurface, "contact is " + std::to_string(d) + " m from the surface");
    }
  }

  std::vector<Vec3> wrenches{-c.n1, -c.n2};
  Rng rng(derive_seed(config.seed, 0x67777335));
  const auto& samples = patches.samples();
  for (const Vec3* p : {&c.p1, &c.p2}) {
    auto near = patches.within(*p, config.patch_radius);
    if (near.size() > config.max_patch_points) {
      auto pick = rng.sample_without_replacement(near.size(), config.max_patch_points);
      std::sort(pick.begin(), pick.end());
      std::vector<std::size_t> kept;
      kept.reserve(pick.size());
      for (auto k : pick) kept.push_back(near[k]);
      near = std::move(kept);
    }
    for (auto i : near) wrenches.push_back(-samples.normals[i]);
  }
  return q_gws_from_wrenches(wrenches);
}

double q_gws(const ContactPair& c, const TriMesh& mesh, const MetricsConfig& config) {
  const SurfacePatches patches(mesh, config.dense_samples, config.seed);
  return q_gws(c, mesh, patches, config);
}

double combined_q(double q_fc, double q_gws, double alpha, double beta) { return alpha * q_fc + beta * q_gws; }

GraspScore score_grasp(const ContactPair& c, const TriMesh& mesh, const SurfacePatches& patches,
                       const MetricsConfig& config) {
  GraspScore s;
  const auto fc = q_fc(c, config.grid);
  s.gamma_star = fc.gamma_star;
  s.q_fc = fc.score;
  s.q_gws = q_gws(c, mesh, patches, config);
  s.q = combined_q(s.q_fc, s.q_gws, config.alpha, config.beta);
  return s;
}

ContactPair contacts_on_mesh(const TriMesh& mesh, const Vec3& p1, const Vec3& p2, double tolerance) {
  ContactPair c;
  c.p1 = p1;
  c.p2 = p2;
  for (int k = 0; k < 2; ++k) {
    const Vec3& p = k == 0 ? p1 : p2;
    const double d = distance_to_surface(mesh, p);
    if (d > tolerance) {
      throw Error(ErrorCode::ContactOffSurface,
                  "contact " + std::to_string(k + 1) + " is " + std::to_string(d) + " m from the surface");
    }
    (k == 0 ? c.n1 : c.n2) = face_normal(mesh, closest_face(mesh, p));
  }
  return c;
}

}  // namespace jawgrasp
