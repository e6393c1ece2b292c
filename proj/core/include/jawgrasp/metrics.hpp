#pragma once

#include "jawgrasp/cloud.hpp"
#include "jawgrasp/geometry.hpp"
#include "jawgrasp/mesh.hpp"
#include "jawgrasp/spatial.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace jawgrasp {

/// Two contact points with outward unit surface normals.
struct ContactPair {
  Vec3 p1;
  Vec3 p2;
  Vec3 n1;
  Vec3 n2;

  void validate() const;
};

/// Ascending friction coefficients swept by the force-closure score.
struct FrictionGrid {
  std::vector<double> values{0.4, 0.45, 0.5, 0.8, 1.2, 1.6, 2.0};

  void validate() const;
};

struct ForceClosureScore {
  std::optional<double> gamma_star;
  double score = 0.0;  // 1 / gamma_star, or 0 when no grid value closes
};

struct GraspScore {
  std::optional<double> gamma_star;
  double q_fc = 0.0;
  double q_gws = 0.0;
  double q = 0.0;
};

struct MetricsConfig {
  FrictionGrid grid;
  double alpha = 1.0;
  double beta = 0.01;
  double patch_radius = 0.005;
  std::size_t max_patch_points = 32;
  /// Contacts farther than this from the mesh raise ContactOffSurface.
  double surface_tolerance = 0.001;
  std::size_t dense_samples = 20000;
  std::uint64_t seed = 0;
};

/// The contact line lies inside both friction cones of half-angle atan(gamma).
bool is_antipodal(const ContactPair& c, double gamma);

/// Smallest grid friction coefficient making the pair antipodal; linear scan.
ForceClosureScore q_fc(const ContactPair& c, const FrictionGrid& grid);

/// Radius of the largest origin-centered ball inside the hull of `wrenches`;
/// 0 when the origin is not strictly inside or the hull is degenerate.
double q_gws_from_wrenches(std::span<const Vec3> wrenches);

/// Dense oriented surface sampling with a radius index, used to gather the
/// normals around each contact.
class SurfacePatches {
 public:
  SurfacePatches(const TriMesh& mesh, std::size_t samples, std::uint64_t seed);

  const PointCloud& samples() const { return *cloud_; }
  std::vector<std::size_t> within(const Vec3& p, double radius) const { return grid_->within_radius(p, radius); }

 private:
  std::unique_ptr<PointCloud> cloud_;
  std::unique_ptr<PointGrid> grid_;
};

/// Frictionless R^3 wrench-space score. The wrench set is {-n} over the two
/// contact normals and up to `max_patch_points` surface normals within
/// `patch_radius` of each contact.
double q_gws(const ContactPair& c, const TriMesh& mesh, const SurfacePatches& patches,
             const MetricsConfig& config);

/// Convenience overload that samples the surface itself.
double q_gws(const ContactPair& c, const TriMesh& mesh, const MetricsConfig& config);

double combined_q(double q_fc, double q_gws, double alpha, double beta);

/// q_fc, q_gws and their weighted sum.
GraspScore score_grasp(const ContactPair& c, const TriMesh& mesh, const SurfacePatches& patches,
                       const MetricsConfig& config);

/// Contact pair from two points near the mesh surface, using the normal of the
/// closest face. Throws ContactOffSurface beyond `tolerance`.
ContactPair contacts_on_mesh(const TriMesh& mesh, const Vec3& p1, const Vec3& p2, double tolerance = 0.001);

}  // namespace jawgrasp
