#include <jawgrasp/icp.hpp>
#include <jawgrasp/mesh.hpp>
#include <jawgrasp/rng.hpp>

#include <gtest/gtest.h>

#include "scenes.hpp"

#include <cmath>
#include <numbers>

using namespace jawgrasp;

namespace {

// Asymmetric object so the alignment has a unique optimum.
PointCloud lumpy_cloud(std::size_t n, std::uint64_t seed) {
  const TriMesh m = merged(make_box(0.10, 0.06, 0.04),
                           transformed(make_box(0.03, 0.03, 0.05), RigidTransform{Mat3::Identity(), Vec3(0.03, 0.01, 0.04)}));
  PointCloud pc = sample_surface(m, n, seed);
  pc.normals.clear();
  return pc;
}

}  // namespace

TEST(BestFit, RecoversExactTransform) {
  Rng rng(51);
  const PointCloud src = lumpy_cloud(200, 1);
  const RigidTransform t{scenes::random_rotation(rng), Vec3(0.3, -0.2, 0.1)};
  const PointCloud dst = src.transformed(t);
  const RigidTransform est = best_fit_transform(src.points, dst.points);
  EXPECT_LT(rotation_angle_between(est.rotation, t.rotation), 1e-9);
  EXPECT_LT((est.translation - t.translation).norm(), 1e-12);
}

TEST(BestFit, NeverReturnsReflection) {
  std::vector<Vec3> src = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(0, 0, 0)};
  std::vector<Vec3> dst = src;
  for (auto& p : dst) p.x() = -p.x();
  EXPECT_NEAR(best_fit_transform(src, dst).rotation.determinant(), 1.0, 1e-12);
}

TEST(Icp, IdenticalCloudsGiveIdentity) {
  const PointCloud pc = lumpy_cloud(500, 2);
  const IcpResult r = icp_rigid(pc, pc);
  EXPECT_LT(rotation_angle_between(r.transform.rotation, Mat3::Identity()), 1e-12);
  EXPECT_LT(r.transform.translation.norm(), 1e-12);
  EXPECT_LT(r.rms, 1e-12);
}

TEST(Icp, RecoversSmallRigidMotion) {
  Rng rng(52);
  const PointCloud src = lumpy_cloud(800, 3);
  for (int trial = 0; trial < 10; ++trial) {
    const RigidTransform t{scenes::random_rotation(rng, 20.0 * std::numbers::pi / 180.0),
                           Vec3(rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01))};
    const IcpResult r = icp_rigid(src, src.transformed(t));
    EXPECT_LT(rotation_angle_between(r.transform.rotation, t.rotation), 1e-6);
    EXPECT_LT((r.transform.translation - t.translation).norm(), 1e-9);
  }
}

TEST(Icp, NoiseFloor) {
  Rng rng(53);
  const PointCloud src = lumpy_cloud(1000, 4);
  const RigidTransform t{axis_angle(Vec3(1, 2, 3).normalized(), 0.1), Vec3(0.005, 0.0, -0.004)};
  PointCloud dst = src.transformed(t);
  const double sigma = 1e-3;
  for (auto& p : dst.points) p += sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
  const IcpResult r = icp_rigid(src, dst);
  EXPECT_LE(r.rms, 3.0 * sigma);
}

TEST(Icp, GridPathAgreesAboveBruteForceLimit) {
  Rng rng(54);
  const PointCloud src = lumpy_cloud(6000, 5);
  const RigidTransform t{scenes::random_rotation(rng, 0.2), Vec3(0.004, -0.003, 0.002)};
  const IcpResult r = icp_rigid(src, src.transformed(t));
  EXPECT_LT(rotation_angle_between(r.transform.rotation, t.rotation), 1e-6);
  EXPECT_LT((r.transform.translation - t.translation).norm(), 1e-9);
}
