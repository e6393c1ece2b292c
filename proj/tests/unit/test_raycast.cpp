#include <jawgrasp/errors.hpp>
#include <jawgrasp/mesh.hpp>
#include <jawgrasp/raycast.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace jawgrasp;

namespace {

CameraIntrinsics small_camera() {
  CameraIntrinsics k;
  k.fx = k.fy = 100.0;
  k.width = 64;
  k.height = 48;
  k.cx = 31.5;
  k.cy = 23.5;
  return k;
}

// Exact ray-sphere intersection for a ray from the origin.
double ray_sphere(const Vec3& dir, const Vec3& center, double r) {
  const Vec3 d = dir.normalized();
  const double b = d.dot(center);
  const double disc = b * b - (center.squaredNorm() - r * r);
  return disc < 0 ? -1.0 : b - std::sqrt(disc);
}

}  // namespace

TEST(RayTriangle, HitAndMiss) {
  const Vec3 a(0, 0, 1), b(1, 0, 1), c(0, 1, 1);
  const auto hit = ray_triangle(Vec3::Zero(), Vec3(0.2, 0.2, 1).normalized(), a, b, c);
  ASSERT_TRUE(hit);
  EXPECT_NEAR(*hit, Vec3(0.2, 0.2, 1).norm(), 1e-12);
  EXPECT_FALSE(ray_triangle(Vec3::Zero(), Vec3(0.8, 0.8, 1).normalized(), a, b, c));
  EXPECT_FALSE(ray_triangle(Vec3::Zero(), Vec3(0, 0, -1), a, b, c));
}

TEST(Raycast, SphereDepthsAndCenterPixel) {
  const TriMesh sphere = transformed(make_sphere(1.0, 128), RigidTransform{Mat3::Identity(), Vec3(0, 0, 3)});
  CameraIntrinsics k = small_camera();
  k.width = 65;
  k.height = 49;
  k.cx = 32;
  k.cy = 24;
  const PointCloud pc = raycast_depth(sphere, RigidTransform::identity(), k);
  ASSERT_FALSE(pc.empty());
  bool center_seen = false;
  for (const auto& p : pc.points) {
    EXPECT_GE(p.z(), 2.0 - 1e-9);
    EXPECT_LE(p.z(), 3.0 + 1e-9);
    if (std::abs(p.x()) < 1e-12 && std::abs(p.y()) < 1e-12) {
      center_seen = true;
      EXPECT_NEAR(p.z(), 2.0, 1e-6);
    }
  }
  EXPECT_TRUE(center_seen);
}

TEST(Raycast, TessellatedSphereCloseToAnalytic) {
  const Vec3 center(0.1, -0.05, 3.0);
  const TriMesh sphere = transformed(make_sphere(1.0, 96), RigidTransform{Mat3::Identity(), center});
  const PointCloud pc = raycast_depth(sphere, RigidTransform::identity(), small_camera());
  // Face planes sit inside the sphere by at most the sag of one lat/long cell.
  const double sag = 1.0 - std::cos(std::numbers::pi / 48.0);
  std::size_t analytic_hits = 0;
  for (const auto& p : pc.points) {
    const double r = (p - center).norm();
    EXPECT_LE(r, 1.0 + 1e-9);
    EXPECT_GE(r, 1.0 - sag);
    const double t = ray_sphere(p, center, 1.0);
    if (t > 0) {
      ++analytic_hits;
      EXPECT_GE(p.norm(), t - 1e-9);
    }
  }
  EXPECT_GE(analytic_hits, pc.size() * 99 / 100);
}

TEST(Raycast, CameraFacingAwaySeesNothing) {
  const TriMesh sphere = transformed(make_sphere(1.0, 16), RigidTransform{Mat3::Identity(), Vec3(0, 0, -3)});
  EXPECT_TRUE(raycast_depth(sphere, RigidTransform::identity(), small_camera()).empty());
}

TEST(Raycast, CubeFaceOnIsRectangularBlockAtConstantDepth) {
  const TriMesh cube = transformed(make_box(1, 1, 1), RigidTransform{Mat3::Identity(), Vec3(0, 0, 5.5)});
  const CameraIntrinsics k = small_camera();
  const PointCloud pc = raycast_depth(cube, RigidTransform::identity(), k);
  std::set<std::pair<long, long>> pixels;
  for (const auto& p : pc.points) {
    EXPECT_NEAR(p.z(), 5.0, 1e-9);
    pixels.emplace(std::lround(k.fx * p.x() / p.z() + k.cx), std::lround(k.fy * p.y() / p.z() + k.cy));
  }
  // Front face spans |x|, |y| <= 0.5 at depth 5: u in cx +- 10 px.
  long umin = 1000, umax = -1, vmin = 1000, vmax = -1;
  for (auto [u, v] : pixels) {
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  EXPECT_EQ(static_cast<std::size_t>((umax - umin + 1) * (vmax - vmin + 1)), pixels.size());
  EXPECT_EQ(pixels.size(), pc.size());
  for (long u = 0; u < k.width; ++u) {
    const double x = (u - k.cx) / k.fx * 5.0;
    const bool inside = std::abs(x) <= 0.5;
    EXPECT_EQ(inside, u >= umin && u <= umax) << u;
  }
}

TEST(Raycast, ReprojectsOntoPixelCenters) {
  const TriMesh m = transformed(make_cylinder(0.6, 1.0, 40), RigidTransform{Mat3::Identity(), Vec3(0.2, 0.1, 4)});
  const CameraIntrinsics k = small_camera();
  const PointCloud pc = raycast_depth(m, RigidTransform::identity(), k);
  ASSERT_FALSE(pc.empty());
  for (const auto& p : pc.points) {
    const double u = k.fx * p.x() / p.z() + k.cx;
    const double v = k.fy * p.y() / p.z() + k.cy;
    EXPECT_LT(std::abs(u - std::round(u)), 0.5);
    EXPECT_LT(std::abs(u - std::round(u)), 1e-6);
    EXPECT_LT(std::abs(v - std::round(v)), 1e-6);
  }
}

TEST(Raycast, PoseMovesCamera) {
  const TriMesh cube = make_box(0.2, 0.2, 0.2);
  const RigidTransform pose = look_at(Vec3(1, 0, 0), Vec3::Zero(), Vec3::UnitZ());
  const PointCloud cam = raycast_depth(cube, pose, small_camera());
  ASSERT_FALSE(cam.empty());
  for (const auto& p : cam.transformed(pose).points) EXPECT_NEAR(p.x(), 0.1, 1e-9);
}

TEST(Intrinsics, InvalidRejected) {
  CameraIntrinsics k;
  k.fx = 0;
  EXPECT_THROW(k.validate(), Error);
}
