#pragma once

#include "jawgrasp/cloud.hpp"
#include "jawgrasp/geometry.hpp"
#include "jawgrasp/mesh.hpp"

#include <optional>

namespace jawgrasp {

/// Pinhole intrinsics. Pixel (col, row) has its center at integer
/// coordinates; the camera looks down +z with x right and y down.
struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;

  void validate() const;
};

/// Camera-to-world pose looking from `eye` toward `target`. `up` only picks
/// the roll; image rows grow against it.
RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

/// Renders one point per pixel whose ray hits the mesh (nearest hit), in
/// camera coordinates. Normals are not attached.
PointCloud raycast_depth(const TriMesh& mesh, const RigidTransform& camera_pose,
                         const CameraIntrinsics& intrinsics);

/// Moller-Trumbore. Returns the ray parameter of a hit with t > 1e-12.
std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                   const Vec3& b, const Vec3& c);

}  // namespace jawgrasp
