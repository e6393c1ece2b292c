#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace jawgrasp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Proper rigid motion x -> R x + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  /// (*this) after `other`: x -> this(other(x)).
  RigidTransform compose(const RigidTransform& other) const;
};

/// True if R^T R = I and det R = +1 within `tol`.
bool is_rotation(const Mat3& r, double tol = 1e-9);

/// Extrinsic XYZ: R = Rz(rz) * Ry(ry) * Rx(rx).
Mat3 euler_to_rotation(const Vec3& r);

/// Inverse of euler_to_rotation on the principal branch |ry| <= pi/2.
Vec3 rotation_to_euler(const Mat3& r);

/// Angle of the relative rotation a^T b, in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

/// Any unit vector orthogonal to `v` (v need not be unit).
Vec3 any_perpendicular(const Vec3& v);

/// Rotation about unit `axis` by `angle` radians.
Mat3 axis_angle(const Vec3& axis, double angle);

}  // namespace jawgrasp
