#include "jawgrasp/geometry.hpp"

#include "jawgrasp/cloud.hpp"
#include "jawgrasp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace jawgrasp {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateFace: return "DegenerateFace";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::InvalidDimensions: return "InvalidDimensions";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ContactOffSurface: return "ContactOffSurface";
    case ErrorCode::InsufficientBin: return "InsufficientBin";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const Mat3 err = r.transpose() * r - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 euler_to_rotation(const Vec3& r) {
  const Mat3 rx = Eigen::AngleAxisd(r.x(), Vec3::UnitX()).toRotationMatrix();
  const Mat3 ry = Eigen::AngleAxisd(r.y(), Vec3::UnitY()).toRotationMatrix();
  const Mat3 rz = Eigen::AngleAxisd(r.z(), Vec3::UnitZ()).toRotationMatrix();
  return rz * ry * rx;
}

Vec3 rotation_to_euler(const Mat3& r) {
  const double sy = std::clamp(-r(2, 0), -1.0, 1.0);
  const double ry = std::asin(sy);
  if (std::abs(sy) > 1.0 - 1e-12) {
    // Gimbal lock: only rz - rx (or rz + rx) is observable; put it all in rz.
    const double rz = std::atan2(-r(0, 1), r(1, 1));
    return {0.0, ry, rz};
  }
  return {std::atan2(r(2, 1), r(2, 2)), ry, std::atan2(r(1, 0), r(0, 0))};
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 rel = a.transpose() * b;
  // atan2 form stays accurate near zero, unlike acos of the trace.
  const Vec3 axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (rel.trace() - 1.0));
}

Vec3 any_perpendicular(const Vec3& v) {
  const Vec3 a = v.cwiseAbs();
  Vec3 ref = Vec3::UnitX();
  if (a.y() <= a.x() && a.y() <= a.z()) {
    ref = Vec3::UnitY();
  } else if (a.z() <= a.x() && a.z() <= a.y()) {
    ref = Vec3::UnitZ();
  }
  const Vec3 u = v.normalized();
  return (ref - ref.dot(u) * u).normalized();
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

void PointCloud::validate() const {
  if (normals.empty()) return;
  if (normals.size() != points.size()) {
    throw Error(ErrorCode::InvalidArgument, "normal count does not match point count");
  }
  for (const auto& n : normals) {
    if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::InvalidArgument, "normal is not unit length");
    }
  }
}

PointCloud PointCloud::transformed(const RigidTransform& t) const {
  PointCloud out;
  out.points.reserve(points.size());
  for (const auto& p : points) out.points.push_back(t.apply(p));
  out.normals.reserve(normals.size());
  for (const auto& n : normals) out.normals.push_back(t.rotation * n);
  return out;
}

PointCloud PointCloud::subset(const std::vector<std::size_t>& indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  for (auto i : indices) out.points.push_back(points[i]);
  if (has_normals()) {
    out.normals.reserve(indices.size());
    for (auto i : indices) out.normals.push_back(normals[i]);
  }
  return out;
}

void PointCloud::append(const PointCloud& other) {
  const bool keep_normals = (empty() || has_normals()) && other.has_normals();
  points.insert(points.end(), other.points.begin(), other.points.end());
  if (keep_normals) {
    normals.insert(normals.end(), other.normals.begin(), other.normals.end());
  } else {
    normals.clear();
  }
}

}  // namespace jawgrasp
