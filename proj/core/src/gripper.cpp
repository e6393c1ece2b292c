#include "jawgrasp/gripper.hpp"

#include "jawgrasp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jawgrasp {

void GripperModel::validate() const {
  for (double v : {max_aperture, finger_depth, hand_height, finger_thickness, base_depth}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidDimensions, "gripper dimensions must be positive");
  }
  if (!(max_aperture > 2.0 * finger_thickness)) {
    throw Error(ErrorCode::InvalidDimensions, "max aperture must exceed twice the finger thickness");
  }
  if (standoff < 0.0 || approach_steps < 1 || close_steps < 1) {
    throw Error(ErrorCode::InvalidDimensions, "standoff and step counts must be non-negative / positive");
  }
}

void GraspConfig::validate() const {
  if (!center.allFinite() || !is_rotation(rotation, 1e-9)) {
    throw Error(ErrorCode::InvalidArgument, "grasp rotation must be orthonormal with det +1");
  }
}

std::array<Vec3, 8> Box3::corners() const {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    out[i] = Vec3((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  }
  return out;
}

Vec3 gripper_origin(const GraspConfig& g, const GripperModel& gripper) {
  return g.center - 0.5 * gripper.finger_depth * g.approach();
}

RigidTransform gripper_to_world_transform(const GraspConfig& g, const GripperModel& gripper) {
  RigidTransform t;
  t.rotation = g.rotation;
  t.translation = gripper_origin(g, gripper);
  return t;
}

PointCloud world_to_gripper(const GraspConfig& g, const GripperModel& gripper, const PointCloud& cloud) {
  return cloud.transformed(gripper_to_world_transform(g, gripper).inverse());
}

PointCloud gripper_to_world(const GraspConfig& g, const GripperModel& gripper, const PointCloud& cloud) {
  return cloud.transformed(gripper_to_world_transform(g, gripper));
}

Box3 closing_region(const GripperModel& gripper, double aperture) {
  return {Vec3(0.0, -0.5 * aperture, -0.5 * gripper.hand_height),
          Vec3(gripper.finger_depth, 0.5 * aperture, 0.5 * gripper.hand_height)};
}

std::array<Box3, 3> body_boxes(const GripperModel& gripper, double aperture) {
  const double hw = 0.5 * aperture;
  const double hh = 0.5 * gripper.hand_height;
  const double tf = gripper.finger_thickness;
  const double d = gripper.finger_depth;
  return {{
      {Vec3(0.0, hw, -hh), Vec3(d, hw + tf, hh)},
      {Vec3(0.0, -hw - tf, -hh), Vec3(d, -hw, hh)},
      {Vec3(-gripper.base_depth, -hw - tf, -hh), Vec3(0.0, hw + tf, hh)},
  }};
}

bool in_gripper_body(const GripperModel& gripper, double aperture, const Vec3& local) {
  if (closing_region(gripper, aperture).contains(local)) return false;
  for (const auto& b : body_boxes(gripper, aperture)) {
    if (b.contains(local)) return true;
  }
  return false;
}

std::vector<std::size_t> points_in_closing_region(const GraspConfig& g, const GripperModel& gripper,
                                                  const PointCloud& cloud, double aperture) {
  if (!(aperture > 0.0) || aperture > gripper.max_aperture) {
    throw Error(ErrorCode::InvalidArgument, "aperture must lie in (0, max_aperture]");
  }
  const Mat3 rt = g.rotation.transpose();
  const Vec3 origin = gripper_origin(g, gripper);
  const Box3 region = closing_region(gripper, aperture);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (region.contains(rt * (cloud.points[i] - origin))) out.push_back(i);
  }
  return out;
}

std::size_t count_body_collisions(const GraspConfig& g, const GripperModel& gripper, const PointCloud& cloud,
                                  double aperture) {
  const Mat3 rt = g.rotation.transpose();
  const Vec3 origin = gripper_origin(g, gripper);
  std::size_t n = 0;
  for (const auto& p : cloud.points) {
    if (in_gripper_body(gripper, aperture, rt * (p - origin))) ++n;
  }
  return n;
}

const char* to_string(ApproachOutcome outcome) noexcept {
  switch (outcome) {
    case ApproachOutcome::Feasible: return "Feasible";
    case ApproachOutcome::CollidesOnApproach: return "CollidesOnApproach";
    case ApproachOutcome::FingersCollide: return "FingersCollide";
    case ApproachOutcome::EmptyGrasp: return "EmptyGrasp";
  }
  return "Unknown";
}

ApproachCheck check_approach_and_close(const GraspConfig& g, const GripperModel& gripper,
                                       const PointCloud& surface) {
  const double w_max = gripper.max_aperture;
  const double travel = gripper.finger_depth + gripper.standoff;
  const double half_span = 0.5 * w_max + gripper.finger_thickness;
  const double hh = 0.5 * gripper.hand_height;
  const Mat3 rt = g.rotation.transpose();
  const Vec3 origin = gripper_origin(g, gripper);
  const Box3 region = closing_region(gripper, w_max);
  const int steps = gripper.approach_steps;

  double plus_side = -1.0;   // deepest reach of the object toward +Y, |y|
  double minus_side = -1.0;  // same toward -Y
  bool any_inside = false;
  for (const auto& p : surface.points) {
    const Vec3 local = rt * (p - origin);
    // Outside the slab swept by the hand: cannot interact.
    if (std::abs(local.z()) > hh || std::abs(local.y()) > half_span) continue;
    if (local.x() > gripper.finger_depth || local.x() < -travel - gripper.base_depth) continue;
    for (int i = 0; i <= steps; ++i) {
      const double back = travel * static_cast<double>(steps - i) / steps;
      const Vec3 at(local.x() + back, local.y(), local.z());
      if (in_gripper_body(gripper, w_max, at)) return {ApproachOutcome::CollidesOnApproach, 0.0};
    }
    if (region.contains(local)) {
      any_inside = true;
      if (local.y() >= 0.0) plus_side = std::max(plus_side, local.y());
      if (local.y() <= 0.0) minus_side = std::max(minus_side, -local.y());
    }
  }
  if (!any_inside) return {ApproachOutcome::EmptyGrasp, 0.0};

  bool plus_contact = false;
  bool minus_contact = false;
  for (int i = 1; i <= gripper.close_steps; ++i) {
    const double w = w_max * (1.0 - static_cast<double>(i) / gripper.close_steps);
    plus_contact = plus_contact || plus_side >= 0.5 * w;
    minus_contact = minus_contact || minus_side >= 0.5 * w;
    if (plus_contact && minus_contact) {
      // Refine within the step: the later jaw touches at twice the smaller reach.
      const double contact = 2.0 * std::min(plus_side, minus_side);
      if (contact <= 0.0) break;
      return {ApproachOutcome::Feasible, contact};
    }
  }
  return {ApproachOutcome::FingersCollide, 0.0};
}

}  // namespace jawgrasp
