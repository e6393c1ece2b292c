#pragma once

#include "jawgrasp/cloud.hpp"
#include "jawgrasp/geometry.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace jawgrasp {

/// Parallel-jaw hand. Lengths in meters.
///
///            base_depth
///            |<->|
///   Z  ^     +---+==========================+  finger (thickness t_f)
///      |     |   |                          |
///      o-->X |   |   closing region  (w)    |  Y: closing axis
///            |   |                          |
///            +---+==========================+  finger
///                |<------ finger_depth ---->|
///                ^ gripper origin (bottom center)
struct GripperModel {
  double max_aperture = 0.085;
  double finger_depth = 0.060;
  double hand_height = 0.020;
  double finger_thickness = 0.010;
  double base_depth = 0.020;
  double standoff = 0.010;
  int approach_steps = 20;
  int close_steps = 40;

  void validate() const;
};

/// Grasp pose. Rotation columns are the approach (X), closing (Y) and
/// orthogonal (Z) axes in the world frame; `center` is the mid-depth point of
/// the closing region.
struct GraspConfig {
  Vec3 center = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  Vec3 approach() const { return rotation.col(0); }
  Vec3 closing() const { return rotation.col(1); }
  Vec3 orthogonal() const { return rotation.col(2); }

  void validate() const;
};

/// Closed axis-aligned box in the gripper-local frame.
struct Box3 {
  Vec3 lo;
  Vec3 hi;

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  std::array<Vec3, 8> corners() const;
};

/// World position of the gripper origin (bottom center of the hand).
Vec3 gripper_origin(const GraspConfig& g, const GripperModel& gripper);

/// Maps gripper-local coordinates to world coordinates.
RigidTransform gripper_to_world_transform(const GraspConfig& g, const GripperModel& gripper);

PointCloud world_to_gripper(const GraspConfig& g, const GripperModel& gripper, const PointCloud& cloud);
PointCloud gripper_to_world(const GraspConfig& g, const GripperModel& gripper, const PointCloud& cloud);

/// X in [0, d], Y in [-w/2, w/2], Z in [-h/2, h/2].
Box3 closing_region(const GripperModel& gripper, double aperture);

/// Two fingers and the base plate at the given aperture.
std::array<Box3, 3> body_boxes(const GripperModel& gripper, double aperture);

/// True if a gripper-local point is inside a finger or the base plate but not
/// in the closing region.
bool in_gripper_body(const GripperModel& gripper, double aperture, const Vec3& local);

/// Indices of cloud points inside the closing region at `aperture`.
std::vector<std::size_t> points_in_closing_region(const GraspConfig& g, const GripperModel& gripper,
                                                  const PointCloud& cloud, double aperture);

/// Number of cloud points inside the finger or base boxes.
std::size_t count_body_collisions(const GraspConfig& g, const GripperModel& gripper, const PointCloud& cloud,
                                  double aperture);

enum class ApproachOutcome { Feasible, CollidesOnApproach, FingersCollide, EmptyGrasp };

const char* to_string(ApproachOutcome outcome) noexcept;

struct ApproachCheck {
  ApproachOutcome outcome = ApproachOutcome::EmptyGrasp;
  double aperture = 0.0;  // contact aperture w*, set when Feasible
};

/// Sweeps the open hand from (finger_depth + standoff) behind the grasp pose
/// to the pose in `approach_steps` steps; any surface point entering a finger
/// or the base plate is a collision. The jaws then close symmetrically in
/// `close_steps` steps. Both jaws touching gives Feasible with the contact
/// aperture; a single jaw touching (the other would pass the midplane without
/// support) gives FingersCollide; nothing between the jaws gives EmptyGrasp.
ApproachCheck check_approach_and_close(const GraspConfig& g, const GripperModel& gripper,
                                       const PointCloud& surface);

}  // namespace jawgrasp
