#pragma once

#include "jawgrasp/cloud.hpp"
#include "jawgrasp/gripper.hpp"
#include "jawgrasp/plane.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace jawgrasp {

/// Right-handed surface frame at a cloud point. `major_axis` follows the
/// direction of least normal variation (the axis of a cylinder).
struct LocalFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 major_axis = Vec3::UnitX();
  Vec3 minor_axis = Vec3::UnitY();
};

struct FrameOptions {
  std::size_t k_neighbors = 30;
  std::size_t count = 200;
  /// Normals are flipped to face this point (the sensor).
  Vec3 viewpoint = Vec3::Zero();
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Frames at `count` seed points drawn without replacement (all points when
/// the cloud is smaller). Normal from the neighborhood position covariance;
/// major axis from the covariance of neighbor normals, falling back to the
/// widest position spread on flat patches. Empty cloud gives no frames;
/// 0 < N < k throws TooFewPoints.
std::vector<LocalFrame> estimate_local_frames(const PointCloud& cloud, const FrameOptions& options);

struct Candidate {
  GraspConfig grasp;
  std::size_t region_count = 0;
  std::size_t frame_index = 0;
  int yaw_index = 0;
  int offset_index = 0;
};

struct SearchOptions {
  int yaw_steps = 8;             // yaws k * pi / yaw_steps about the normal
  int offset_steps = 5;          // offsets spread evenly over [-offset_span, offset_span]
  double offset_span = 0.02;
  double start_clearance = 0.02; // fingertips start this far in front of the frame origin
  unsigned threads = 1;
};

/// Open-hand placements approaching along -normal at each yaw and offset.
/// The hand is pushed in until the closing region first holds points, then
/// as deep as it can go (up to half the finger depth more) without touching
/// the cloud. Output ordered by (frame, yaw, offset).
std::vector<Candidate> generate_candidates(const PointCloud& cloud, const GripperModel& gripper,
                                           const std::vector<LocalFrame>& frames, const SearchOptions& options);

struct TableRules {
  double near_tol = 0.008;
  double pull_step = 0.005;
  int max_pulls = 10;
};

/// Drops candidates approaching away from the table, then pulls each one back
/// along -approach until no hand corner is below the table and no point of
/// `scene` is inside the hand. Survivors need at least one point of `object`
/// (the scene with the table masked) between the jaws.
std::vector<Candidate> apply_table_rules(const std::vector<Candidate>& candidates, const PointCloud& scene,
                                         const PointCloud& object, const Plane& table,
                                         const GripperModel& gripper, const TableRules& rules);

struct CandidatePipeline {
  FrameOptions frames;
  SearchOptions search;
  TableRules table;
  RansacOptions ransac;
};

enum class TableMode { None, Auto };

struct CandidateResult {
  std::optional<Plane> table;
  std::vector<Candidate> candidates;
};

/// Table fit (Auto), near-table masking, frames, search and table rules.
/// `table_override` replaces the RANSAC fit when given.
CandidateResult plan_candidates(const PointCloud& cloud, const GripperModel& gripper, TableMode mode,
                                const CandidatePipeline& options, std::optional<Plane> table_override = {});

}  // namespace jawgrasp
