#pragma once

#include "jawgrasp/cloud.hpp"
#include "jawgrasp/gripper.hpp"
#include "jawgrasp/metrics.hpp"
#include "jawgrasp/mesh.hpp"
#include "jawgrasp/raycast.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace jawgrasp {

/// Fixed size of the per-grasp point set fed to the classifier.
inline constexpr std::size_t kGraspPoints = 1000;
/// Crops with fewer in-region points are rejected.
inline constexpr std::size_t kMinRegionPoints = 50;

/// Two-class threshold on the combined score (strict).
inline constexpr double kPositiveThreshold = 1.0 / 0.6;
/// Three-class thresholds (lower bounds, inclusive).
inline constexpr double kBestThreshold = 1.0 / 0.5;
inline constexpr double kMiddleThreshold = 1.0 / 1.2;

/// N x 3 points, one per row.
using PointSet = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct SampledGrasp {
  ContactPair contacts;
  GraspConfig grasp;
  double approach_angle = 0.0;
};

struct FeasibleGrasp {
  SampledGrasp sampled;
  double aperture = 0.0;  // contact aperture from the close simulation
};

enum class ViewKind { Single, Full };

const char* to_string(ViewKind view) noexcept;
ViewKind view_from_string(const std::string& s);

struct DatasetRecord {
  std::string object_id;
  std::size_t grasp_index = 0;
  GraspConfig grasp;
  GraspScore score;
  int label2 = 0;
  int label3 = 0;
  ViewKind view = ViewKind::Single;
  std::size_t region_count = 0;  // in-region points before resampling
  PointSet local_points;         // kGraspPoints x 3, gripper frame
};

/// Target q_fc values (1 / gamma for each grid gamma) with an equal quota.
struct BinSpec {
  std::vector<double> gammas{0.4, 0.45, 0.5, 0.8, 1.2, 1.6, 2.0};
  std::size_t quota = 100;

  static BinSpec from_grid(const FrictionGrid& grid, std::size_t quota);
  /// Index of the bin whose gamma equals `gamma_star`, if any.
  std::optional<std::size_t> bin_of(std::optional<double> gamma_star) const;
};

/// Pairs of area-weighted surface samples become contacts; pairs farther
/// apart than the maximum aperture are dropped. The approach axis is a fixed
/// perpendicular of the closing axis rotated about it by an angle in [0, pi/2).
/// `count` pairs are drawn from sample_surface(mesh, 2 * count, seed).
std::vector<SampledGrasp> sample_grasp_candidates(const TriMesh& mesh, const GripperModel& gripper,
                                                  std::size_t count, std::uint64_t seed);

/// Keeps grasps whose approach-and-close simulation against `surface` is Feasible.
std::vector<FeasibleGrasp> filter_feasible(const std::vector<SampledGrasp>& grasps, const GripperModel& gripper,
                                           const PointCloud& surface);

int label_two_class(double q);
int label_three_class(double q);

struct ScoredGrasp {
  GraspScore score;
  int label2 = 0;
  int label3 = 0;
};

ScoredGrasp score_and_label(const SampledGrasp& grasp, const TriMesh& mesh, const SurfacePatches& patches,
                            const MetricsConfig& config);

/// Uniformly subsamples exactly `quota` entries per bin. `gamma_stars[i]` is
/// the gamma of entry i (entries outside every bin are ignored). Returns the
/// chosen indices in ascending order. Throws InsufficientBin naming every
/// short bin.
std::vector<std::size_t> select_balanced(const std::vector<std::optional<double>>& gamma_stars,
                                         const BinSpec& spec, std::uint64_t seed);

std::vector<DatasetRecord> balance_bins(const std::vector<DatasetRecord>& records, const BinSpec& spec,
                                        std::uint64_t seed);

struct LocalCrop {
  PointSet points;  // kGraspPoints x 3
  std::size_t region_count = 0;
};

/// Crops the closing region, maps to the gripper frame and resamples to
/// kGraspPoints rows. nullopt when fewer than kMinRegionPoints are inside.
std::optional<LocalCrop> extract_local_points(const GraspConfig& g, const GripperModel& gripper,
                                              const PointCloud& cloud, double aperture, std::uint64_t seed);

/// Shifts all points by one random offset that keeps them inside the
/// closing region.
PointSet augment_offset(const PointSet& points, const GripperModel& gripper, double aperture, std::uint64_t seed);

struct ViewSetup {
  int views = 4;
  double elevation_deg = 45.0;
  double radius = 0.5;
  CameraIntrinsics intrinsics;
};

struct RenderedView {
  RigidTransform camera_pose;  // camera to object frame
  PointCloud cloud;            // object frame
};

/// Cameras on a horizontal ring around the bounding-box center, looking at it.
std::vector<RenderedView> render_views(const TriMesh& mesh, const ViewSetup& setup);

struct DatasetConfig {
  GripperModel gripper;
  MetricsConfig metrics;
  ViewSetup views;
  std::size_t samples_per_object = 20000;
  std::size_t dense_samples = 20000;
  std::size_t quota = 100;
  unsigned threads = 1;
};

struct ObjectMesh {
  std::string id;
  TriMesh mesh;
};

/// Twelve boxes, cylinders and spheres sized to fit the default hand.
std::vector<ObjectMesh> desk_primitives();

struct ObjectSummary {
  std::string id;
  bool ok = false;
  std::string error;
  std::size_t sampled = 0;
  std::size_t feasible = 0;
  std::size_t eligible = 0;
  std::vector<std::size_t> available;  // eligible grasps per bin
  std::size_t records = 0;
};

struct DatasetSummary {
  std::vector<ObjectSummary> objects;
  /// bins[view][bin index] record counts over all objects.
  std::map<ViewKind, std::vector<std::size_t>> bins;
  bool any_failure() const;
};

/// Full pipeline into `out_dir`: sample, filter, render, pool the eligible
/// grasps of all objects, balance (the quota applies per bin over the whole
/// dataset), score, crop, serialize. Objects failing with a domain error are
/// reported in the summary and skipped. A short bin throws InsufficientBin
/// before anything is written. `config_echo` is written to the manifest.
DatasetSummary generate_dataset(const std::vector<ObjectMesh>& objects, const DatasetConfig& config,
                                std::uint64_t seed, const std::filesystem::path& out_dir,
                                const std::map<std::string, std::string>& config_echo = {});

}  // namespace jawgrasp
