#pragma once

#include "jawgrasp/candidates.hpp"
#include "jawgrasp/dataset.hpp"
#include "jawgrasp/net.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace jawgrasp {

struct Sample {
  PointSet points;  // kGraspPoints x 3, gripper frame
  int label = 0;
};

/// Samples labeled with label2 (classes == 2) or label3 (classes == 3).
std::vector<Sample> samples_from_records(const std::vector<DatasetRecord>& records, int classes);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> held_out;
};

/// Groups records by (object, grasp) so both views of a grasp share a side,
/// then sends `held_out_fraction` of each label's groups to the held-out side.
/// Indices ascend within each side.
Split split_by_grasp(const std::vector<DatasetRecord>& records, int classes, double held_out_fraction,
                     std::uint64_t seed);

struct TrainOptions {
  int epochs = 200;
  std::size_t batch_size = 32;
  AdamOptions adam;
  int lr_halving_epochs = 30;
  bool augment = true;
  GripperModel gripper;  // bounds the random offset augmentation
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double held_out_loss = 0.0;
  double held_out_accuracy = 0.0;
};

struct TrainResult {
  NetParams best;
  int best_epoch = 0;
  std::vector<EpochMetrics> history;
};

/// Seeded shuffled mini-batches with a fresh offset augmentation per sample
/// and epoch. Returns the parameters with the best held-out accuracy (the
/// earliest epoch on ties; training accuracy when no held-out set is given).
TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& held_out, const NetConfig& config,
                  const TrainOptions& options);

struct Evaluation {
  std::size_t count = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  /// Recall of each class, NaN for classes without samples.
  std::vector<double> per_class_accuracy;
  std::vector<std::size_t> per_class_count;
  /// Recall of the highest-quality class.
  double best_class_accuracy = 0.0;
};

Evaluation evaluate(const NetParams& params, const std::vector<Sample>& samples, std::size_t batch_size = 64);

/// Majority-class share of `samples`.
double majority_baseline(const std::vector<Sample>& samples, int classes);

struct Prediction {
  int label = 0;
  Eigen::VectorXd probabilities;
};

Prediction predict(const NetParams& params, const PointSet& points);

struct RankedCandidate {
  Candidate candidate;
  Prediction prediction;
  std::size_t crop_count = 0;  // in-region points before resampling
};

/// Crops each candidate at the open aperture, drops crops under the minimum
/// point count, and sorts by probability of the top class, descending; ties
/// keep candidate order.
std::vector<RankedCandidate> rank_candidates(const NetParams& params, const std::vector<Candidate>& candidates,
                                             const PointCloud& cloud, const GripperModel& gripper,
                                             std::uint64_t seed);

}  // namespace jawgrasp
