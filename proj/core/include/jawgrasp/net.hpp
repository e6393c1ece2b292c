#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace jawgrasp {

/// Point-set classifier layout. Every per-point and head layer is a dense
/// layer followed by ReLU; the transform output and class output are linear.
///
///   points (N x 3) -> [input transform] -> point MLP -> max over points
///                  -> head MLP (+ dropout while training) -> C logits
///
/// The input transform is its own point MLP, max-pool and head ending in 9
/// outputs read row-major as a 3x3 matrix T; points become X * T.
struct NetConfig {
  int classes = 2;
  std::vector<int> point_widths{64, 64, 128, 1024};
  std::vector<int> head_widths{512, 256};
  bool use_input_transform = true;
  std::vector<int> transform_point_widths{64, 128, 1024};
  std::vector<int> transform_head_widths{512, 256};
  double dropout = 0.5;
  double init_std = 0.02;
  /// Coordinates are multiplied by this before the first layer.
  double input_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Where one dense layer lives inside the flat parameter vector. Weights are
/// `in x out` column-major, followed by `out` biases.
struct LayerSlot {
  std::size_t offset = 0;
  int in = 0;
  int out = 0;
  std::size_t weight_count() const { return static_cast<std::size_t>(in) * static_cast<std::size_t>(out); }
  std::size_t size() const { return weight_count() + static_cast<std::size_t>(out); }
};

/// Layer order: transform point MLP, transform head, transform output (9),
/// point MLP, head, class output.
struct NetLayout {
  std::vector<LayerSlot> transform_point;
  std::vector<LayerSlot> transform_head;
  LayerSlot transform_out;
  std::vector<LayerSlot> point;
  std::vector<LayerSlot> head;
  LayerSlot out;
  std::size_t total = 0;

  static NetLayout of(const NetConfig& config);
};

std::size_t parameter_count(const NetConfig& config);

struct NetParams {
  NetConfig config;
  NetLayout layout;
  Eigen::VectorXd values;
};

/// N(0, init_std^2) weights, zero biases; the transform output layer has zero
/// weights and the flattened identity as bias.
NetParams init_params(const NetConfig& config);

/// B samples of N points each, stacked: rows [b*N, (b+1)*N) belong to sample b.
struct Batch {
  Eigen::MatrixXd points;
  std::size_t batch = 0;
  std::size_t n_points = 0;
  std::vector<int> labels;

  void validate(int classes) const;
};

/// Activations kept by forward() for backward().
struct ForwardCache {
  std::vector<Eigen::MatrixXd> transform_acts;  // input then each point layer output
  Eigen::MatrixXi transform_argmax;             // B x F
  std::vector<Eigen::MatrixXd> transform_head_acts;
  std::vector<Eigen::Matrix3d> transforms;
  Eigen::MatrixXd scaled_input;
  std::vector<Eigen::MatrixXd> point_acts;  // transformed input then each layer output
  Eigen::MatrixXi argmax;
  std::vector<Eigen::MatrixXd> head_acts;  // pooled feature then each layer output (after dropout)
  std::vector<Eigen::MatrixXd> dropout_masks;
  Eigen::MatrixXd logits;
};

/// Logits B x C. Dropout is applied only when `train_mode` is set, with a mask
/// drawn from `seed`.
Eigen::MatrixXd forward(const NetParams& params, const Batch& batch, bool train_mode, std::uint64_t seed,
                        ForwardCache* cache = nullptr);

/// Per-sample predicted input transforms (identity when disabled).
std::vector<Eigen::Matrix3d> input_transforms(const NetParams& params, const Batch& batch);

/// Mean cross-entropy with max subtraction.
double cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits);

/// Gradient of the mean cross-entropy w.r.t. every parameter, shaped like
/// `params.values`. Max-pool gradients go to the first maximal point.
Eigen::VectorXd backward(const NetParams& params, const Batch& batch, const ForwardCache& cache);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update; increments state.step first.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, const AdamOptions& options);

void save_model(const NetParams& params, const std::filesystem::path& path);
NetParams load_model(const std::filesystem::path& path);

}  // namespace jawgrasp
