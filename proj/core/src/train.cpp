#include "jawgrasp/train.hpp"

#include "jawgrasp/errors.hpp"
#include "jawgrasp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace jawgrasp {

std::vector<Sample> samples_from_records(const std::vector<DatasetRecord>& records, int classes) {
  if (classes != 2 && classes != 3) throw Error(ErrorCode::InvalidArgument, "classes must be 2 or 3");
  std::vector<Sample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.local_points, classes == 2 ? r.label2 : r.label3});
  return out;
}

Split split_by_grasp(const std::vector<DatasetRecord>& records, int classes, double held_out_fraction,
                     std::uint64_t seed) {
  if (!(held_out_fraction >= 0.0 && held_out_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "held-out fraction must lie in [0, 1)");
  }
  std::map<std::pair<std::string, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) groups[{records[i].object_id, records[i].grasp_index}].push_back(i);

  std::map<int, std::vector<const std::vector<std::size_t>*>> by_label;
  for (const auto& [key, idx] : groups) {
    const auto& r = records[idx.front()];
    by_label[classes == 2 ? r.label2 : r.label3].push_back(&idx);
  }
  Split split;
  for (auto& [label, list] : by_label) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(list);
    const auto n_held = static_cast<std::size_t>(std::llround(held_out_fraction * static_cast<double>(list.size())));
    for (std::size_t g = 0; g < list.size(); ++g) {
      auto& side = g < n_held ? split.held_out : split.train;
      side.insert(side.end(), list[g]->begin(), list[g]->end());
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.held_out.begin(), split.held_out.end());
  return split;
}

namespace {

Batch make_batch(const std::vector<const Sample*>& samples, const std::vector<PointSet>* override_points = nullptr) {
  Batch b;
  b.batch = samples.size();
  b.n_points = static_cast<std::size_t>(samples.front()->points.rows());
  b.points.resize(static_cast<Eigen::Index>(b.batch * b.n_points), 3);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const PointSet& p = override_points ? (*override_points)[i] : samples[i]->points;
    if (static_cast<std::size_t>(p.rows()) != b.n_points) throw Error(ErrorCode::ShapeMismatch, "samples differ in point count");
    b.points.middleRows(static_cast<Eigen::Index>(i * b.n_points), p.rows()) = p;
    b.labels.push_back(samples[i]->label);
  }
  return b;
}

void check_labels(const std::vector<Sample>& samples, int classes) {
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(s.label) + " outside a " +
                                                  std::to_string(classes) + "-class model");
    }
  }
}

}  // namespace

Evaluation evaluate(const NetParams& params, const std::vector<Sample>& samples, std::size_t batch_size) {
  const int classes = params.config.classes;
  check_labels(samples, classes);
  Evaluation e;
  e.count = samples.size();
  e.per_class_count.assign(static_cast<std::size_t>(classes), 0);
  std::vector<std::size_t> correct_per(static_cast<std::size_t>(classes), 0);
  if (samples.empty()) {
    e.per_class_accuracy.assign(static_cast<std::size_t>(classes), std::numeric_limits<double>::quiet_NaN());
    e.best_class_accuracy = std::numeric_limits<double>::quiet_NaN();
    e.accuracy = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  batch_size = std::max<std::size_t>(1, batch_size);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<const Sample*> chunk;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) chunk.push_back(&samples[i]);
    const Batch b = make_batch(chunk);
    const Eigen::MatrixXd logits = forward(params, b, false, 0);
    loss_sum += cross_entropy(logits, b.labels) * static_cast<double>(chunk.size());
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      Eigen::Index arg;
      logits.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
      const int y = b.labels[i];
      ++e.per_class_count[static_cast<std::size_t>(y)];
      if (arg == y) {
        ++correct;
        ++correct_per[static_cast<std::size_t>(y)];
      }
    }
  }
  e.loss = loss_sum / static_cast<double>(samples.size());
  e.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  for (int k = 0; k < classes; ++k) {
    const auto n = e.per_class_count[static_cast<std::size_t>(k)];
    e.per_class_accuracy.push_back(n ? static_cast<double>(correct_per[static_cast<std::size_t>(k)]) / static_cast<double>(n)
                                     : std::numeric_limits<double>::quiet_NaN());
  }
  e.best_class_accuracy = e.per_class_accuracy.back();
  return e;
}

double majority_baseline(const std::vector<Sample>& samples, int classes) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "no samples");
  std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= classes) throw Error(ErrorCode::LabelOutOfRange, "label outside class range");
    ++counts[static_cast<std::size_t>(s.label)];
  }
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(samples.size());
}

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& held_out, const NetConfig& config,
                  const TrainOptions& options) {
  if (train_set.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  if (options.epochs < 1 || options.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "epochs and batch size must be positive");
  check_labels(train_set, config.classes);
  check_labels(held_out, config.classes);

  TrainResult result;
  NetParams params = init_params(config);
  AdamState adam;
  double best_acc = -1.0;
  Rng order_rng(derive_seed(options.seed, 1));
  const double w = options.gripper.max_aperture;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    AdamOptions adam_opts = options.adam;
    if (options.lr_halving_epochs > 0) adam_opts.lr *= std::pow(0.5, (epoch - 1) / options.lr_halving_epochs);
    order_rng.shuffle(order);

    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::vector<const Sample*> chunk;
      std::vector<PointSet> shifted;
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = train_set[order[k]];
        chunk.push_back(&s);
        if (options.augment) {
          const auto aug_seed = derive_seed(derive_seed(options.seed, static_cast<std::uint64_t>(epoch) + 1000), order[k]);
          shifted.push_back(augment_offset(s.points, options.gripper, w, aug_seed));
        }
      }
      const Batch b = make_batch(chunk, options.augment ? &shifted : nullptr);
      ForwardCache cache;
      const auto step_seed = derive_seed(derive_seed(options.seed, 2), static_cast<std::uint64_t>(adam.step));
      forward(params, b, true, step_seed, &cache);
      const Eigen::VectorXd grad = backward(params, b, cache);
      adam_step(params.values, grad, adam, adam_opts);
    }

    EpochMetrics m;
    m.epoch = epoch;
    const Evaluation tr = evaluate(params, train_set);
    m.train_loss = tr.loss;
    m.train_accuracy = tr.accuracy;
    double score = tr.accuracy;
    if (!held_out.empty()) {
      const Evaluation ho = evaluate(params, held_out);
      m.held_out_loss = ho.loss;
      m.held_out_accuracy = ho.accuracy;
      score = ho.accuracy;
    } else {
      m.held_out_loss = std::numeric_limits<double>::quiet_NaN();
      m.held_out_accuracy = std::numeric_limits<double>::quiet_NaN();
    }
    result.history.push_back(m);
    if (score > best_acc) {
      best_acc = score;
      result.best = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

Prediction predict(const NetParams& params, const PointSet& points) {
  Batch b;
  b.batch = 1;
  b.n_points = static_cast<std::size_t>(points.rows());
  b.points = points;
  const Eigen::MatrixXd probs = softmax(forward(params, b, false, 0));
  Prediction p;
  p.probabilities = probs.row(0).transpose();
  Eigen::Index arg;
  p.probabilities.maxCoeff(&arg);
  p.label = static_cast<int>(arg);
  return p;
}

std::vector<RankedCandidate> rank_candidates(const NetParams& params, const std::vector<Candidate>& candidates,
                                             const PointCloud& cloud, const GripperModel& gripper,
                                             std::uint64_t seed) {
  std::vector<RankedCandidate> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto crop = extract_local_points(candidates[i].grasp, gripper, cloud, gripper.max_aperture, derive_seed(seed, i));
    if (!crop) continue;
    out.push_back({candidates[i], predict(params, crop->points), crop->region_count});
  }
  const Eigen::Index top = params.config.classes - 1;
  std::stable_sort(out.begin(), out.end(), [top](const RankedCandidate& a, const RankedCandidate& b) {
    return a.prediction.probabilities[top] > b.prediction.probabilities[top];
  });
  return out;
}

}  // namespace jawgrasp
