#include <jawgrasp/errors.hpp>
#include <jawgrasp/rng.hpp>
#include <jawgrasp/train.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

using namespace jawgrasp;

namespace {

// Label 1: points spread across the whole jaw gap; label 0: a narrow sliver.
Sample toy_sample(Rng& rng, int label, std::size_t n = 64) {
  Sample s;
  s.label = label;
  s.points.resize(static_cast<Eigen::Index>(n), 3);
  const double half_y = label == 1 ? 0.035 : 0.006;
  for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
    s.points(i, 0) = rng.uniform(0.01, 0.05);
    s.points(i, 1) = rng.uniform(-half_y, half_y);
    s.points(i, 2) = rng.uniform(-0.008, 0.008);
  }
  return s;
}

std::vector<Sample> toy_set(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(toy_sample(rng, static_cast<int>(i % 2)));
  return out;
}

std::vector<Sample> cluster_set(std::size_t n, std::uint64_t seed) {
  const Vec3 centroid[2] = {Vec3(0.02, -0.02, 0.0), Vec3(0.04, 0.02, 0.0)};
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.label = static_cast<int>(i % 2);
    s.points.resize(32, 3);
    for (Eigen::Index r = 0; r < 32; ++r)
      for (int k = 0; k < 3; ++k) s.points(r, k) = centroid[s.label][k] + 0.004 * rng.normal();
    out.push_back(std::move(s));
  }
  return out;
}

NetConfig small_net() {
  NetConfig c;
  c.point_widths = {16, 32};
  c.head_widths = {16};
  c.transform_point_widths = {8};
  c.transform_head_widths = {8};
  c.input_scale = 20;
  c.dropout = 0.0;
  c.seed = 1;
  return c;
}

DatasetRecord record(const std::string& obj, std::size_t grasp, ViewKind view, int label2, int label3) {
  DatasetRecord r;
  r.object_id = obj;
  r.grasp_index = grasp;
  r.view = view;
  r.label2 = label2;
  r.label3 = label3;
  return r;
}

}  // namespace

TEST(SplitByGrasp, ViewsStayTogetherAndStratified) {
  std::vector<DatasetRecord> recs;
  for (int o = 0; o < 4; ++o)
    for (std::size_t g = 0; g < 25; ++g)
      for (ViewKind v : {ViewKind::Single, ViewKind::Full})
        recs.push_back(record("obj" + std::to_string(o), g, v, g % 5 == 0 ? 1 : 0, static_cast<int>(g % 3)));
  const Split s = split_by_grasp(recs, 2, 0.2, 3);
  EXPECT_EQ(s.train.size() + s.held_out.size(), recs.size());
  EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
  std::map<std::pair<std::string, std::size_t>, std::set<int>> side;
  for (auto i : s.train) side[{recs[i].object_id, recs[i].grasp_index}].insert(0);
  for (auto i : s.held_out) side[{recs[i].object_id, recs[i].grasp_index}].insert(1);
  for (const auto& [k, v] : side) EXPECT_EQ(v.size(), 1u);
  std::map<int, int> held_by_label;
  for (auto i : s.held_out) ++held_by_label[recs[i].label2];
  EXPECT_EQ(held_by_label[1], 2 * 4);   // 20 positive grasps -> 4 held out, two views each
  EXPECT_EQ(held_by_label[0], 2 * 16);  // 80 negative grasps -> 16
  EXPECT_EQ(split_by_grasp(recs, 2, 0.2, 3).held_out, s.held_out);
  EXPECT_NE(split_by_grasp(recs, 2, 0.2, 4).held_out, s.held_out);
  EXPECT_THROW(split_by_grasp(recs, 2, 1.0, 3), Error);
}

TEST(SamplesFromRecords, PicksLabelColumn) {
  const std::vector<DatasetRecord> recs = {record("a", 0, ViewKind::Single, 1, 2)};
  EXPECT_EQ(samples_from_records(recs, 2)[0].label, 1);
  EXPECT_EQ(samples_from_records(recs, 3)[0].label, 2);
  EXPECT_THROW(samples_from_records(recs, 4), Error);
}

TEST(Baseline, MajorityShare) {
  std::vector<Sample> s(10);
  for (int i = 0; i < 7; ++i) s[i].label = 1;
  EXPECT_DOUBLE_EQ(majority_baseline(s, 2), 0.7);
  EXPECT_DOUBLE_EQ(majority_baseline(s, 3), 0.7);
}

TEST(Train, LearnsSeparableToyAndIsDeterministic) {
  const auto tr = toy_set(128, 1);
  const auto ho = toy_set(64, 2);
  TrainOptions o;
  o.epochs = 15;
  o.batch_size = 16;
  o.adam.lr = 3e-3;
  o.seed = 5;
  const TrainResult a = train(tr, ho, small_net(), o);
  ASSERT_EQ(a.history.size(), 15u);
  const Evaluation e = evaluate(a.best, ho);
  EXPECT_GE(e.accuracy, 0.95);
  EXPECT_EQ(e.count, 64u);
  EXPECT_EQ(a.history[static_cast<std::size_t>(a.best_epoch - 1)].held_out_accuracy, e.accuracy);
  for (const auto& h : a.history) EXPECT_LE(h.held_out_accuracy, e.accuracy);

  const TrainResult b = train(tr, ho, small_net(), o);
  EXPECT_EQ(a.best.values, b.best.values);
  EXPECT_EQ(a.best_epoch, b.best_epoch);
}

TEST(Train, SeparatesClustersAtDistinctCentroids) {
  TrainOptions o;
  o.epochs = 20;
  o.batch_size = 16;
  o.augment = false;
  o.seed = 2;
  const auto ho = cluster_set(40, 8);
  const TrainResult r = train(cluster_set(80, 7), ho, small_net(), o);
  EXPECT_EQ(evaluate(r.best, ho).accuracy, 1.0);
}

TEST(Train, TrainSplitScoresAtLeastHeldOutOnConvergedToy) {
  const auto tr = toy_set(96, 3);
  const auto ho = toy_set(48, 4);
  TrainOptions o;
  o.epochs = 12;
  o.batch_size = 16;
  o.adam.lr = 3e-3;
  const TrainResult r = train(tr, ho, small_net(), o);
  EXPECT_GE(evaluate(r.best, tr).accuracy, evaluate(r.best, ho).accuracy - 0.02);
}

TEST(Evaluate, PerClassAndBestClass) {
  const NetParams p = init_params(small_net());
  auto set = toy_set(20, 5);
  const Evaluation e = evaluate(p, set);
  ASSERT_EQ(e.per_class_accuracy.size(), 2u);
  EXPECT_EQ(e.per_class_count[0] + e.per_class_count[1], 20u);
  EXPECT_EQ(e.best_class_accuracy, e.per_class_accuracy[1]);
  const double weighted = (e.per_class_accuracy[0] * e.per_class_count[0] + e.per_class_accuracy[1] * e.per_class_count[1]) / 20.0;
  EXPECT_NEAR(weighted, e.accuracy, 1e-12);
  set[0].label = 2;
  try {
    evaluate(p, set);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::LabelOutOfRange);
  }
}

TEST(Predict, ProbabilitiesSumToOne) {
  NetConfig c = small_net();
  c.classes = 3;
  const NetParams p = init_params(c);
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const Prediction pr = predict(p, toy_sample(rng, i % 2).points);
    EXPECT_NEAR(pr.probabilities.sum(), 1.0, 1e-9);
    Eigen::Index arg;
    pr.probabilities.maxCoeff(&arg);
    EXPECT_EQ(pr.label, arg);
  }
}

TEST(RankCandidates, DropsSparseCropsAndSortsStably) {
  const GripperModel m;
  Rng rng(7);
  PointCloud cloud;
  // Dense blob at x = 0 and a sparse one (30 points) at x = 1.
  for (int i = 0; i < 400; ++i) cloud.points.emplace_back(rng.uniform(-0.01, 0.01), rng.uniform(-0.02, 0.02), rng.uniform(-0.005, 0.005));
  for (int i = 0; i < 30; ++i) cloud.points.emplace_back(1 + rng.uniform(-0.01, 0.01), rng.uniform(-0.02, 0.02), rng.uniform(-0.005, 0.005));
  std::vector<Candidate> cands(4);
  cands[1].grasp.center = Vec3(1, 0, 0);
  cands[3].grasp.center = Vec3(0.001, 0, 0);
  const NetParams p = init_params(small_net());
  const auto ranked = rank_candidates(p, cands, cloud, m, 1);
  ASSERT_EQ(ranked.size(), 3u);
  for (const auto& r : ranked) {
    EXPECT_GE(r.crop_count, 50u);
    EXPECT_NE(r.candidate.grasp.center, Vec3(1, 0, 0));
  }
  for (std::size_t i = 1; i < ranked.size(); ++i)
    EXPECT_GE(ranked[i - 1].prediction.probabilities[1], ranked[i].prediction.probabilities[1]);
}
