#include <jawgrasp/errors.hpp>
#include <jawgrasp/net.hpp>
#include <jawgrasp/rng.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

using namespace jawgrasp;

namespace {

NetConfig tiny(int classes = 2, bool transform = true) {
  NetConfig c;
  c.classes = classes;
  c.point_widths = {8, 16};
  c.head_widths = {8};
  c.transform_point_widths = {8};
  c.transform_head_widths = {8};
  c.use_input_transform = transform;
  c.init_std = 0.5;
  c.dropout = 0.0;
  c.seed = 3;
  return c;
}

Batch random_batch(std::size_t b, std::size_t n, int classes, std::uint64_t seed) {
  Rng rng(seed);
  Batch batch;
  batch.batch = b;
  batch.n_points = n;
  batch.points.resize(static_cast<Eigen::Index>(b * n), 3);
  for (Eigen::Index i = 0; i < batch.points.rows(); ++i)
    for (int k = 0; k < 3; ++k) batch.points(i, k) = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < b; ++i) batch.labels.push_back(static_cast<int>(rng.below(classes)));
  return batch;
}

// Moves every parameter off its initial value so zero-initialised paths carry gradient.
void jitter(NetParams& p, std::uint64_t seed) {
  Rng rng(seed);
  for (Eigen::Index i = 0; i < p.values.size(); ++i) p.values[i] += 0.3 * rng.normal();
}

double loss_at(const NetParams& p, const Batch& b) { return cross_entropy(forward(p, b, false, 0), b.labels); }

std::size_t dense(int in, int out) { return static_cast<std::size_t>(in) * out + out; }

}  // namespace

TEST(NetConfig, Validation) {
  EXPECT_NO_THROW(NetConfig{}.validate());
  NetConfig c;
  c.classes = 1;
  EXPECT_THROW(c.validate(), Error);
  c = NetConfig{};
  c.point_widths = {};
  EXPECT_THROW(c.validate(), Error);
  c = NetConfig{};
  c.head_widths = {32, 0};
  EXPECT_THROW(c.validate(), Error);
  c = NetConfig{};
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(ParameterCount, MatchesHandCount) {
  const std::size_t transform = dense(3, 64) + dense(64, 128) + dense(128, 1024) + dense(1024, 512) + dense(512, 256) + dense(256, 9);
  const std::size_t main = dense(3, 64) + dense(64, 64) + dense(64, 128) + dense(128, 1024) + dense(1024, 512) + dense(512, 256) + dense(256, 2);
  EXPECT_EQ(parameter_count(NetConfig{}), transform + main);
  EXPECT_EQ(parameter_count(NetConfig{}), 1600587u);
  NetConfig no_t;
  no_t.use_input_transform = false;
  EXPECT_EQ(parameter_count(no_t), main);
  const NetLayout l = NetLayout::of(tiny());
  EXPECT_EQ(l.total, parameter_count(tiny()));
  EXPECT_EQ(l.transform_point[0].offset, 0u);
  EXPECT_EQ(l.out.offset + l.out.size(), l.total);
}

TEST(Init, TransformIsIdentityAtInitialisation) {
  NetConfig c = tiny();
  c.init_std = 0.02;
  const NetParams p = init_params(c);
  const Batch b = random_batch(4, 32, 2, 1);
  for (const auto& t : input_transforms(p, b)) EXPECT_LT((t - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  const NetParams big = init_params(NetConfig{});
  for (const auto& t : input_transforms(big, random_batch(2, 64, 2, 2)))
    EXPECT_LT((t - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Init, DeterministicPerSeed) {
  EXPECT_EQ(init_params(tiny()).values, init_params(tiny()).values);
  NetConfig other = tiny();
  other.seed = 4;
  EXPECT_NE(init_params(tiny()).values, init_params(other).values);
}

TEST(Forward, PermutationInvariantExactly) {
  NetParams p = init_params(tiny(3));
  jitter(p, 5);
  const Batch b = random_batch(2, 40, 3, 6);
  const Eigen::MatrixXd base = forward(p, b, false, 0);
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Batch q = b;
    for (std::size_t s = 0; s < b.batch; ++s) {
      std::vector<std::size_t> perm(b.n_points);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      for (std::size_t i = 0; i < b.n_points; ++i)
        q.points.row(static_cast<Eigen::Index>(s * b.n_points + i)) = b.points.row(static_cast<Eigen::Index>(s * b.n_points + perm[i]));
    }
    EXPECT_EQ(forward(p, q, false, 0), base);
  }
}

TEST(Forward, SamplesAreIndependent) {
  NetParams p = init_params(tiny());
  jitter(p, 8);
  const Batch b = random_batch(3, 20, 2, 9);
  const Eigen::MatrixXd all = forward(p, b, false, 0);
  for (std::size_t s = 0; s < 3; ++s) {
    Batch one;
    one.batch = 1;
    one.n_points = 20;
    one.points = b.points.middleRows(static_cast<Eigen::Index>(s * 20), 20);
    one.labels = {b.labels[s]};
    EXPECT_LT((forward(p, one, false, 0).row(0) - all.row(static_cast<Eigen::Index>(s))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, DropoutOnlyInTrainMode) {
  NetConfig c = tiny();
  c.dropout = 0.5;
  NetParams p = init_params(c);
  jitter(p, 10);
  const Batch b = random_batch(2, 16, 2, 11);
  EXPECT_EQ(forward(p, b, false, 1), forward(p, b, false, 2));
  EXPECT_EQ(forward(p, b, true, 1), forward(p, b, true, 1));
  EXPECT_NE(forward(p, b, true, 1), forward(p, b, true, 2));
}

TEST(Backward, FiniteDifferenceGradient) {
  for (bool transform : {true, false}) {
    NetParams p = init_params(tiny(2, transform));
    jitter(p, 12);
    const Batch b = random_batch(2, 16, 2, 13);
    ForwardCache cache;
    forward(p, b, false, 0, &cache);
    const Eigen::VectorXd g = backward(p, b, cache);
    Eigen::VectorXd fd(g.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      NetParams q = p;
      q.values[i] += h;
      const double up = loss_at(q, b);
      q.values[i] -= 2 * h;
      fd[i] = (up - loss_at(q, b)) / (2 * h);
    }
    const double rel = (g - fd).norm() / std::max(g.norm(), fd.norm());
    EXPECT_LT(rel, 1e-4) << "transform=" << transform;
    for (Eigen::Index i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], fd[i], 1e-4 * std::max(1.0, std::abs(fd[i]))) << i;
  }
}

TEST(Backward, ThreeClassGradient) {
  NetParams p = init_params(tiny(3));
  jitter(p, 14);
  const Batch b = random_batch(3, 12, 3, 15);
  ForwardCache cache;
  forward(p, b, false, 0, &cache);
  const Eigen::VectorXd g = backward(p, b, cache);
  Eigen::VectorXd fd(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    NetParams q = p;
    q.values[i] += 1e-5;
    const double up = loss_at(q, b);
    q.values[i] -= 2e-5;
    fd[i] = (up - loss_at(q, b)) / 2e-5;
  }
  EXPECT_LT((g - fd).norm() / std::max(g.norm(), fd.norm()), 1e-4);
}

TEST(Losses, SoftmaxAndCrossEntropy) {
  Eigen::MatrixXd logits(2, 3);
  logits << 1000, 1000, 1000, 0, std::log(2.0), std::log(5.0);
  const Eigen::MatrixXd s = softmax(logits);
  for (int r = 0; r < 2; ++r) EXPECT_NEAR(s.row(r).sum(), 1.0, 1e-12);
  EXPECT_NEAR(s(0, 0), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(s(1, 2), 5.0 / 8.0, 1e-12);
  EXPECT_NEAR(cross_entropy(logits, {0, 2}), 0.5 * (std::log(3.0) + std::log(8.0 / 5.0)), 1e-12);
}

TEST(Batch, ValidationCatchesShapes) {
  Batch b = random_batch(2, 8, 2, 16);
  EXPECT_NO_THROW(b.validate(2));
  b.labels[1] = 2;
  EXPECT_THROW(b.validate(2), Error);
  b = random_batch(2, 8, 2, 16);
  b.n_points = 9;
  EXPECT_THROW(b.validate(2), Error);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd g(3);
  g << 2.0, -0.5, 0.0;
  AdamState st;
  adam_step(x, g, st, AdamOptions{});
  EXPECT_EQ(st.step, 1);
  EXPECT_NEAR(x[0], -1e-3, 1e-9);
  EXPECT_NEAR(x[1], 1e-3, 1e-9);
  EXPECT_EQ(x[2], 0.0);
}

TEST(Adam, MinimisesQuadratic) {
  Eigen::VectorXd x(2);
  x << 3.0, -2.0;
  AdamState st;
  AdamOptions o;
  o.lr = 0.05;
  for (int i = 0; i < 2000; ++i) adam_step(x, 2.0 * x, st, o);
  EXPECT_LT(x.norm(), 1e-2);
}

TEST(ModelFile, RoundTripBitExact) {
  NetParams p = init_params(tiny(3));
  jitter(p, 17);
  const auto path = std::filesystem::temp_directory_path() / "jawgrasp_model_test.bin";
  save_model(p, path);
  const NetParams back = load_model(path);
  EXPECT_EQ(back.values, p.values);
  EXPECT_EQ(back.config.point_widths, p.config.point_widths);
  EXPECT_EQ(back.config.classes, 3);
  const Batch b = random_batch(2, 10, 3, 18);
  EXPECT_EQ(forward(back, b, false, 0), forward(p, b, false, 0));
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  EXPECT_THROW(load_model(path), ParseError);
}
