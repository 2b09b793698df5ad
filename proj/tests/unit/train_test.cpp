#include <gtest/gtest.h>

#include <cmath>

#include "dvk/parallel.hpp"
#include "dvk/train.hpp"
#include "test_support.hpp"

using namespace dvk;
using dvk::testing::error_of;
using dvk::testing::random_grid;

namespace {

SampleSet linear_samples(std::size_t n, std::uint64_t seed) {
  dvk::Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd w(2, 4);
  w << 0.5, -1.0, 0.25, 2.0, -0.75, 0.1, 1.5, 0.0;
  const Eigen::Vector2d b(0.3, -0.2);
  SampleSet s;
  s.inputs.resize(4, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < s.inputs.size(); ++i) s.inputs.data()[i] = g(rng);
  s.actions = (w * s.inputs).colwise() + b;
  return s;
}

TrainConfig linear_config() {
  TrainConfig c;
  c.hidden.clear();
  c.epochs = 200;
  c.batch_size = 32;
  c.learning_rate = 0.05;
  c.optimizer.kind = OptimizerKind::Sgd;
  c.eval_every = 20;
  c.seed = 1;
  return c;
}

}  // namespace

TEST(Train, RealizableLinearTargetIsFitted) {
  const TrainReport r = train_samples(linear_samples(512, 2), linear_config());
  EXPECT_LT(r.loss_curve.back(), 1e-6);
  EXPECT_GE(r.best_epoch, 1u);
  EXPECT_LE(r.best_epoch, 200u);
}

TEST(Train, AdamAlsoFitsLinearTarget) {
  TrainConfig c = linear_config();
  c.optimizer.kind = OptimizerKind::Adam;
  c.learning_rate = 1e-2;
  const TrainReport r = train_samples(linear_samples(512, 2), c);
  EXPECT_LT(r.loss_curve.back(), 1e-3);
  EXPECT_LT(r.loss_curve.back(), r.loss_curve.front() * 1e-3);
}

TEST(Train, SameSeedSameCurve) {
  TrainConfig c = linear_config();
  c.hidden = {16, 8};
  c.epochs = 30;
  c.eval_every = 10;
  c.optimizer.kind = OptimizerKind::Adam;
  c.learning_rate = 1e-3;
  const SampleSet s = linear_samples(300, 3);
  const TrainReport a = train_samples(s, c);
  const TrainReport b = train_samples(s, c);
  EXPECT_EQ(a.loss_curve, b.loss_curve);
  EXPECT_EQ(encode_policy(a.checkpoint), encode_policy(b.checkpoint));
  c.seed = 2;
  EXPECT_NE(train_samples(s, c).loss_curve, a.loss_curve);
}

TEST(Train, CheckpointIsLowestLossCandidate) {
  TrainConfig c = linear_config();
  c.epochs = 50;
  c.eval_every = 7;
  const TrainReport r = train_samples(linear_samples(256, 4), c);
  ASSERT_EQ(r.checkpoint_scores.size(), 8u);  // 7,14,...,49 and the final epoch
  EXPECT_EQ(r.checkpoint_scores.back().first, 50u);
  double best = -1e300;
  std::uint32_t best_epoch = 0;
  for (const auto& [epoch, score] : r.checkpoint_scores) {
    EXPECT_EQ(score, -r.loss_curve[epoch - 1]);
    if (score > best) {
      best = score;
      best_epoch = epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
}

TEST(Train, ScorerChoosesCheckpoint) {
  TrainConfig c = linear_config();
  c.epochs = 40;
  c.eval_every = 10;
  const SampleSet s = linear_samples(128, 5);
  const TrainReport r = train_samples(
      s, c, [](const Policy&, std::uint32_t epoch) { return epoch == 20 ? 1.0 : 0.0; });
  EXPECT_EQ(r.best_epoch, 20u);
}

TEST(Train, DivergenceIsReported) {
  TrainConfig c = linear_config();
  c.learning_rate = 1e6;
  EXPECT_EQ(error_of([&] { train_samples(linear_samples(64, 6), c); }), ErrorCode::Diverged);
}

TEST(Train, ConfigValidation) {
  TrainConfig c;
  c.eval_every = c.epochs + 1;
  EXPECT_EQ(error_of([&] { validate(c); }), ErrorCode::BadConfig);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  EXPECT_EQ(error_of([&] { validate(c); }), ErrorCode::BadConfig);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_EQ(error_of([&] { validate(c); }), ErrorCode::BadConfig);
  c = TrainConfig{};
  c.hidden = {8, 0};
  EXPECT_EQ(error_of([&] { validate(c); }), ErrorCode::BadConfig);
  EXPECT_NO_THROW(validate(TrainConfig{}));
}

TEST(Train, ThreadCountDoesNotChangeResults) {
  dvk::Rng rng(9);
  DemoDataset ds;
  ds.proprio_dim = 2;
  ds.action_dim = 2;
  for (int d = 0; d < 3; ++d) {
    Demonstration demo;
    for (int t = 0; t < 10; ++t) {
      DemoStep s;
      s.frame = std::make_shared<PatchGrid>(random_grid(rng, 4, 4, 6));
      s.proprio = {0.1 * t, 0.2 * d};
      s.action = {std::sin(t * 0.3), std::cos(d * 0.7)};
      demo.steps.push_back(s);
    }
    ds.demos.push_back(demo);
  }
  ReferenceSet refs;
  refs.dim = 6;
  refs.centroids.resize(18);
  for (auto& x : refs.centroids) x = std::normal_distribution<float>(0, 1)(rng);
  refs.votes = {3, 2, 2};
  refs.config = {5, 3, 0.2f, 0};
  TrainConfig c;
  c.epochs = 20;
  c.eval_every = 5;
  c.hidden = {16};
  set_thread_count(1);
  const TrainReport one = train(ds, refs, c);
  set_thread_count(4);
  const TrainReport four = train(ds, refs, c);
  set_thread_count(0);
  EXPECT_EQ(one.loss_curve, four.loss_curve);
  EXPECT_EQ(encode_policy(one.checkpoint), encode_policy(four.checkpoint));
}

TEST(Act, ComposesExtractionInputAndForward) {
  dvk::Rng rng(10);
  const PatchGrid frame = random_grid(rng, 5, 5, 4);
  ReferenceSet refs;
  refs.dim = 4;
  refs.centroids = {1, 0, 0, 0, 0, 1, 0, 0};
  refs.votes = {1, 0};
  refs.config = {2, 2, 0.2f, 0};
  const std::vector<std::size_t> dims{7, 5, 2};
  const Policy p = Policy::initialize(dims, Activation::Tanh, 4);
  const std::vector<double> proprio{0.1, 0.2, 0.3};
  const Eigen::VectorXd manual = p.forward(policy_input(extract_keypoints(frame, refs), proprio));
  EXPECT_EQ(act(p, frame, refs, proprio), manual);
  EXPECT_EQ(act(Policy::zeros(dims, Activation::Relu), frame, refs, proprio),
            Eigen::VectorXd::Zero(2));
}

TEST(Train, SimilaritiesDoNotAffectTraining) {
  // Two datasets whose frames differ only in how well the winning patch
  // matches give identical keypoint coordinates and hence identical training.
  PatchGrid a;
  a.rows = 2;
  a.cols = 2;
  a.dim = 2;
  a.embeddings = {1, 0, 0, 1, 0, 1, 0, 1};
  PatchGrid b = a;
  b.embeddings[1] = 0.5f;  // still the best match for e1, lower similarity
  ReferenceSet refs;
  refs.dim = 2;
  refs.centroids = {1, 0};
  refs.votes = {1};
  refs.config = {1, 1, 0.2f, 0};
  auto make = [&](const PatchGrid& g) {
    DemoDataset ds;
    ds.proprio_dim = 1;
    ds.action_dim = 1;
    Demonstration demo;
    for (int t = 0; t < 4; ++t) {
      demo.steps.push_back({"", std::make_shared<PatchGrid>(g), {double(t)}, {0.5 * t}});
    }
    ds.demos.push_back(demo);
    return ds;
  };
  TrainConfig c;
  c.epochs = 10;
  c.eval_every = 5;
  c.hidden = {4};
  EXPECT_EQ(train(make(a), refs, c).loss_curve, train(make(b), refs, c).loss_curve);
}
