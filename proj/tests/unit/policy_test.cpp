#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "dvk/policy.hpp"
#include "test_support.hpp"

using namespace dvk;
using dvk::testing::error_of;
using dvk::testing::TempDir;

namespace {

std::vector<Sample> random_samples(dvk::Rng& rng, std::size_t n, std::size_t in, std::size_t out) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Sample> s(n);
  for (auto& x : s) {
    x.input.resize(in);
    x.action.resize(out);
    for (auto& v : x.input) v = g(rng);
    for (auto& v : x.action) v = g(rng);
  }
  return s;
}

Policy random_policy(dvk::Rng& rng, const std::vector<std::size_t>& dims, Activation act) {
  Policy p = Policy::initialize(dims, act, rng());
  std::normal_distribution<double> g(0.0, 0.3);
  for (auto& l : p.layers()) {
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = g(rng);
  }
  return p;
}

// Plain scalar loops, no Eigen.
double loop_loss(const Policy& p, const std::vector<Sample>& samples) {
  double total = 0.0;
  for (const auto& s : samples) {
    std::vector<double> h = s.input;
    const auto& layers = p.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& w = layers[l].weight;
      std::vector<double> z(static_cast<std::size_t>(w.rows()));
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double acc = layers[l].bias[i];
        for (Eigen::Index j = 0; j < w.cols(); ++j) acc += w(i, j) * h[static_cast<std::size_t>(j)];
        const bool hidden = l + 1 < layers.size();
        if (hidden) acc = p.activation() == Activation::Tanh ? std::tanh(acc) : std::max(acc, 0.0);
        z[static_cast<std::size_t>(i)] = acc;
      }
      h = z;
    }
    for (std::size_t k = 0; k < h.size(); ++k) total += (h[k] - s.action[k]) * (h[k] - s.action[k]);
  }
  return total / double(samples.size());
}

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

}  // namespace

TEST(Forward, ZeroPolicyGivesZero) {
  const std::vector<std::size_t> dims{4, 6, 3};
  const Policy p = Policy::zeros(dims, Activation::Relu);
  const Eigen::VectorXd out = p.forward(std::vector<double>{1, -2, 3, 0.5});
  EXPECT_EQ(out, Eigen::VectorXd::Zero(3));
}

TEST(Forward, IdentityLayer) {
  DenseLayer l{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3)};
  const Policy p({l}, Activation::Tanh);
  const std::vector<double> x{0.3, -7.0, 2.5};
  const Eigen::VectorXd out = p.forward(x);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(out[i], x[static_cast<std::size_t>(i)]);
}

TEST(Forward, HandComputedTanhNetwork) {
  DenseLayer l1{Eigen::MatrixXd(3, 2), Eigen::VectorXd(3)};
  l1.weight << 0.5, -1.0, 0.25, 0.75, -0.5, 2.0;
  l1.bias << 0.1, -0.2, 0.0;
  DenseLayer l2{Eigen::MatrixXd(1, 3), Eigen::VectorXd(1)};
  l2.weight << 1.0, -2.0, 0.5;
  l2.bias << 0.3;
  const Policy p({l1, l2}, Activation::Tanh);
  const double x0 = 0.8, x1 = -0.4;
  const double h0 = std::tanh(0.5 * x0 - 1.0 * x1 + 0.1);
  const double h1 = std::tanh(0.25 * x0 + 0.75 * x1 - 0.2);
  const double h2 = std::tanh(-0.5 * x0 + 2.0 * x1);
  const double expected = h0 - 2.0 * h1 + 0.5 * h2 + 0.3;
  EXPECT_NEAR(p.forward(std::vector<double>{x0, x1})[0], expected, 1e-12);
}

TEST(Forward, DimensionMismatch) {
  const std::vector<std::size_t> dims{2, 3};
  const Policy p = Policy::zeros(dims, Activation::Relu);
  EXPECT_EQ(error_of([&] { p.forward(std::vector<double>{1, 2, 3}); }), ErrorCode::DimMismatch);
}

TEST(Forward, BatchMatchesSingle) {
  dvk::Rng rng(3);
  const Policy p = random_policy(rng, {5, 8, 8, 2}, Activation::Relu);
  const auto samples = random_samples(rng, 7, 5, 2);
  const Batch b = make_batch(samples);
  const Eigen::MatrixXd out = p.forward_batch(b.inputs);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Eigen::VectorXd single = p.forward(samples[i].input);
    EXPECT_NEAR((out.col(static_cast<Eigen::Index>(i)) - single).norm(), 0.0, 1e-12);
  }
}

TEST(Loss, ZeroWhenOutputsMatch) {
  DenseLayer l{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)};
  const Policy p({l}, Activation::Relu);
  const std::vector<Sample> s{{{1, 2}, {1, 2}}, {{-3, 0.5}, {-3, 0.5}}};
  EXPECT_EQ(bc_loss(p, s), 0.0);
}

TEST(Loss, ThreeFourFive) {
  const std::vector<std::size_t> dims{1, 2};
  const Policy p = Policy::zeros(dims, Activation::Relu);
  const std::vector<Sample> s{{{7.0}, {3.0, 4.0}}};
  EXPECT_EQ(bc_loss(p, s), 25.0);
}

TEST(Loss, MatchesScalarLoop) {
  dvk::Rng rng(4);
  for (Activation act : {Activation::Relu, Activation::Tanh}) {
    const Policy p = random_policy(rng, {6, 9, 4, 3}, act);
    const auto samples = random_samples(rng, 13, 6, 3);
    EXPECT_NEAR(bc_loss(p, samples), loop_loss(p, samples), 1e-12);
  }
}

TEST(Loss, EmptyBatch) {
  const std::vector<std::size_t> dims{1, 1};
  const Policy p = Policy::zeros(dims, Activation::Relu);
  EXPECT_EQ(error_of([&] { bc_loss(p, std::span<const Sample>{}); }), ErrorCode::EmptyBatch);
  EXPECT_EQ(error_of([&] { grad(p, std::span<const Sample>{}); }), ErrorCode::EmptyBatch);
}

TEST(Grad, ZeroErrorGivesZeroGradient) {
  DenseLayer l{Eigen::MatrixXd(2, 3), Eigen::VectorXd(2)};
  l.weight << 1, 2, 3, -1, 0.5, 0;
  l.bias << 0.25, -1;
  const Policy p({l}, Activation::Relu);
  std::vector<Sample> s{{{1, 1, 1}, {}}, {{0, -2, 4}, {}}};
  for (auto& x : s) {
    const Eigen::VectorXd y = p.forward(x.input);
    x.action.assign(y.data(), y.data() + y.size());
  }
  const Gradients g = grad(p, s);
  EXPECT_EQ(g.layers[0].weight, Eigen::MatrixXd::Zero(2, 3));
  EXPECT_EQ(g.layers[0].bias, Eigen::VectorXd::Zero(2));
}

TEST(Grad, LinearClosedForm) {
  dvk::Rng rng(5);
  const Policy p = random_policy(rng, {4, 3}, Activation::Relu);
  const auto s = random_samples(rng, 1, 4, 3);
  const Gradients g = grad(p, s);
  const auto& W = p.layers()[0].weight;
  const auto& b = p.layers()[0].bias;
  const Eigen::Map<const Eigen::VectorXd> x(s[0].input.data(), 4);
  const Eigen::Map<const Eigen::VectorXd> a(s[0].action.data(), 3);
  const Eigen::VectorXd err = W * x + b - a;
  const Eigen::MatrixXd expected = 2.0 * err * x.transpose();
  EXPECT_LT((g.layers[0].weight - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((g.layers[0].bias - 2.0 * err).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(g.loss, err.squaredNorm(), 1e-12);
}

TEST(Grad, MatchesCentralDifferences) {
  dvk::Rng rng(6);
  const double h = 1e-5;
  for (int draw = 0; draw < 6; ++draw) {
    const Activation act = draw % 2 ? Activation::Relu : Activation::Tanh;
    Policy p = random_policy(rng, {5, 7, 6, 2}, act);
    const auto s = random_samples(rng, 9, 5, 2);
    const Gradients g = grad(p, s);
    double worst = 0.0;
    for (std::size_t l = 0; l < p.layers().size(); ++l) {
      auto& W = p.layers()[l].weight;
      for (Eigen::Index i = 0; i < W.size(); ++i) {
        const double keep = W.data()[i];
        W.data()[i] = keep + h;
        const double up = bc_loss(p, s);
        W.data()[i] = keep - h;
        const double down = bc_loss(p, s);
        W.data()[i] = keep;
        worst = std::max(worst, rel_error(g.layers[l].weight.data()[i], (up - down) / (2 * h)));
      }
      auto& b = p.layers()[l].bias;
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        const double keep = b[i];
        b[i] = keep + h;
        const double up = bc_loss(p, s);
        b[i] = keep - h;
        const double down = bc_loss(p, s);
        b[i] = keep;
        worst = std::max(worst, rel_error(g.layers[l].bias[i], (up - down) / (2 * h)));
      }
    }
    EXPECT_LT(worst, 1e-4) << "draw " << draw;
  }
}

TEST(GradProperty, TinyStepNeverIncreasesLoss) {
  dvk::Rng rng(7);
  for (int draw = 0; draw < 20; ++draw) {
    Policy p = random_policy(rng, {4, 8, 3}, draw % 2 ? Activation::Relu : Activation::Tanh);
    const auto s = random_samples(rng, 16, 4, 3);
    const double before = bc_loss(p, s);
    const Gradients g = grad(p, s);
    for (std::size_t l = 0; l < p.layers().size(); ++l) {
      p.layers()[l].weight -= 1e-6 * g.layers[l].weight;
      p.layers()[l].bias -= 1e-6 * g.layers[l].bias;
    }
    EXPECT_LE(bc_loss(p, s), before);
  }
}

TEST(PolicyFormat, RoundTrip) {
  dvk::Rng rng(8);
  for (Activation act : {Activation::Relu, Activation::Tanh}) {
    const Policy p = random_policy(rng, {6, 5, 3}, act);
    TempDir dir;
    write_policy(p, dir / "p.dvkpol");
    const Policy back = read_policy(dir / "p.dvkpol");
    EXPECT_EQ(back.activation(), act);
    EXPECT_EQ(back.layer_dims(), p.layer_dims());
    EXPECT_EQ(encode_policy(back), encode_policy(p));
    for (std::size_t l = 0; l < 2; ++l) {
      EXPECT_EQ(back.layers()[l].weight, p.layers()[l].weight.cast<float>().cast<double>());
    }
  }
}

TEST(PolicyFormat, ByteLayout) {
  DenseLayer l{Eigen::MatrixXd(1, 2), Eigen::VectorXd(1)};
  l.weight << 1.0, 2.0;
  l.bias << 3.0;
  const auto bytes = encode_policy(Policy({l}, Activation::Tanh));
  ASSERT_EQ(bytes.size(), 8u + 4 + 8 + 8 + 4 + 1);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "DVKPOL01");
  float w[3];
  std::memcpy(w, bytes.data() + 20, 12);
  EXPECT_EQ(w[0], 1.0f);
  EXPECT_EQ(w[1], 2.0f);
  EXPECT_EQ(w[2], 3.0f);
  EXPECT_EQ(bytes.back(), 1u);
}

TEST(PolicyFormat, DecodeErrors) {
  const std::vector<std::size_t> dims{2, 3, 1};
  const auto bytes = encode_policy(Policy::zeros(dims, Activation::Relu));
  auto bad = bytes;
  bad[0] = 'Q';
  EXPECT_EQ(error_of([&] { decode_policy(bad); }), ErrorCode::BadMagic);
  bad = bytes;
  bad.resize(bad.size() - 5);
  EXPECT_EQ(error_of([&] { decode_policy(bad); }), ErrorCode::Truncated);
  bad = bytes;
  bad.back() = 9;
  EXPECT_EQ(error_of([&] { decode_policy(bad); }), ErrorCode::BadConfig);
  bad = bytes;
  bad.push_back(0);
  EXPECT_EQ(error_of([&] { decode_policy(bad); }), ErrorCode::TrailingBytes);
  bad = bytes;
  bad[12 + 4 * 2 + 4 * 6 + 4 * 3] = 4;  // second layer's rows/cols break the chain
  EXPECT_TRUE(error_of([&] { decode_policy(bad); }).has_value());
}

TEST(PolicyConstruction, BrokenChainIsRejected) {
  DenseLayer a{Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3)};
  DenseLayer b{Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Zero(1)};
  EXPECT_EQ(error_of([&] { Policy({a, b}, Activation::Relu); }), ErrorCode::BadDims);
}
