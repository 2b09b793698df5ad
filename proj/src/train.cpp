#include "dvk/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dvk/error.hpp"
#include "dvk/parallel.hpp"
#include "dvk/random.hpp"

namespace dvk {
namespace {

struct AdamState {
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  std::uint64_t steps = 0;
};

DenseLayer zeros_like(const DenseLayer& layer) {
  return {Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
          Eigen::VectorXd::Zero(layer.bias.size())};
}

void apply_update(Policy& policy, const Gradients& g, const TrainConfig& config,
                  AdamState& state) {
  auto& layers = policy.layers();
  const double lr = config.learning_rate;
  if (config.optimizer.kind == OptimizerKind::Sgd) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].weight -= lr * g.layers[l].weight;
      layers[l].bias -= lr * g.layers[l].bias;
    }
    return;
  }
  const auto& opt = config.optimizer;
  if (state.m.empty()) {
    for (const auto& layer : layers) {
      state.m.push_back(zeros_like(layer));
      state.v.push_back(zeros_like(layer));
    }
  }
  ++state.steps;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.steps));
  auto step = [&](auto& param, auto& m, auto& v, const auto& gradient) {
    m = opt.beta1 * m + (1.0 - opt.beta1) * gradient;
    v = opt.beta2 * v + (1.0 - opt.beta2) * gradient.cwiseProduct(gradient);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.epsilon);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    step(layers[l].weight, state.m[l].weight, state.v[l].weight, g.layers[l].weight);
    step(layers[l].bias, state.m[l].bias, state.v[l].bias, g.layers[l].bias);
  }
}

}  // namespace

void validate(const TrainConfig& config) {
  if (config.epochs == 0 || config.batch_size == 0 || config.eval_every == 0) {
    throw Error(ErrorCode::BadConfig, "epochs, batch size and eval_every must be positive");
  }
  if (config.eval_every > config.epochs) {
    throw Error(ErrorCode::BadConfig, "eval_every exceeds epochs");
  }
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw Error(ErrorCode::BadConfig, "learning rate must be positive");
  }
  const auto& opt = config.optimizer;
  if (opt.kind == OptimizerKind::Adam &&
      !(opt.beta1 >= 0.0 && opt.beta1 < 1.0 && opt.beta2 >= 0.0 && opt.beta2 < 1.0 &&
        opt.epsilon > 0.0)) {
    throw Error(ErrorCode::BadConfig, "invalid Adam parameters");
  }
  for (auto h : config.hidden) {
    if (h == 0) throw Error(ErrorCode::BadConfig, "hidden layer width must be positive");
  }
}

InputEncoder keypoint_encoder(const ReferenceSet& refs) {
  auto extractor = std::make_shared<const KeypointExtractor>(refs);
  return [extractor](const PatchGrid& frame, std::span<const double> proprio) {
    return policy_input(extractor->extract(frame), proprio);
  };
}

SampleSet build_samples(const DemoDataset& dataset, const InputEncoder& encoder) {
  std::vector<const DemoStep*> steps;
  for (const auto& demo : dataset.demos) {
    for (const auto& step : demo.steps) steps.push_back(&step);
  }
  if (steps.empty()) throw Error(ErrorCode::NoFrames, "dataset has no steps");

  std::vector<std::vector<double>> inputs(steps.size());
  parallel_for(steps.size(), [&](std::size_t i) {
    inputs[i] = encoder(*dataset.load_frame(*steps[i]), steps[i]->proprio);
  });

  SampleSet out;
  const auto in_dim = static_cast<Eigen::Index>(inputs.front().size());
  const auto act_dim = static_cast<Eigen::Index>(dataset.action_dim);
  out.inputs.resize(in_dim, static_cast<Eigen::Index>(steps.size()));
  out.actions.resize(act_dim, static_cast<Eigen::Index>(steps.size()));
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (static_cast<Eigen::Index>(inputs[i].size()) != in_dim ||
        static_cast<Eigen::Index>(steps[i]->action.size()) != act_dim) {
      throw Error(ErrorCode::DimMismatch, "encoded inputs differ in length");
    }
    const auto col = static_cast<Eigen::Index>(i);
    out.inputs.col(col) = Eigen::Map<const Eigen::VectorXd>(inputs[i].data(), in_dim);
    out.actions.col(col) = Eigen::Map<const Eigen::VectorXd>(steps[i]->action.data(), act_dim);
  }
  return out;
}

TrainReport train_samples(const SampleSet& samples, const TrainConfig& config,
                          const CheckpointScore& score) {
  validate(config);
  if (samples.size() == 0) throw Error(ErrorCode::EmptyBatch, "no training samples");

  std::vector<std::size_t> dims{static_cast<std::size_t>(samples.inputs.rows())};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(static_cast<std::size_t>(samples.actions.rows()));
  Policy policy = Policy::initialize(dims, config.activation, config.seed);

  const std::size_t n = samples.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  AdamState adam;
  TrainReport report;
  double best_score = -std::numeric_limits<double>::infinity();
  Batch batch;

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(mix_seed({config.seed, 0x65706f6368ULL, epoch}));
    std::shuffle(order.begin(), order.end(), rng);

    double weighted_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t len = std::min<std::size_t>(config.batch_size, n - begin);
      batch.inputs.resize(samples.inputs.rows(), static_cast<Eigen::Index>(len));
      batch.actions.resize(samples.actions.rows(), static_cast<Eigen::Index>(len));
      for (std::size_t k = 0; k < len; ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        batch.inputs.col(col) = samples.inputs.col(order[begin + k]);
        batch.actions.col(col) = samples.actions.col(order[begin + k]);
      }
      const Gradients g = grad(policy, batch);
      weighted_loss += g.loss * static_cast<double>(len);
      apply_update(policy, g, config, adam);
    }
    const double epoch_loss = weighted_loss / static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::Diverged, "loss became non-finite at epoch " + std::to_string(epoch));
    }
    report.loss_curve.push_back(epoch_loss);

    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      const double s = score ? score(policy, epoch) : -epoch_loss;
      report.checkpoint_scores.emplace_back(epoch, s);
      if (s > best_score || report.best_epoch == 0) {
        best_score = s;
        report.best_epoch = epoch;
        report.checkpoint = policy;
      }
    }
  }
  return report;
}

TrainReport train(const DemoDataset& dataset, const ReferenceSet& refs,
                  const TrainConfig& config) {
  validate(config);
  return train_samples(build_samples(dataset, keypoint_encoder(refs)), config);
}

Eigen::VectorXd act(const Policy& policy, const PatchGrid& frame, const ReferenceSet& refs,
                    std::span<const double> proprio) {
  return policy.forward(policy_input(extract_keypoints(frame, refs), proprio));
}

}  // namespace dvk
