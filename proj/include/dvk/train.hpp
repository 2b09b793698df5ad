#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dvk/demo_dataset.hpp"
#include "dvk/keypoints.hpp"
#include "dvk/policy.hpp"

namespace dvk {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  std::uint32_t epochs = 200;
  std::uint32_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::uint32_t eval_every = 20;
  OptimizerConfig optimizer;
  std::vector<std::size_t> hidden{128, 128};
  Activation activation = Activation::Relu;
};

void validate(const TrainConfig& config);

struct TrainReport {
  std::vector<double> loss_curve;  // mean minibatch loss per epoch
  std::uint32_t best_epoch = 0;    // 1-based
  std::vector<std::pair<std::uint32_t, double>> checkpoint_scores;
  Policy checkpoint;
};

/// Inputs and targets, one column per step.
struct SampleSet {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd actions;

  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
};

/// Maps a frame and proprioceptive state to the policy input vector.
using InputEncoder =
    std::function<std::vector<double>(const PatchGrid& frame, std::span<const double> proprio)>;

InputEncoder keypoint_encoder(const ReferenceSet& refs);

/// Encodes every step once (frames may be processed in parallel).
SampleSet build_samples(const DemoDataset& dataset, const InputEncoder& encoder);

/// Checkpoint score, higher is better. Called every eval_every epochs and at
/// the final epoch.
using CheckpointScore = std::function<double(const Policy& policy, std::uint32_t epoch)>;

/// Minibatch behaviour cloning. Without a scorer the candidate with the lowest
/// epoch loss is kept. Deterministic in (samples, config).
TrainReport train_samples(const SampleSet& samples, const TrainConfig& config,
                          const CheckpointScore& score = {});

TrainReport train(const DemoDataset& dataset, const ReferenceSet& refs,
                  const TrainConfig& config);

/// forward(policy, policy_input(extract_keypoints(frame, refs), proprio)).
Eigen::VectorXd act(const Policy& policy, const PatchGrid& frame, const ReferenceSet& refs,
                    std::span<const double> proprio);

}  // namespace dvk
