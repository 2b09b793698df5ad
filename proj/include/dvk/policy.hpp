#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dvk {

enum class Activation : std::uint8_t { Relu = 0, Tanh = 1 };

const char* to_string(Activation activation);
Activation parse_activation(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Multi-layer perceptron mapping [keypoints; proprio] to an action. Hidden
/// layers use the chosen activation, the output layer is linear.
class Policy {
 public:
  Policy() = default;
  Policy(std::vector<DenseLayer> layers, Activation activation);

  /// Uniform He (ReLU) or Glorot (tanh) initialization with zero biases.
  static Policy initialize(std::span<const std::size_t> dims, Activation activation,
                           std::uint64_t seed);
  static Policy zeros(std::span<const std::size_t> dims, Activation activation);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::vector<std::size_t> layer_dims() const;
  std::size_t parameter_count() const;
  Activation activation() const { return activation_; }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  Eigen::VectorXd forward(std::span<const double> input) const;
  /// Columns of `inputs` are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

 private:
  std::vector<DenseLayer> layers_;
  Activation activation_ = Activation::Relu;
};

struct Sample {
  std::vector<double> input;
  std::vector<double> action;
};

/// Column-per-sample matrices.
struct Batch {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd actions;

  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
};

Batch make_batch(std::span<const Sample> samples);

/// Mean over the batch of the squared Euclidean action error.
double bc_loss(const Policy& policy, const Batch& batch);
double bc_loss(const Policy& policy, std::span<const Sample> samples);

struct Gradients {
  double loss = 0.0;
  std::vector<DenseLayer> layers;
};

/// Exact gradient of bc_loss with respect to every weight and bias.
Gradients grad(const Policy& policy, const Batch& batch);
Gradients grad(const Policy& policy, std::span<const Sample> samples);

std::vector<std::uint8_t> encode_policy(const Policy& policy);
Policy decode_policy(std::span<const std::uint8_t> bytes);
void write_policy(const Policy& policy, const std::filesystem::path& path);
Policy read_policy(const std::filesystem::path& path);

}  // namespace dvk
