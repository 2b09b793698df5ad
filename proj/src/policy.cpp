#include "dvk/policy.hpp"

#include <cmath>
#include <string_view>

#include "dvk/error.hpp"
#include "dvk/file_util.hpp"
#include "dvk/random.hpp"

namespace dvk {
namespace {

constexpr std::string_view kMagic = "DVKPOL01";

void apply_activation(Eigen::MatrixXd& z, Activation activation) {
  if (activation == Activation::Relu) {
    z = z.cwiseMax(0.0);
  } else {
    z = z.array().tanh().matrix();
  }
}

// Derivative expressed through the activation output.
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& out, Activation activation) {
  if (activation == Activation::Relu) {
    return (out.array() > 0.0).cast<double>().matrix();
  }
  return (1.0 - out.array().square()).matrix();
}

void check_batch(const Policy& policy, const Batch& batch) {
  if (batch.size() == 0) throw Error(ErrorCode::EmptyBatch, "batch has no samples");
  if (static_cast<std::size_t>(batch.inputs.rows()) != policy.input_dim() ||
      static_cast<std::size_t>(batch.actions.rows()) != policy.output_dim() ||
      batch.actions.cols() != batch.inputs.cols()) {
    throw Error(ErrorCode::DimMismatch, "batch does not match policy dimensions");
  }
}

}  // namespace

const char* to_string(Activation activation) {
  return activation == Activation::Relu ? "relu" : "tanh";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + name + "'");
}

Policy::Policy(std::vector<DenseLayer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  if (layers_.empty()) throw Error(ErrorCode::BadDims, "policy needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.rows() == 0 || layer.weight.cols() == 0 ||
        layer.bias.size() != layer.weight.rows() ||
        (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows())) {
      throw Error(ErrorCode::BadDims, "inconsistent layer chain at layer " + std::to_string(l));
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw Error(ErrorCode::NonFiniteValue, "non-finite policy parameter");
    }
  }
}

Policy Policy::zeros(std::span<const std::size_t> dims, Activation activation) {
  if (dims.size() < 2) throw Error(ErrorCode::BadDims, "need input and output dims");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(dims[l + 1]);
    const auto cols = static_cast<Eigen::Index>(dims[l]);
    layers.push_back({Eigen::MatrixXd::Zero(rows, cols), Eigen::VectorXd::Zero(rows)});
  }
  return Policy(std::move(layers), activation);
}

Policy Policy::initialize(std::span<const std::size_t> dims, Activation activation,
                          std::uint64_t seed) {
  Policy policy = zeros(dims, activation);
  Rng rng(mix_seed({seed, 0x706f6c696379ULL}));
  for (auto& layer : policy.layers_) {
    const double fan_in = static_cast<double>(layer.weight.cols());
    const double fan_out = static_cast<double>(layer.weight.rows());
    const double limit = activation == Activation::Relu ? std::sqrt(6.0 / fan_in)
                                                        : std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
    }
  }
  return policy;
}

std::size_t Policy::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t Policy::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

std::vector<std::size_t> Policy::layer_dims() const {
  std::vector<std::size_t> dims;
  if (layers_.empty()) return dims;
  dims.push_back(input_dim());
  for (const auto& layer : layers_) dims.push_back(static_cast<std::size_t>(layer.weight.rows()));
  return dims;
}

std::size_t Policy::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

Eigen::VectorXd Policy::forward(std::span<const double> input) const {
  if (input.size() != input_dim()) {
    throw Error(ErrorCode::DimMismatch, "input length " + std::to_string(input.size()) +
                                            " vs policy input " + std::to_string(input_dim()));
  }
  Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(input.data(),
                                                        static_cast<Eigen::Index>(input.size()));
  return forward_batch(x).col(0);
}

Eigen::MatrixXd Policy::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.rows()) != input_dim()) {
    throw Error(ErrorCode::DimMismatch, "input rows do not match policy input");
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) apply_activation(z, activation_);
    a = std::move(z);
  }
  return a;
}

Batch make_batch(std::span<const Sample> samples) {
  Batch batch;
  if (samples.empty()) return batch;
  const auto in = static_cast<Eigen::Index>(samples.front().input.size());
  const auto out = static_cast<Eigen::Index>(samples.front().action.size());
  const auto n = static_cast<Eigen::Index>(samples.size());
  batch.inputs.resize(in, n);
  batch.actions.resize(out, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(s.input.size()) != in ||
        static_cast<Eigen::Index>(s.action.size()) != out) {
      throw Error(ErrorCode::DimMismatch, "samples have differing lengths");
    }
    batch.inputs.col(i) = Eigen::Map<const Eigen::VectorXd>(s.input.data(), in);
    batch.actions.col(i) = Eigen::Map<const Eigen::VectorXd>(s.action.data(), out);
  }
  return batch;
}

double bc_loss(const Policy& policy, const Batch& batch) {
  check_batch(policy, batch);
  const Eigen::MatrixXd err = policy.forward_batch(batch.inputs) - batch.actions;
  return err.squaredNorm() / static_cast<double>(batch.size());
}

double bc_loss(const Policy& policy, std::span<const Sample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyBatch, "batch has no samples");
  return bc_loss(policy, make_batch(samples));
}

Gradients grad(const Policy& policy, const Batch& batch) {
  check_batch(policy, batch);
  const auto& layers = policy.layers();
  const std::size_t depth = layers.size();
  const double n = static_cast<double>(batch.size());

  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(depth + 1);
  acts.push_back(batch.inputs);
  for (std::size_t l = 0; l < depth; ++l) {
    Eigen::MatrixXd z = layers[l].weight * acts.back();
    z.colwise() += layers[l].bias;
    if (l + 1 < depth) apply_activation(z, policy.activation());
    acts.push_back(std::move(z));
  }

  Gradients out;
  const Eigen::MatrixXd err = acts.back() - batch.actions;
  out.loss = err.squaredNorm() / n;
  out.layers.resize(depth);
  Eigen::MatrixXd delta = (2.0 / n) * err;
  for (std::size_t l = depth; l-- > 0;) {
    out.layers[l].weight = delta * acts[l].transpose();
    out.layers[l].bias = delta.rowwise().sum();
    if (l > 0) {
      delta = (layers[l].weight.transpose() * delta)
                  .cwiseProduct(activation_slope(acts[l], policy.activation()));
    }
  }
  return out;
}

Gradients grad(const Policy& policy, std::span<const Sample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyBatch, "batch has no samples");
  return grad(policy, make_batch(samples));
}

std::vector<std::uint8_t> encode_policy(const Policy& policy) {
  ByteWriter out;
  out.put_bytes(kMagic);
  out.put_u32(static_cast<std::uint32_t>(policy.layers().size()));
  for (const auto& layer : policy.layers()) {
    out.put_u32(static_cast<std::uint32_t>(layer.weight.rows()));
    out.put_u32(static_cast<std::uint32_t>(layer.weight.cols()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        out.put_f32(static_cast<float>(layer.weight(r, c)));
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      out.put_f32(static_cast<float>(layer.bias(r)));
    }
  }
  out.put_u8(static_cast<std::uint8_t>(policy.activation()));
  return std::move(out.bytes());
}

Policy decode_policy(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (!in.has(kMagic.size())) throw Error(ErrorCode::Truncated, "missing magic");
  if (in.take_bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::BadMagic, "not a DVKPOL01 file");
  }
  const std::uint32_t count = in.u32();
  if (count == 0) throw Error(ErrorCode::BadDims, "policy has no layers");
  std::vector<DenseLayer> layers;
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (rows == 0 || cols == 0) throw Error(ErrorCode::BadDims, "empty layer");
    const std::uint64_t values = std::uint64_t{rows} * cols + rows;
    if (!in.has(values * 4)) throw Error(ErrorCode::Truncated, "layer payload truncated");
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) layer.weight(r, c) = in.f32();
    }
    for (std::uint32_t r = 0; r < rows; ++r) layer.bias(r) = in.f32();
    layers.push_back(std::move(layer));
  }
  const std::uint8_t tag = in.u8();
  if (tag > static_cast<std::uint8_t>(Activation::Tanh)) {
    throw Error(ErrorCode::BadConfig, "unknown activation tag");
  }
  if (in.remaining() != 0) throw Error(ErrorCode::TrailingBytes, "bytes after policy");
  return Policy(std::move(layers), static_cast<Activation>(tag));
}

void write_policy(const Policy& policy, const std::filesystem::path& path) {
  atomic_write(path, encode_policy(policy));
}

Policy read_policy(const std::filesystem::path& path) {
  return decode_policy(read_file_bytes(path));
}

}  // namespace dvk
