#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deepkm/common.hpp"

namespace deepkm {

enum class Activation { ReLU, Linear };

struct LayerSpec {
  int input_dim = 0;
  int output_dim = 0;
  Activation activation = Activation::Linear;
};

// Encoder maps R^m -> R^l, decoder maps R^l -> R^m.
struct Architecture {
  std::vector<LayerSpec> encoder;
  std::vector<LayerSpec> decoder;

  int input_dim() const { return encoder.empty() ? 0 : encoder.front().input_dim; }
  int latent_dim() const { return encoder.empty() ? 0 : encoder.back().output_dim; }
};

/// Symmetric autoencoder: ReLU on every hidden layer, linear latent and
/// linear reconstruction layers. `hidden` lists encoder widths in order.
Architecture mirrored_architecture(int input_dim, std::span<const int> hidden, int latent_dim);

/// m-500-500-2000-l with a mirrored decoder.
Architecture default_architecture(int input_dim, int latent_dim = 10);

/// Throws ConfigError unless the layer dims chain from m to l and back to m.
void validate_architecture(const Architecture& arch);

// y = x * weight + bias, weight is (input_dim x output_dim).
struct DenseLayer {
  Matrix weight;
  RowVector bias;
  Activation activation = Activation::Linear;
};

struct AutoencoderParams {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;

  Index input_dim() const { return encoder.empty() ? 0 : encoder.front().weight.rows(); }
  Index latent_dim() const { return encoder.empty() ? 0 : encoder.back().weight.cols(); }
  Index parameter_count() const;
  bool all_finite() const;

  friend bool operator==(const AutoencoderParams& a, const AutoencoderParams& b);
};

struct LayerGradient {
  Matrix weight;
  RowVector bias;
};

struct Gradients {
  std::vector<LayerGradient> encoder;
  std::vector<LayerGradient> decoder;

  static Gradients zeros_like(const AutoencoderParams& params);
  bool congruent_with(const AutoencoderParams& params) const;
  double squared_norm() const;

  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double scale);
};

/// Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
AutoencoderParams init_autoencoder(const Architecture& arch, std::uint64_t seed);

Matrix encode(const AutoencoderParams& params, const Matrix& batch);
Matrix decode(const AutoencoderParams& params, const Matrix& latent);

/// Encodes a large matrix in fixed-size row chunks to bound peak memory.
Matrix encode_chunked(const AutoencoderParams& params, const Matrix& data, Index chunk_rows = 1024);

/// Activations cached by forward() and consumed by backward().
class ForwardPass {
 public:
  ForwardPass() = default;

  bool empty() const { return layer_inputs_.empty(); }
  Index batch_size() const { return output_.rows(); }
  const Matrix& input() const { return layer_inputs_.front(); }
  const Matrix& latent() const { return latent_; }
  const Matrix& output() const { return output_; }

 private:
  friend ForwardPass forward(const AutoencoderParams&, const Matrix&);
  friend Gradients backward(const AutoencoderParams&, const ForwardPass&, const Matrix&, const Matrix&);

  // One entry per layer, encoder layers first.
  std::vector<Matrix> layer_inputs_;
  std::vector<Matrix> pre_activations_;
  Matrix latent_;
  Matrix output_;
};

ForwardPass forward(const AutoencoderParams& params, const Matrix& batch);

/// Backpropagates upstream gradients of a scalar loss. `grad_output` is
/// dL/d(reconstruction), `grad_latent` is dL/d(latent) and may be empty
/// (0x0) when the loss does not touch the latent directly. Either may be
/// empty, but not both shaped wrongly. Throws StateError on an empty pass.
Gradients backward(const AutoencoderParams& params, const ForwardPass& pass,
                   const Matrix& grad_output, const Matrix& grad_latent = Matrix());

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { SGD, Adam };

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const OptimizerSettings&, const OptimizerSettings&) = default;
};

class OptimizerState {
 public:
  explicit OptimizerState(OptimizerSettings settings = {});

  const OptimizerSettings& settings() const { return settings_; }
  std::int64_t step_count() const { return step_; }

 private:
  friend class OptimizerAccess;

  OptimizerSettings settings_;
  std::vector<Eigen::VectorXd> first_moment_;
  std::vector<Eigen::VectorXd> second_moment_;
  std::int64_t step_ = 0;
};

/// Updates every parameter in place. Throws NumericError naming the tensor
/// if any gradient entry is non-finite; parameters are untouched in that case.
void optimizer_step(AutoencoderParams& params, const Gradients& grads, OptimizerState& state);

/// Same update rule applied to a single free-standing tensor (e.g. centroids).
void optimizer_step(Matrix& tensor, const Matrix& grad, OptimizerState& state,
                    const std::string& name = "tensor");

}  // namespace deepkm
