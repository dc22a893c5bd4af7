#include "deepkm/nn.hpp"

#include <cmath>
#include <random>
#include <string>

namespace deepkm {
namespace {

void check_chain(const std::vector<LayerSpec>& layers, const char* part) {
  if (layers.empty()) {
    throw ConfigError(std::string(part) + " has no layers");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (layer.input_dim < 1 || layer.output_dim < 1) {
      throw ConfigError(std::string(part) + " layer " + std::to_string(i) +
                        " has a non-positive dimension");
    }
    if (i > 0 && layers[i - 1].output_dim != layer.input_dim) {
      throw ConfigError(std::string(part) + " layer " + std::to_string(i) + " expects input " +
                        std::to_string(layer.input_dim) + " but previous layer outputs " +
                        std::to_string(layers[i - 1].output_dim));
    }
  }
}

void apply_activation(Matrix& values, Activation activation) {
  if (activation == Activation::ReLU) {
    values = values.cwiseMax(0.0);
  }
}

Matrix run_layers(const std::vector<DenseLayer>& layers, const Matrix& input) {
  Matrix current = input;
  for (const auto& layer : layers) {
    Matrix next(current.rows(), layer.weight.cols());
    next.noalias() = current * layer.weight;
    next.rowwise() += layer.bias;
    apply_activation(next, layer.activation);
    current = std::move(next);
  }
  return current;
}

std::vector<DenseLayer> init_layers(const std::vector<LayerSpec>& specs, std::mt19937_64& rng) {
  std::vector<DenseLayer> layers;
  layers.reserve(specs.size());
  for (const auto& spec : specs) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer;
    layer.weight.resize(spec.input_dim, spec.output_dim);
    for (Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = dist(rng);
    }
    layer.bias = RowVector::Zero(spec.output_dim);
    layer.activation = spec.activation;
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

Architecture mirrored_architecture(int input_dim, std::span<const int> hidden, int latent_dim) {
  std::vector<int> widths;
  widths.push_back(input_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(latent_dim);

  Architecture arch;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    arch.encoder.push_back({widths[i], widths[i + 1], last ? Activation::Linear : Activation::ReLU});
  }
  for (std::size_t i = widths.size() - 1; i > 0; --i) {
    const bool last = i == 1;
    arch.decoder.push_back({widths[i], widths[i - 1], last ? Activation::Linear : Activation::ReLU});
  }
  validate_architecture(arch);
  return arch;
}

Architecture default_architecture(int input_dim, int latent_dim) {
  const int hidden[] = {500, 500, 2000};
  return mirrored_architecture(input_dim, hidden, latent_dim);
}

void validate_architecture(const Architecture& arch) {
  check_chain(arch.encoder, "encoder");
  check_chain(arch.decoder, "decoder");
  if (arch.decoder.front().input_dim != arch.encoder.back().output_dim) {
    throw ConfigError("decoder input dim " + std::to_string(arch.decoder.front().input_dim) +
                      " does not match latent dim " + std::to_string(arch.encoder.back().output_dim));
  }
  if (arch.decoder.back().output_dim != arch.encoder.front().input_dim) {
    throw ConfigError("decoder output dim " + std::to_string(arch.decoder.back().output_dim) +
                      " does not match input dim " + std::to_string(arch.encoder.front().input_dim));
  }
}

Index AutoencoderParams::parameter_count() const {
  Index total = 0;
  for (const auto* part : {&encoder, &decoder}) {
    for (const auto& layer : *part) {
      total += layer.weight.size() + layer.bias.size();
    }
  }
  return total;
}

bool AutoencoderParams::all_finite() const {
  for (const auto* part : {&encoder, &decoder}) {
    for (const auto& layer : *part) {
      if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
        return false;
      }
    }
  }
  return true;
}

bool operator==(const AutoencoderParams& a, const AutoencoderParams& b) {
  auto same = [](const std::vector<DenseLayer>& x, const std::vector<DenseLayer>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].activation != y[i].activation || x[i].weight.rows() != y[i].weight.rows() ||
          x[i].weight.cols() != y[i].weight.cols() || x[i].weight != y[i].weight ||
          x[i].bias != y[i].bias) {
        return false;
      }
    }
    return true;
  };
  return same(a.encoder, b.encoder) && same(a.decoder, b.decoder);
}

Gradients Gradients::zeros_like(const AutoencoderParams& params) {
  Gradients grads;
  auto zero = [](const std::vector<DenseLayer>& layers, std::vector<LayerGradient>& out) {
    out.reserve(layers.size());
    for (const auto& layer : layers) {
      out.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                     RowVector::Zero(layer.bias.size())});
    }
  };
  zero(params.encoder, grads.encoder);
  zero(params.decoder, grads.decoder);
  return grads;
}

bool Gradients::congruent_with(const AutoencoderParams& params) const {
  auto same = [](const std::vector<LayerGradient>& g, const std::vector<DenseLayer>& p) {
    if (g.size() != p.size()) return false;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i].weight.rows() != p[i].weight.rows() || g[i].weight.cols() != p[i].weight.cols() ||
          g[i].bias.size() != p[i].bias.size()) {
        return false;
      }
    }
    return true;
  };
  return same(encoder, params.encoder) && same(decoder, params.decoder);
}

double Gradients::squared_norm() const {
  double total = 0.0;
  for (const auto* part : {&encoder, &decoder}) {
    for (const auto& g : *part) {
      total += g.weight.squaredNorm() + g.bias.squaredNorm();
    }
  }
  return total;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.encoder.size() != encoder.size() || other.decoder.size() != decoder.size()) {
    throw ShapeError("gradient sets have different layer counts");
  }
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    encoder[i].weight += other.encoder[i].weight;
    encoder[i].bias += other.encoder[i].bias;
  }
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    decoder[i].weight += other.decoder[i].weight;
    decoder[i].bias += other.decoder[i].bias;
  }
  return *this;
}

Gradients& Gradients::operator*=(double scale) {
  for (auto* part : {&encoder, &decoder}) {
    for (auto& g : *part) {
      g.weight *= scale;
      g.bias *= scale;
    }
  }
  return *this;
}

AutoencoderParams init_autoencoder(const Architecture& arch, std::uint64_t seed) {
  validate_architecture(arch);
  std::mt19937_64 rng(seed);
  AutoencoderParams params;
  params.encoder = init_layers(arch.encoder, rng);
  params.decoder = init_layers(arch.decoder, rng);
  return params;
}

Matrix encode(const AutoencoderParams& params, const Matrix& batch) {
  if (batch.cols() != params.input_dim()) {
    throw ShapeError("encode: batch has " + std::to_string(batch.cols()) + " columns, expected " +
                     std::to_string(params.input_dim()));
  }
  return run_layers(params.encoder, batch);
}

Matrix decode(const AutoencoderParams& params, const Matrix& latent) {
  if (latent.cols() != params.latent_dim()) {
    throw ShapeError("decode: latent has " + std::to_string(latent.cols()) + " columns, expected " +
                     std::to_string(params.latent_dim()));
  }
  return run_layers(params.decoder, latent);
}

Matrix encode_chunked(const AutoencoderParams& params, const Matrix& data, Index chunk_rows) {
  if (data.cols() != params.input_dim()) {
    throw ShapeError("encode: data has " + std::to_string(data.cols()) + " columns, expected " +
                     std::to_string(params.input_dim()));
  }
  Matrix latent(data.rows(), params.latent_dim());
  for (Index start = 0; start < data.rows(); start += chunk_rows) {
    const Index rows = std::min(chunk_rows, data.rows() - start);
    latent.middleRows(start, rows) = run_layers(params.encoder, data.middleRows(start, rows));
  }
  return latent;
}

ForwardPass forward(const AutoencoderParams& params, const Matrix& batch) {
  if (batch.cols() != params.input_dim()) {
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) + " columns, expected " +
                     std::to_string(params.input_dim()));
  }
  ForwardPass pass;
  const std::size_t layer_count = params.encoder.size() + params.decoder.size();
  pass.layer_inputs_.reserve(layer_count);
  pass.pre_activations_.reserve(layer_count);

  Matrix current = batch;
  auto step = [&](const DenseLayer& layer) {
    Matrix pre(current.rows(), layer.weight.cols());
    pre.noalias() = current * layer.weight;
    pre.rowwise() += layer.bias;
    Matrix out = pre;
    apply_activation(out, layer.activation);
    pass.layer_inputs_.push_back(std::move(current));
    pass.pre_activations_.push_back(std::move(pre));
    current = std::move(out);
  };
  for (const auto& layer : params.encoder) step(layer);
  pass.latent_ = current;
  for (const auto& layer : params.decoder) step(layer);
  pass.output_ = std::move(current);
  return pass;
}

Gradients backward(const AutoencoderParams& params, const ForwardPass& pass,
                   const Matrix& grad_output, const Matrix& grad_latent) {
  if (pass.empty()) {
    throw StateError("backward called without a cached forward pass");
  }
  const std::size_t n_enc = params.encoder.size();
  const std::size_t n_dec = params.decoder.size();
  if (pass.layer_inputs_.size() != n_enc + n_dec || pass.latent_.cols() != params.latent_dim() ||
      pass.output_.cols() != params.input_dim()) {
    throw StateError("forward cache does not belong to these parameters");
  }
  const Index batch = pass.batch_size();
  const bool has_output_grad = grad_output.size() != 0;
  const bool has_latent_grad = grad_latent.size() != 0;
  if (has_output_grad && (grad_output.rows() != batch || grad_output.cols() != params.input_dim())) {
    throw ShapeError("backward: output gradient shape mismatch");
  }
  if (has_latent_grad && (grad_latent.rows() != batch || grad_latent.cols() != params.latent_dim())) {
    throw ShapeError("backward: latent gradient shape mismatch");
  }

  Gradients grads = Gradients::zeros_like(params);

  // delta holds dL/d(layer output) and is turned into dL/d(pre-activation).
  auto backprop_layer = [&](const DenseLayer& layer, LayerGradient& g, std::size_t cache_index,
                            Matrix delta, bool need_upstream) -> Matrix {
    if (layer.activation == Activation::ReLU) {
      delta = (pass.pre_activations_[cache_index].array() > 0.0).select(delta, 0.0);
    }
    g.weight.noalias() = pass.layer_inputs_[cache_index].transpose() * delta;
    g.bias = delta.colwise().sum();
    if (!need_upstream) {
      return Matrix();
    }
    Matrix upstream(delta.rows(), layer.weight.rows());
    upstream.noalias() = delta * layer.weight.transpose();
    return upstream;
  };

  Matrix delta = has_output_grad ? grad_output : Matrix::Zero(batch, params.input_dim());
  for (std::size_t i = n_dec; i-- > 0;) {
    delta = backprop_layer(params.decoder[i], grads.decoder[i], n_enc + i, std::move(delta), true);
  }
  if (has_latent_grad) {
    delta += grad_latent;
  }
  for (std::size_t i = n_enc; i-- > 0;) {
    delta = backprop_layer(params.encoder[i], grads.encoder[i], i, std::move(delta), i > 0);
  }
  return grads;
}

}  // namespace deepkm
