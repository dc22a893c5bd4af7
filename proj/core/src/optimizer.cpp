#include <cmath>
#include <string>
#include <vector>

#include "deepkm/nn.hpp"

namespace deepkm {
namespace {

struct TensorSlot {
  std::string name;
  double* param;
  const double* grad;
  Index size;
};

std::vector<TensorSlot> collect(AutoencoderParams& params, const Gradients& grads) {
  if (!grads.congruent_with(params)) {
    throw ShapeError("optimizer_step: gradients are not shape-congruent with parameters");
  }
  std::vector<TensorSlot> slots;
  auto add = [&](const char* part, std::vector<DenseLayer>& layers,
                 const std::vector<LayerGradient>& g) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string prefix = std::string(part) + "[" + std::to_string(i) + "]";
      slots.push_back({prefix + ".weight", layers[i].weight.data(), g[i].weight.data(),
                       layers[i].weight.size()});
      slots.push_back({prefix + ".bias", layers[i].bias.data(), g[i].bias.data(),
                       layers[i].bias.size()});
    }
  };
  add("encoder", params.encoder, grads.encoder);
  add("decoder", params.decoder, grads.decoder);
  return slots;
}

}  // namespace

class OptimizerAccess {
 public:
  static void apply(const std::vector<TensorSlot>& slots, OptimizerState& state) {
    for (const auto& slot : slots) {
      for (Index i = 0; i < slot.size; ++i) {
        if (!std::isfinite(slot.grad[i])) {
          throw NumericError("non-finite gradient entry " + std::to_string(i) + " in " + slot.name);
        }
      }
    }

    const auto& cfg = state.settings_;
    if (cfg.kind == OptimizerKind::SGD) {
      for (const auto& slot : slots) {
        for (Index i = 0; i < slot.size; ++i) {
          slot.param[i] -= cfg.learning_rate * slot.grad[i];
        }
      }
      ++state.step_;
    } else {
      if (state.first_moment_.empty()) {
        for (const auto& slot : slots) {
          state.first_moment_.push_back(Eigen::VectorXd::Zero(slot.size));
          state.second_moment_.push_back(Eigen::VectorXd::Zero(slot.size));
        }
      }
      if (state.first_moment_.size() != slots.size()) {
        throw ShapeError("optimizer state was created for a different parameter set");
      }
      ++state.step_;
      const double t = static_cast<double>(state.step_);
      const double bias1 = 1.0 - std::pow(cfg.beta1, t);
      const double bias2 = 1.0 - std::pow(cfg.beta2, t);
      for (std::size_t s = 0; s < slots.size(); ++s) {
        const auto& slot = slots[s];
        auto& m = state.first_moment_[s];
        auto& v = state.second_moment_[s];
        if (m.size() != slot.size) {
          throw ShapeError("optimizer moment buffer mismatch for " + slot.name);
        }
        for (Index i = 0; i < slot.size; ++i) {
          const double g = slot.grad[i];
          m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
          v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
          const double m_hat = m[i] / bias1;
          const double v_hat = v[i] / bias2;
          slot.param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
      }
    }

    for (const auto& slot : slots) {
      for (Index i = 0; i < slot.size; ++i) {
        if (!std::isfinite(slot.param[i])) {
          throw NumericError("parameter " + slot.name + " became non-finite after update");
        }
      }
    }
  }
};

OptimizerState::OptimizerState(OptimizerSettings settings) : settings_(settings) {
  if (!(settings_.learning_rate > 0.0)) {
    throw ConfigError("learning rate must be positive");
  }
}

void optimizer_step(AutoencoderParams& params, const Gradients& grads, OptimizerState& state) {
  OptimizerAccess::apply(collect(params, grads), state);
}

void optimizer_step(Matrix& tensor, const Matrix& grad, OptimizerState& state,
                    const std::string& name) {
  if (tensor.rows() != grad.rows() || tensor.cols() != grad.cols()) {
    throw ShapeError("optimizer_step: gradient shape differs from " + name);
  }
  OptimizerAccess::apply({{name, tensor.data(), grad.data(), tensor.size()}}, state);
}

}  // namespace deepkm
