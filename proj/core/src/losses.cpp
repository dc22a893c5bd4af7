#include "deepkm/losses.hpp"

#include <cmath>
#include <string>

namespace deepkm {
namespace {

void require_same_dim(const Matrix& latent, const Centroids& centroids, const char* where) {
  if (latent.cols() != centroids.dim()) {
    throw ShapeError(std::string(where) + ": latent dim " + std::to_string(latent.cols()) +
                     " differs from centroid dim " + std::to_string(centroids.dim()));
  }
}

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - peak).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

// Turns per-(i,k) derivatives dL/dd_ik into latent and centroid gradients,
// using dd_ik/dz_i = 2 (z_i - r_k) = -dd_ik/dr_k.
void chain_distances(const Matrix& latent, const Matrix& centers, const Matrix& dd,
                     Matrix& grad_latent, Matrix& grad_centroids) {
  grad_latent = Matrix::Zero(latent.rows(), latent.cols());
  grad_centroids = Matrix::Zero(centers.rows(), centers.cols());
  for (Index i = 0; i < latent.rows(); ++i) {
    for (Index k = 0; k < centers.rows(); ++k) {
      const RowVector diff = 2.0 * dd(i, k) * (latent.row(i) - centers.row(k));
      grad_latent.row(i) += diff;
      grad_centroids.row(k) -= diff;
    }
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be a finite non-negative number");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("alpha must be positive");
  }
  if (!(epsilon > 0.0)) {
    throw ConfigError("epsilon must be positive");
  }
}

MembershipWeights ct_weights(const Matrix& latent, const Centroids& centroids, double alpha,
                             double epsilon) {
  require_same_dim(latent, centroids, "ct_weights");
  const Matrix d = squared_distances(latent, centroids.matrix());
  // d^-alpha = exp(-alpha * ln d), normalized as a softmax over k.
  const Matrix logits = (-alpha * d.array().max(epsilon).log()).matrix();
  return softmax_rows(logits);
}

MembershipWeights dkm_weights(const Matrix& latent, const Centroids& centroids, double alpha) {
  require_same_dim(latent, centroids, "dkm_weights");
  const Matrix d = squared_distances(latent, centroids.matrix());
  return softmax_rows((-alpha * d.array()).matrix());
}

ClusterLossValue ct_loss(const Matrix& latent, const Centroids& centroids, const LossConfig& config) {
  config.validate();
  require_same_dim(latent, centroids, "ct_loss");
  const Index batch = latent.rows();
  ClusterLossValue out;
  if (batch == 0) {
    out.grad_latent = Matrix::Zero(0, latent.cols());
    out.grad_centroids = Matrix::Zero(centroids.count(), centroids.dim());
    return out;
  }
  const double alpha = config.alpha;
  const Matrix raw = squared_distances(latent, centroids.matrix());
  const Matrix d = raw.array().max(config.epsilon).matrix();
  const Matrix w = softmax_rows((-alpha * d.array().log()).matrix());

  // L_i = sum_k raw_ik w_ik with w computed from the floored distances d.
  // dL_i/draw_ik = w_ik (1 - alpha (raw_ik - L_i) / d_ik); the weight term
  // vanishes where the floor is active.
  Matrix dd(batch, centroids.count());
  double total = 0.0;
  for (Index i = 0; i < batch; ++i) {
    const double per_sample = raw.row(i).dot(w.row(i));
    total += per_sample;
    for (Index k = 0; k < centroids.count(); ++k) {
      const bool floored = !(raw(i, k) > config.epsilon);
      dd(i, k) = floored ? w(i, k)
                         : w(i, k) * (1.0 - alpha * (raw(i, k) - per_sample) / d(i, k));
    }
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  out.value = total * inv_batch;
  chain_distances(latent, centroids.matrix(), dd * inv_batch, out.grad_latent, out.grad_centroids);
  return out;
}

ClusterLossValue dkm_loss(const Matrix& latent, const Centroids& centroids, const LossConfig& config) {
  config.validate();
  require_same_dim(latent, centroids, "dkm_loss");
  const Index batch = latent.rows();
  ClusterLossValue out;
  if (batch == 0) {
    out.grad_latent = Matrix::Zero(0, latent.cols());
    out.grad_centroids = Matrix::Zero(centroids.count(), centroids.dim());
    return out;
  }
  const double alpha = config.alpha;
  const Matrix d = squared_distances(latent, centroids.matrix());
  const Matrix w = softmax_rows((-alpha * d.array()).matrix());

  // dL_i/dd_ik = w_ik (1 - alpha (d_ik - L_i)).
  Matrix dd(batch, centroids.count());
  double total = 0.0;
  for (Index i = 0; i < batch; ++i) {
    const double per_sample = d.row(i).dot(w.row(i));
    total += per_sample;
    for (Index k = 0; k < centroids.count(); ++k) {
      dd(i, k) = w(i, k) * (1.0 - alpha * (d(i, k) - per_sample));
    }
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  out.value = total * inv_batch;
  chain_distances(latent, centroids.matrix(), dd * inv_batch, out.grad_latent, out.grad_centroids);
  return out;
}

ClusterLossValue dcn_penalty(const Matrix& latent, const Centroids& centroids,
                             const Assignment& assignment) {
  require_same_dim(latent, centroids, "dcn_penalty");
  if (assignment.size() != static_cast<std::size_t>(latent.rows())) {
    throw InputError("dcn_penalty: assignment length differs from batch size");
  }
  const Index batch = latent.rows();
  ClusterLossValue out;
  out.grad_latent = Matrix::Zero(batch, latent.cols());
  if (batch == 0) return out;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double total = 0.0;
  for (Index i = 0; i < batch; ++i) {
    const int k = assignment.labels[static_cast<std::size_t>(i)];
    if (k < 0 || k >= centroids.count()) {
      throw InputError("dcn_penalty: label " + std::to_string(k) + " outside [0, " +
                       std::to_string(centroids.count()) + ")");
    }
    const RowVector diff = latent.row(i) - centroids.row(k);
    total += 0.5 * diff.squaredNorm();
    out.grad_latent.row(i) = inv_batch * diff;
  }
  out.value = total * inv_batch;
  return out;
}

ReconstructionLoss reconstruction_loss(const Matrix& output, const Matrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw ShapeError("reconstruction_loss: output and target shapes differ");
  }
  ReconstructionLoss out;
  if (output.rows() == 0) {
    out.grad_output = Matrix::Zero(0, output.cols());
    return out;
  }
  const double inv_batch = 1.0 / static_cast<double>(output.rows());
  const Matrix diff = output - target;
  out.value = diff.squaredNorm() * inv_batch;
  out.grad_output = (2.0 * inv_batch) * diff;
  return out;
}

ObjectiveValue combined_objective(const Matrix& batch, const AutoencoderParams& params,
                                  const Centroids& centroids, const LossConfig& config,
                                  const std::optional<Assignment>& assignment) {
  config.validate();
  const ForwardPass pass = forward(params, batch);
  const ReconstructionLoss recon = reconstruction_loss(pass.output(), batch);

  ClusterLossValue cluster;
  ObjectiveValue out;
  switch (config.variant) {
    case ClusterLoss::CT:
      cluster = ct_loss(pass.latent(), centroids, config);
      break;
    case ClusterLoss::DKM:
      cluster = dkm_loss(pass.latent(), centroids, config);
      break;
    case ClusterLoss::DCN:
      out.assignment = assignment ? *assignment : assign(pass.latent(), centroids);
      cluster = dcn_penalty(pass.latent(), centroids, out.assignment);
      break;
  }

  out.reconstruction = recon.value;
  out.clustering = cluster.value;
  out.total = recon.value + config.lambda * cluster.value;
  if (config.lambda > 0.0) {
    out.grads = backward(params, pass, recon.grad_output, config.lambda * cluster.grad_latent);
  } else {
    out.grads = backward(params, pass, recon.grad_output);
  }
  if (cluster.grad_centroids.size() != 0) {
    out.grad_centroids = config.lambda * cluster.grad_centroids;
  }
  return out;
}

}  // namespace deepkm
