#pragma once

#include <optional>

#include "deepkm/clustering.hpp"
#include "deepkm/common.hpp"
#include "deepkm/nn.hpp"

namespace deepkm {

enum class ClusterLoss { CT, DKM, DCN };

struct LossConfig {
  /// Coefficient of the clustering term.
  double lambda = 10.0;
  /// Exponent on inverse distances for CT, softmax temperature for DKM.
  double alpha = 3.0;
  /// Floor applied to squared distances before they are raised to -alpha.
  double epsilon = 1e-12;
  ClusterLoss variant = ClusterLoss::CT;

  /// Throws ConfigError unless lambda >= 0, alpha > 0, epsilon > 0.
  void validate() const;
};

/// Soft memberships (B x K); rows are probability vectors.
using MembershipWeights = Matrix;

/// w_ik = d_ik^-alpha / sum_k' d_ik'^-alpha with d_ik = max(|z_i - r_k|^2, epsilon).
MembershipWeights ct_weights(const Matrix& latent, const Centroids& centroids, double alpha,
                             double epsilon = 1e-12);

/// Row-wise softmax of -alpha * |z_i - r_k|^2.
MembershipWeights dkm_weights(const Matrix& latent, const Centroids& centroids, double alpha);

struct ClusterLossValue {
  /// Batch mean of the per-sample clustering term.
  double value = 0.0;
  Matrix grad_latent;
  /// Empty for DCN, whose centers are not updated by gradient.
  Matrix grad_centroids;
};

/// Centering loss: mean over the batch of sum_k d_ik * w_ik. Gradients flow
/// through both the distances and the weights.
ClusterLossValue ct_loss(const Matrix& latent, const Centroids& centroids, const LossConfig& config);

/// Softmax-weighted variant; gradients with respect to latent and centers.
ClusterLossValue dkm_loss(const Matrix& latent, const Centroids& centroids, const LossConfig& config);

/// Mean over the batch of 1/2 |z_i - r_{s_i}|^2. The coefficient is left to the caller.
ClusterLossValue dcn_penalty(const Matrix& latent, const Centroids& centroids,
                             const Assignment& assignment);

struct ReconstructionLoss {
  double value = 0.0;
  Matrix grad_output;
};

/// Squared error summed over features, averaged over the batch.
ReconstructionLoss reconstruction_loss(const Matrix& output, const Matrix& target);

struct ObjectiveValue {
  double total = 0.0;
  double reconstruction = 0.0;
  /// Clustering term before multiplication by lambda.
  double clustering = 0.0;
  Gradients grads;
  /// Gradient of the total with respect to the centers (already scaled by lambda).
  Matrix grad_centroids;
  /// Hard labels used by DCN; empty otherwise.
  Assignment assignment;
};

/// reconstruction + lambda * clustering term, with gradients for every
/// network parameter. DCN uses `assignment` when given, otherwise nearest centers.
ObjectiveValue combined_objective(const Matrix& batch, const AutoencoderParams& params,
                                  const Centroids& centroids, const LossConfig& config,
                                  const std::optional<Assignment>& assignment = std::nullopt);

}  // namespace deepkm
