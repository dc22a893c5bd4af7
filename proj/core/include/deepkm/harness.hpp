#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepkm/clustering.hpp"
#include "deepkm/data.hpp"
#include "deepkm/losses.hpp"
#include "deepkm/metrics.hpp"
#include "deepkm/nn.hpp"

namespace deepkm {

enum class Method { KM, AEKM, DCN, DKM, DKM_REIN, OURS, OURS_NOREIN };

inline constexpr Method kAllMethods[] = {Method::KM,       Method::AEKM, Method::DCN,
                                         Method::DKM,      Method::DKM_REIN,
                                         Method::OURS,     Method::OURS_NOREIN};

std::string_view method_name(Method method);
/// Accepts the names produced by method_name (case-insensitive). Throws ConfigError.
Method parse_method(std::string_view name);

/// Clustering-loss coefficient tuned for MNIST-like data: 10 for OURS, 1 for
/// DKM, 10 for DCN, 0 for the baselines that have no clustering loss.
double default_lambda(Method method);

struct TrainConfig {
  Method method = Method::OURS;
  int pretrain_epochs = 50;
  int finetune_epochs = 100;
  int batch_size = 256;
  /// Unset means default_lambda(method).
  std::optional<double> lambda;
  double alpha = 3.0;
  double epsilon = 1e-12;
  int latent_dim = 10;
  int k = 10;
  std::uint64_t seed = 0;
  /// Encoder hidden widths; the decoder mirrors them.
  std::vector<int> hidden = {500, 500, 2000};
  OptimizerSettings pretrain_optimizer;
  OptimizerSettings finetune_optimizer;
  int kmeans_max_iters = 100;
  double kmeans_tol = 1e-6;
  int kmeans_n_init = 10;

  double effective_lambda() const { return lambda.value_or(default_lambda(method)); }
  LossConfig loss_config() const;
  Architecture architecture(int input_dim) const;

  /// Throws ConfigError describing the first invalid field.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Per-call hooks; all optional.
struct TrainHooks {
  /// Reuse parameters produced by pretrain() for the same dataset and config.
  const AutoencoderParams* pretrained = nullptr;
  /// Called before every finetuning batch with the centroids that batch uses.
  std::function<void(int epoch, int batch, const Centroids&)> on_batch;
  /// Called after every finetuning epoch, after any reinitialization.
  std::function<void(int epoch, const Centroids&)> on_epoch_end;
};

struct RunReport {
  TrainConfig config;
  std::string dataset;
  std::vector<double> pretrain_losses;
  /// Finetuning series, one entry per epoch; empty for KM and AEKM.
  std::vector<double> reconstruction_losses;
  std::vector<double> clustering_losses;
  std::vector<double> total_losses;
  Assignment assignment;
  std::optional<MetricsReport> metrics;
  double wall_clock_seconds = 0.0;

  /// Final latent embeddings (raw features for KM). Not serialized.
  Matrix latents;
  Centroids centroids;
};

struct PretrainResult {
  AutoencoderParams params;
  std::vector<double> losses;
};

/// Reconstruction-only minibatch training for config.pretrain_epochs epochs.
PretrainResult pretrain(const Dataset& dataset, const TrainConfig& config);

RunReport run_baseline_km(const Dataset& dataset, const TrainConfig& config);
RunReport run_baseline_aekm(const Dataset& dataset, const TrainConfig& config,
                            const TrainHooks& hooks = {});
/// Alternates SGD on reconstruction + lambda * centering loss (centroids
/// frozen inside an epoch) with K-means on the full latent set after every epoch.
RunReport run_ours(const Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks = {});
/// run_ours without the per-epoch K-means; centroids stay at their initial values.
RunReport run_ours_norein(const Dataset& dataset, const TrainConfig& config,
                          const TrainHooks& hooks = {});
/// Joint SGD over network and centroids on the softmax-weighted loss.
RunReport run_dkm(const Dataset& dataset, const TrainConfig& config, bool reinit,
                  const TrainHooks& hooks = {});
/// Hard-assignment penalty with running-mean centroid updates.
RunReport run_dcn(const Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks = {});

/// Dispatches on config.method.
RunReport run_method(const Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks = {});

struct SuiteRow {
  Method method = Method::KM;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  double nmi_mean = 0.0;
  double nmi_std = 0.0;
  int completed = 0;
  int failed = 0;
};

struct SuiteFailure {
  Method method;
  std::uint64_t seed;
  std::string message;
};

struct SuiteResult {
  std::vector<RunReport> runs;  // ordered by (method, seed) as requested
  std::vector<SuiteRow> rows;
  std::vector<SuiteFailure> failures;
};

/// Mean and population standard deviation.
std::pair<double, double> mean_and_std(const std::vector<double>& values);

/// Runs every (method, seed) pair with the same seed list for each method.
/// Pretraining is shared between methods for a given seed. Failed runs are
/// recorded and the suite carries on.
SuiteResult run_suite(const Dataset& dataset, const TrainConfig& base_config,
                      const std::vector<std::uint64_t>& seeds, const std::vector<Method>& methods,
                      const std::function<void(const RunReport&)>& on_run = {});

}  // namespace deepkm
