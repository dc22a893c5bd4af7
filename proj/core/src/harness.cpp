#include "deepkm/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace deepkm {
namespace {

// Independent RNG streams derived from the run seed.
constexpr std::uint64_t kPretrainStream = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kFinetuneStream = 0xC2B2AE3D27D4EB4Full;

std::uint64_t kmeans_seed(std::uint64_t seed, int call) {
  return seed * 1000003ull + static_cast<std::uint64_t>(call);
}

std::vector<Index> shuffled_indices(Index n, std::mt19937_64& rng) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Matrix gather_rows(const Matrix& source, const std::vector<Index>& order, std::size_t start,
                   std::size_t count) {
  Matrix out(static_cast<Index>(count), source.cols());
  for (std::size_t r = 0; r < count; ++r) {
    out.row(static_cast<Index>(r)) = source.row(order[start + r]);
  }
  return out;
}

// Full shuffle per epoch, fixed-size batches, last short batch kept.
template <typename Fn>
void for_each_batch(Index n, int batch_size, std::mt19937_64& rng, Fn&& fn) {
  const auto order = shuffled_indices(n, rng);
  int batch = 0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t count = std::min(static_cast<std::size_t>(batch_size), order.size() - start);
    fn(batch++, order, start, count);
  }
}

void check_finite(double value, const char* phase, int epoch, int batch) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string(phase) + " loss became non-finite at epoch " +
                       std::to_string(epoch) + ", batch " + std::to_string(batch));
  }
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

RunReport start_report(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  dataset.validate();
  if (dataset.size() < config.k) {
    throw ConfigError("dataset has " + std::to_string(dataset.size()) + " samples, fewer than K=" +
                      std::to_string(config.k));
  }
  RunReport report;
  report.config = config;
  report.dataset = dataset.name;
  return report;
}

void finish_report(RunReport& report, const Dataset& dataset, const Timer& timer) {
  if (dataset.labels) {
    report.metrics = evaluate(report.assignment.labels, *dataset.labels);
  }
  report.wall_clock_seconds = timer.seconds();
}

KMeansResult cluster_latents(const Matrix& latents, const TrainConfig& config, int call) {
  return kmeans(latents, {config.k, kmeans_seed(config.seed, call), config.kmeans_max_iters,
                          config.kmeans_tol, config.kmeans_n_init});
}

AutoencoderParams pretrained_params(const Dataset& dataset, const TrainConfig& config,
                                    const TrainHooks& hooks, RunReport& report) {
  if (hooks.pretrained != nullptr) {
    if (hooks.pretrained->input_dim() != dataset.dim() ||
        hooks.pretrained->latent_dim() != config.latent_dim) {
      throw ConfigError("supplied pretrained parameters do not match the dataset/config");
    }
    return *hooks.pretrained;
  }
  PretrainResult pre = pretrain(dataset, config);
  report.pretrain_losses = std::move(pre.losses);
  return std::move(pre.params);
}

struct EpochAccumulator {
  double reconstruction = 0.0;
  double clustering = 0.0;
  double total = 0.0;
  Index samples = 0;

  void add(const ObjectiveValue& value, std::size_t count) {
    const double w = static_cast<double>(count);
    reconstruction += w * value.reconstruction;
    clustering += w * value.clustering;
    total += w * value.total;
    samples += static_cast<Index>(count);
  }
  void flush(RunReport& report) const {
    const double inv = 1.0 / static_cast<double>(std::max<Index>(samples, 1));
    report.reconstruction_losses.push_back(reconstruction * inv);
    report.clustering_losses.push_back(clustering * inv);
    report.total_losses.push_back(total * inv);
  }
};

enum class CentroidPolicy { FrozenWithRein, Frozen };

// Shared body of OURS and OURS^-rein.
RunReport run_centering(const Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks,
                        CentroidPolicy policy) {
  Timer timer;
  RunReport report = start_report(dataset, config);
  AutoencoderParams params = pretrained_params(dataset, config, hooks, report);

  LossConfig loss = config.loss_config();
  loss.variant = ClusterLoss::CT;

  Matrix latents = encode_chunked(params, dataset.features);
  Centroids centroids = cluster_latents(latents, config, 0).centroids;

  OptimizerState state(config.finetune_optimizer);
  std::mt19937_64 rng(config.seed ^ kFinetuneStream);
  for (int epoch = 0; epoch < config.finetune_epochs; ++epoch) {
    EpochAccumulator acc;
    for_each_batch(dataset.size(), config.batch_size, rng,
                   [&](int batch, const std::vector<Index>& order, std::size_t start, std::size_t count) {
                     if (hooks.on_batch) hooks.on_batch(epoch, batch, centroids);
                     const Matrix x = gather_rows(dataset.features, order, start, count);
                     const ObjectiveValue value = combined_objective(x, params, centroids, loss);
                     check_finite(value.total, "finetuning", epoch, batch);
                     optimizer_step(params, value.grads, state);
                     acc.add(value, count);
                   });
    acc.flush(report);
    if (policy == CentroidPolicy::FrozenWithRein) {
      latents = encode_chunked(params, dataset.features);
      centroids = cluster_latents(latents, config, epoch + 1).centroids;
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, centroids);
  }

  report.latents = encode_chunked(params, dataset.features);
  report.assignment = assign(report.latents, centroids);
  report.centroids = std::move(centroids);
  finish_report(report, dataset, timer);
  return report;
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::KM: return "km";
    case Method::AEKM: return "aekm";
    case Method::DCN: return "dcn";
    case Method::DKM: return "dkm";
    case Method::DKM_REIN: return "dkm_rein";
    case Method::OURS: return "ours";
    case Method::OURS_NOREIN: return "ours_norein";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(lower.begin(), lower.end(), '-', '_');
  for (Method method : kAllMethods) {
    if (method_name(method) == lower) return method;
  }
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected km, aekm, dcn, dkm, dkm_rein, ours, ours_norein)");
}

double default_lambda(Method method) {
  switch (method) {
    case Method::OURS:
    case Method::OURS_NOREIN:
    case Method::DCN:
      return 10.0;
    case Method::DKM:
    case Method::DKM_REIN:
      return 1.0;
    case Method::KM:
    case Method::AEKM:
      return 0.0;
  }
  return 0.0;
}

LossConfig TrainConfig::loss_config() const {
  LossConfig loss;
  loss.lambda = effective_lambda();
  loss.alpha = alpha;
  loss.epsilon = epsilon;
  switch (method) {
    case Method::DKM:
    case Method::DKM_REIN:
      loss.variant = ClusterLoss::DKM;
      break;
    case Method::DCN:
      loss.variant = ClusterLoss::DCN;
      break;
    default:
      loss.variant = ClusterLoss::CT;
  }
  return loss;
}

Architecture TrainConfig::architecture(int input_dim) const {
  return mirrored_architecture(input_dim, hidden, latent_dim);
}

void TrainConfig::validate() const {
  if (pretrain_epochs < 0) throw ConfigError("pretrain_epochs must be >= 0");
  if (finetune_epochs < 0) throw ConfigError("finetune_epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
  if (k < 1) throw ConfigError("K must be positive");
  for (int width : hidden) {
    if (width < 1) throw ConfigError("hidden layer widths must be positive");
  }
  if (kmeans_max_iters < 1) throw ConfigError("kmeans_max_iters must be positive");
  if (!(kmeans_tol >= 0.0)) throw ConfigError("kmeans_tol must be >= 0");
  if (kmeans_n_init < 1) throw ConfigError("kmeans_n_init must be positive");
  if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) {
    throw ConfigError("lambda must be a finite non-negative number");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  for (const auto* opt : {&pretrain_optimizer, &finetune_optimizer}) {
    if (!(opt->learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  }
}

PretrainResult pretrain(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  PretrainResult result;
  result.params = init_autoencoder(config.architecture(static_cast<int>(dataset.dim())), config.seed);
  OptimizerState state(config.pretrain_optimizer);
  std::mt19937_64 rng(config.seed ^ kPretrainStream);
  for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    double sum = 0.0;
    for_each_batch(dataset.size(), config.batch_size, rng,
                   [&](int batch, const std::vector<Index>& order, std::size_t start, std::size_t count) {
                     const Matrix x = gather_rows(dataset.features, order, start, count);
                     const ForwardPass pass = forward(result.params, x);
                     const ReconstructionLoss loss = reconstruction_loss(pass.output(), x);
                     check_finite(loss.value, "pretraining", epoch, batch);
                     optimizer_step(result.params, backward(result.params, pass, loss.grad_output), state);
                     sum += loss.value * static_cast<double>(count);
                   });
    result.losses.push_back(sum / static_cast<double>(std::max<Index>(dataset.size(), 1)));
  }
  return result;
}

RunReport run_baseline_km(const Dataset& dataset, const TrainConfig& config) {
  Timer timer;
  RunReport report = start_report(dataset, config);
  KMeansResult km = cluster_latents(dataset.features, config, 0);
  report.latents = dataset.features;
  report.assignment = assign(dataset.features, km.centroids);
  report.centroids = std::move(km.centroids);
  finish_report(report, dataset, timer);
  return report;
}

RunReport run_baseline_aekm(const Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks) {
  Timer timer;
  RunReport report = start_report(dataset, config);
  const AutoencoderParams params = pretrained_params(dataset, config, hooks, report);
  report.latents = encode_chunked(params, dataset.features);
  KMeansResult km = cluster_latents(report.latents, config, 0);
  report.assignment = assign(report.latents, km.centroids);
  report.centroids = std::move(km.centroids);
  finish_report(report, dataset, timer);
  return report;
}

RunReport run_ours(const Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks) {
  return run_centering(dataset, config, hooks, CentroidPolicy::FrozenWithRein);
}

RunReport run_ours_norein(const Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks) {
  return run_centering(dataset, config, hooks, CentroidPolicy::Frozen);
}

RunReport run_dkm(const Dataset& dataset, const TrainConfig& config, bool reinit,
                  const TrainHooks& hooks) {
  Timer timer;
  RunReport report = start_report(dataset, config);
  AutoencoderParams params = pretrained_params(dataset, config, hooks, report);

  LossConfig loss = config.loss_config();
  loss.variant = ClusterLoss::DKM;

  Centroids centroids = cluster_latents(encode_chunked(params, dataset.features), config, 0).centroids;
  OptimizerState net_state(config.finetune_optimizer);
  OptimizerState center_state(config.finetune_optimizer);
  std::mt19937_64 rng(config.seed ^ kFinetuneStream);
  for (int epoch = 0; epoch < config.finetune_epochs; ++epoch) {
    EpochAccumulator acc;
    for_each_batch(dataset.size(), config.batch_size, rng,
                   [&](int batch, const std::vector<Index>& order, std::size_t start, std::size_t count) {
                     if (hooks.on_batch) hooks.on_batch(epoch, batch, centroids);
                     const Matrix x = gather_rows(dataset.features, order, start, count);
                     const ObjectiveValue value = combined_objective(x, params, centroids, loss);
                     check_finite(value.total, "finetuning", epoch, batch);
                     optimizer_step(params, value.grads, net_state);
                     Matrix centers = centroids.matrix();
                     optimizer_step(centers, value.grad_centroids, center_state, "centroids");
                     centroids.assign_matrix(std::move(centers));
                     acc.add(value, count);
                   });
    acc.flush(report);
    if (reinit) {
      centroids = cluster_latents(encode_chunked(params, dataset.features), config, epoch + 1).centroids;
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, centroids);
  }

  report.latents = encode_chunked(params, dataset.features);
  report.assignment = assign(report.latents, centroids);
  report.centroids = std::move(centroids);
  finish_report(report, dataset, timer);
  return report;
}

RunReport run_dcn(const Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks) {
  Timer timer;
  RunReport report = start_report(dataset, config);
  AutoencoderParams params = pretrained_params(dataset, config, hooks, report);

  LossConfig loss = config.loss_config();
  loss.variant = ClusterLoss::DCN;

  Centroids centroids = cluster_latents(encode_chunked(params, dataset.features), config, 0).centroids;
  // Per-cluster counts start at 100, so early batches move centers gently.
  std::vector<double> counts(static_cast<std::size_t>(config.k), 100.0);
  OptimizerState state(config.finetune_optimizer);
  std::mt19937_64 rng(config.seed ^ kFinetuneStream);
  for (int epoch = 0; epoch < config.finetune_epochs; ++epoch) {
    EpochAccumulator acc;
    for_each_batch(dataset.size(), config.batch_size, rng,
                   [&](int batch, const std::vector<Index>& order, std::size_t start, std::size_t count) {
                     if (hooks.on_batch) hooks.on_batch(epoch, batch, centroids);
                     const Matrix x = gather_rows(dataset.features, order, start, count);
                     // (i) hard assignments fixed, (ii) network step on the penalty.
                     const ObjectiveValue value = combined_objective(x, params, centroids, loss);
                     check_finite(value.total, "finetuning", epoch, batch);
                     optimizer_step(params, value.grads, state);
                     acc.add(value, count);

                     // (iii) running-mean center update on the refreshed embeddings.
                     const Matrix z = encode(params, x);
                     const Assignment labels = assign(z, centroids);
                     Matrix centers = centroids.matrix();
                     for (Index i = 0; i < z.rows(); ++i) {
                       const auto k = static_cast<std::size_t>(labels.labels[static_cast<std::size_t>(i)]);
                       counts[k] += 1.0;
                       const auto row = static_cast<Index>(k);
                       centers.row(row) -= (centers.row(row) - z.row(i)) / counts[k];
                     }
                     centroids.assign_matrix(std::move(centers));
                   });
    acc.flush(report);
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, centroids);
  }

  report.latents = encode_chunked(params, dataset.features);
  report.assignment = assign(report.latents, centroids);
  report.centroids = std::move(centroids);
  finish_report(report, dataset, timer);
  return report;
}

RunReport run_method(const Dataset& dataset, const TrainConfig& config, const TrainHooks& hooks) {
  switch (config.method) {
    case Method::KM: return run_baseline_km(dataset, config);
    case Method::AEKM: return run_baseline_aekm(dataset, config, hooks);
    case Method::DCN: return run_dcn(dataset, config, hooks);
    case Method::DKM: return run_dkm(dataset, config, false, hooks);
    case Method::DKM_REIN: return run_dkm(dataset, config, true, hooks);
    case Method::OURS: return run_ours(dataset, config, hooks);
    case Method::OURS_NOREIN: return run_ours_norein(dataset, config, hooks);
  }
  throw ConfigError("unhandled method");
}

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

SuiteResult run_suite(const Dataset& dataset, const TrainConfig& base_config,
                      const std::vector<std::uint64_t>& seeds, const std::vector<Method>& methods,
                      const std::function<void(const RunReport&)>& on_run) {
  SuiteResult suite;
  std::map<std::uint64_t, PretrainResult> pretrained;

  for (Method method : methods) {
    SuiteRow row;
    row.method = method;
    std::vector<double> accs, nmis;
    for (std::uint64_t seed : seeds) {
      TrainConfig config = base_config;
      config.method = method;
      config.seed = seed;
      try {
        TrainHooks hooks;
        if (method != Method::KM) {
          auto it = pretrained.find(seed);
          if (it == pretrained.end()) {
            config.validate();
            it = pretrained.emplace(seed, pretrain(dataset, config)).first;
          }
          hooks.pretrained = &it->second.params;
        }
        RunReport report = run_method(dataset, config, hooks);
        if (method != Method::KM) report.pretrain_losses = pretrained.at(seed).losses;
        if (report.metrics) {
          accs.push_back(report.metrics->acc);
          nmis.push_back(report.metrics->nmi);
        }
        ++row.completed;
        if (on_run) on_run(report);
        suite.runs.push_back(std::move(report));
      } catch (const std::exception& e) {
        ++row.failed;
        suite.failures.push_back({method, seed, e.what()});
      }
    }
    std::tie(row.acc_mean, row.acc_std) = mean_and_std(accs);
    std::tie(row.nmi_mean, row.nmi_std) = mean_and_std(nmis);
    suite.rows.push_back(row);
  }
  return suite;
}

}  // namespace deepkm
