#include "deepkm/cli/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace deepkm::cli {
namespace {

Json optimizer_to_json(const OptimizerSettings& opt) {
  Json j;
  j["kind"] = opt.kind == OptimizerKind::Adam ? "adam" : "sgd";
  j["learning_rate"] = opt.learning_rate;
  j["beta1"] = opt.beta1;
  j["beta2"] = opt.beta2;
  j["epsilon"] = opt.epsilon;
  return j;
}

OptimizerSettings optimizer_from_json(const Json& j) {
  OptimizerSettings opt;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "adam") {
    opt.kind = OptimizerKind::Adam;
  } else if (kind == "sgd") {
    opt.kind = OptimizerKind::SGD;
  } else {
    throw FormatError("unknown optimizer kind '" + kind + "'");
  }
  opt.learning_rate = j.at("learning_rate").get<double>();
  opt.beta1 = j.at("beta1").get<double>();
  opt.beta2 = j.at("beta2").get<double>();
  opt.epsilon = j.at("epsilon").get<double>();
  return opt;
}

std::string number(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.10g", value);
  return buffer;
}

std::string fixed(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

}  // namespace

Json config_to_json(const TrainConfig& config) {
  Json j;
  j["method"] = std::string(method_name(config.method));
  j["seed"] = config.seed;
  j["k"] = config.k;
  j["latent_dim"] = config.latent_dim;
  j["hidden"] = config.hidden;
  j["pretrain_epochs"] = config.pretrain_epochs;
  j["finetune_epochs"] = config.finetune_epochs;
  j["batch_size"] = config.batch_size;
  j["lambda"] = config.lambda ? Json(*config.lambda) : Json(nullptr);
  j["effective_lambda"] = config.effective_lambda();
  j["alpha"] = config.alpha;
  j["epsilon"] = config.epsilon;
  j["pretrain_optimizer"] = optimizer_to_json(config.pretrain_optimizer);
  j["finetune_optimizer"] = optimizer_to_json(config.finetune_optimizer);
  j["kmeans_max_iters"] = config.kmeans_max_iters;
  j["kmeans_tol"] = config.kmeans_tol;
  j["kmeans_n_init"] = config.kmeans_n_init;
  return j;
}

TrainConfig config_from_json(const Json& j) {
  try {
    TrainConfig config;
    config.method = parse_method(j.at("method").get<std::string>());
    config.seed = j.at("seed").get<std::uint64_t>();
    config.k = j.at("k").get<int>();
    config.latent_dim = j.at("latent_dim").get<int>();
    config.hidden = j.at("hidden").get<std::vector<int>>();
    config.pretrain_epochs = j.at("pretrain_epochs").get<int>();
    config.finetune_epochs = j.at("finetune_epochs").get<int>();
    config.batch_size = j.at("batch_size").get<int>();
    if (!j.at("lambda").is_null()) config.lambda = j.at("lambda").get<double>();
    config.alpha = j.at("alpha").get<double>();
    config.epsilon = j.at("epsilon").get<double>();
    config.pretrain_optimizer = optimizer_from_json(j.at("pretrain_optimizer"));
    config.finetune_optimizer = optimizer_from_json(j.at("finetune_optimizer"));
    config.kmeans_max_iters = j.at("kmeans_max_iters").get<int>();
    config.kmeans_tol = j.at("kmeans_tol").get<double>();
    config.kmeans_n_init = j.at("kmeans_n_init").get<int>();
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed config JSON: ") + e.what());
  }
}

Json report_to_json(const RunReport& report, bool include_timing) {
  Json j;
  j["schema"] = "deepkm.run/1";
  j["method"] = std::string(method_name(report.config.method));
  j["seed"] = report.config.seed;
  j["dataset"] = report.dataset;
  j["config"] = config_to_json(report.config);
  if (report.metrics) {
    Json m;
    m["acc"] = report.metrics->acc;
    m["nmi"] = report.metrics->nmi;
    Json mapping = Json::array();
    for (const auto& [pred, truth] : report.metrics->mapping) mapping.push_back({pred, truth});
    m["mapping"] = std::move(mapping);
    j["metrics"] = std::move(m);
  } else {
    j["metrics"] = nullptr;
  }
  Json losses;
  losses["pretrain"] = report.pretrain_losses;
  losses["reconstruction"] = report.reconstruction_losses;
  losses["clustering"] = report.clustering_losses;
  losses["total"] = report.total_losses;
  j["losses"] = std::move(losses);
  j["assignment"] = report.assignment.labels;
  if (include_timing) j["wall_clock_seconds"] = report.wall_clock_seconds;
  return j;
}

std::string run_stem(const RunReport& report) {
  return std::string(method_name(report.config.method)) + "_seed" + std::to_string(report.config.seed);
}

std::string loss_tsv(const RunReport& report) {
  std::ostringstream out;
  out << "phase\tepoch\treconstruction\tclustering\ttotal\n";
  for (std::size_t e = 0; e < report.pretrain_losses.size(); ++e) {
    const auto v = number(report.pretrain_losses[e]);
    out << "pretrain\t" << e + 1 << '\t' << v << "\t0\t" << v << '\n';
  }
  for (std::size_t e = 0; e < report.reconstruction_losses.size(); ++e) {
    out << "finetune\t" << e + 1 << '\t' << number(report.reconstruction_losses[e]) << '\t'
        << number(report.clustering_losses[e]) << '\t' << number(report.total_losses[e]) << '\n';
  }
  return out.str();
}

std::string suite_tsv(const std::vector<SuiteRow>& rows) {
  std::ostringstream out;
  out << "method\tacc_mean\tacc_std\tnmi_mean\tnmi_std\n";
  for (const auto& row : rows) {
    out << method_name(row.method) << '\t' << fixed(row.acc_mean) << '\t' << fixed(row.acc_std)
        << '\t' << fixed(row.nmi_mean) << '\t' << fixed(row.nmi_std) << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << text;
  out.close();
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

EmittedFiles emit_report(const std::vector<RunReport>& runs, const std::vector<SuiteRow>& rows,
                         const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  }
  EmittedFiles files;
  for (const auto& report : runs) {
    const auto stem = run_stem(report);
    const auto json_path = out_dir / (stem + ".json");
    write_text(json_path, report_to_json(report).dump(2) + "\n");
    files.paths.push_back(json_path);
    const auto loss_path = out_dir / (stem + "_losses.tsv");
    write_text(loss_path, loss_tsv(report));
    files.paths.push_back(loss_path);
  }
  if (!rows.empty()) {
    const auto suite_path = out_dir / "suite.tsv";
    write_text(suite_path, suite_tsv(rows));
    files.paths.push_back(suite_path);
  }
  return files;
}

}  // namespace deepkm::cli
