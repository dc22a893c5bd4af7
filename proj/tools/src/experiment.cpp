#include "deepkm/cli/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace deepkm::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw UsageError("invalid value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw UsageError("invalid boolean '" + value + "' for " + key);
}

std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  for (const auto& name : split_list(text)) {
    try {
      out.push_back(parse_method(name));
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("empty method list");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<std::uint64_t>("seeds", item));
  if (out.empty()) throw UsageError("empty seed list");
  return out;
}

std::vector<int> parse_hidden(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<int>("hidden", item));
  return out;
}

OptimizerKind parse_optimizer(const std::string& value) {
  if (value == "adam") return OptimizerKind::Adam;
  if (value == "sgd") return OptimizerKind::SGD;
  throw UsageError("unknown optimizer '" + value + "' (expected adam or sgd)");
}

DatasetSource& ensure_source(ExperimentFile& ef) {
  if (!ef.dataset) ef.dataset.emplace();
  return *ef.dataset;
}

// One key from a config file. Sections are organisational; keys are unique.
void apply_setting(ExperimentFile& ef, const std::string& full_key, const std::string& value) {
  const auto dot = full_key.rfind('.');
  const std::string key = dot == std::string::npos ? full_key : full_key.substr(dot + 1);
  auto& cfg = ef.config;

  if (key == "source" || key == "dataset") {
    const auto previous = ef.dataset;
    DatasetSource parsed = parse_dataset_spec(value);
    if (previous) {
      parsed.delimited = previous->delimited;
      parsed.blobs = previous->blobs;
      parsed.max_samples = previous->max_samples;
      if (parsed.path.empty()) parsed.path = previous->path;
      if (!parsed.labels) parsed.labels = previous->labels;
    }
    ef.dataset = parsed;
  } else if (key == "images" || key == "path") {
    ensure_source(ef).path = value;
  } else if (key == "labels") {
    ensure_source(ef).labels = std::filesystem::path(value);
  } else if (key == "delimiter") {
    if (value.empty()) throw UsageError("empty delimiter");
    ensure_source(ef).delimited.delimiter = value == "\\t" || value == "tab" ? '\t' : value[0];
  } else if (key == "label_column") {
    ensure_source(ef).delimited.label_column = parse_number<int>(full_key, value);
  } else if (key == "skip_header") {
    ensure_source(ef).delimited.skip_header = parse_bool(full_key, value);
  } else if (key == "minmax") {
    ensure_source(ef).delimited.minmax = parse_bool(full_key, value);
  } else if (key == "max_samples") {
    ensure_source(ef).max_samples = parse_number<Index>(full_key, value);
  } else if (key == "blobs_n") {
    ensure_source(ef).blobs.n_per_cluster = parse_number<int>(full_key, value);
  } else if (key == "blobs_dim") {
    ensure_source(ef).blobs.dim = parse_number<int>(full_key, value);
  } else if (key == "blobs_separation") {
    ensure_source(ef).blobs.separation = parse_number<double>(full_key, value);
  } else if (key == "blobs_noise") {
    ensure_source(ef).blobs.noise_sigma = parse_number<double>(full_key, value);
  } else if (key == "blobs_seed") {
    ensure_source(ef).blobs.seed = parse_number<std::uint64_t>(full_key, value);
  } else if (key == "method" || key == "methods") {
    ef.methods = parse_methods(value);
  } else if (key == "seed" || key == "seeds") {
    ef.seeds = parse_seeds(value);
  } else if (key == "k") {
    cfg.k = parse_number<int>(full_key, value);
  } else if (key == "lambda") {
    cfg.lambda = parse_number<double>(full_key, value);
  } else if (key == "alpha") {
    cfg.alpha = parse_number<double>(full_key, value);
  } else if (key == "epsilon") {
    cfg.epsilon = parse_number<double>(full_key, value);
  } else if (key == "latent_dim") {
    cfg.latent_dim = parse_number<int>(full_key, value);
  } else if (key == "hidden") {
    cfg.hidden = parse_hidden(value);
  } else if (key == "pretrain_epochs") {
    cfg.pretrain_epochs = parse_number<int>(full_key, value);
  } else if (key == "epochs" || key == "finetune_epochs") {
    cfg.finetune_epochs = parse_number<int>(full_key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_number<int>(full_key, value);
  } else if (key == "optimizer") {
    cfg.pretrain_optimizer.kind = cfg.finetune_optimizer.kind = parse_optimizer(value);
  } else if (key == "learning_rate") {
    cfg.finetune_optimizer.learning_rate = parse_number<double>(full_key, value);
  } else if (key == "pretrain_learning_rate") {
    cfg.pretrain_optimizer.learning_rate = parse_number<double>(full_key, value);
  } else if (key == "kmeans_max_iters") {
    cfg.kmeans_max_iters = parse_number<int>(full_key, value);
  } else if (key == "kmeans_n_init") {
    cfg.kmeans_n_init = parse_number<int>(full_key, value);
  } else if (key == "kmeans_tol") {
    cfg.kmeans_tol = parse_number<double>(full_key, value);
  } else if (key == "out") {
    ef.out_dir = value;
  } else if (key == "pred") {
    ef.pred_path = std::filesystem::path(value);
  } else if (key == "truth") {
    ef.truth_path = std::filesystem::path(value);
  } else {
    throw UsageError("unknown setting '" + full_key + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void require_exists(const std::filesystem::path& path, const char* what) {
  if (!std::filesystem::exists(path)) {
    throw UsageError(std::string(what) + " '" + path.string() + "' does not exist");
  }
}

// Flag values collected by CLI11; unset means "keep the file/default value".
struct Flags {
  std::optional<std::string> config, dataset, method, seeds, out, hidden, optimizer, pred, truth,
      labels, delimiter;
  std::optional<std::uint64_t> seed, blobs_seed;
  std::optional<int> k, epochs, pretrain_epochs, batch_size, latent_dim, label_column, blobs_n,
      blobs_dim, kmeans_max_iters, kmeans_n_init;
  std::optional<Index> max_samples;
  std::optional<double> lambda, alpha, learning_rate, pretrain_learning_rate, blobs_separation,
      blobs_noise;
  bool skip_header = false;
  bool minmax = false;
  bool quiet = false;
};

void add_options(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "key=value experiment file");
  app.add_option("--dataset", f.dataset, "blobs | mnist:DIR | idx:IMAGES[,LABELS] | csv:PATH");
  app.add_option("--method", f.method, "method name(s), comma separated");
  app.add_option("--seed", f.seed, "run seed");
  app.add_option("--seeds", f.seeds, "comma separated seed list (suite)");
  app.add_option("--k", f.k, "number of clusters");
  app.add_option("--lambda", f.lambda, "clustering-loss coefficient");
  app.add_option("--alpha", f.alpha, "membership exponent / softmax temperature");
  app.add_option("--epochs", f.epochs, "finetuning epochs");
  app.add_option("--pretrain-epochs", f.pretrain_epochs, "autoencoder pretraining epochs");
  app.add_option("--batch-size", f.batch_size, "minibatch size");
  app.add_option("--latent-dim", f.latent_dim, "latent dimension");
  app.add_option("--hidden", f.hidden, "encoder hidden widths, e.g. 500,500,2000");
  app.add_option("--optimizer", f.optimizer, "adam | sgd");
  app.add_option("--lr", f.learning_rate, "finetuning learning rate");
  app.add_option("--pretrain-lr", f.pretrain_learning_rate, "pretraining learning rate");
  app.add_option("--kmeans-max-iters", f.kmeans_max_iters, "Lloyd iteration cap");
  app.add_option("--kmeans-n-init", f.kmeans_n_init, "k-means++ restarts per clustering (best kept)");
  app.add_option("--out", f.out, "output directory (default $DEEPKM_OUT or ./results)");
  app.add_option("--labels", f.labels, "label file for idx datasets");
  app.add_option("--delimiter", f.delimiter, "field delimiter for csv datasets");
  app.add_option("--label-column", f.label_column, "label column for csv datasets (-1 = last)");
  app.add_flag("--skip-header", f.skip_header, "csv has a header row");
  app.add_flag("--minmax", f.minmax, "min-max scale csv features");
  app.add_option("--max-samples", f.max_samples, "keep a seeded random subset of rows");
  app.add_option("--blobs-n", f.blobs_n, "samples per blob");
  app.add_option("--blobs-dim", f.blobs_dim, "blob dimension");
  app.add_option("--blobs-separation", f.blobs_separation, "minimum distance between blob centers");
  app.add_option("--blobs-noise", f.blobs_noise, "blob standard deviation");
  app.add_option("--blobs-seed", f.blobs_seed, "seed of the generated blobs");
  app.add_flag("--quiet", f.quiet, "suppress progress output");
}

void apply_flags(ExperimentFile& ef, const Flags& f) {
  auto set = [&](const char* key, const auto& opt) {
    if (!opt) return;
    std::ostringstream s;
    s.precision(17);
    s << *opt;
    apply_setting(ef, key, s.str());
  };
  if (f.dataset) apply_setting(ef, "dataset", *f.dataset);
  if (f.labels) apply_setting(ef, "labels", *f.labels);
  if (f.delimiter) apply_setting(ef, "delimiter", *f.delimiter);
  set("label_column", f.label_column);
  if (f.skip_header) apply_setting(ef, "skip_header", "true");
  if (f.minmax) apply_setting(ef, "minmax", "true");
  set("max_samples", f.max_samples);
  set("blobs_n", f.blobs_n);
  set("blobs_dim", f.blobs_dim);
  set("blobs_separation", f.blobs_separation);
  set("blobs_noise", f.blobs_noise);
  set("blobs_seed", f.blobs_seed);
  if (f.method) apply_setting(ef, "method", *f.method);
  if (f.seeds) apply_setting(ef, "seeds", *f.seeds);
  set("seed", f.seed);
  set("k", f.k);
  set("lambda", f.lambda);
  set("alpha", f.alpha);
  set("epochs", f.epochs);
  set("pretrain_epochs", f.pretrain_epochs);
  set("batch_size", f.batch_size);
  set("latent_dim", f.latent_dim);
  if (f.hidden) apply_setting(ef, "hidden", *f.hidden);
  if (f.optimizer) apply_setting(ef, "optimizer", *f.optimizer);
  set("learning_rate", f.learning_rate);
  set("pretrain_learning_rate", f.pretrain_learning_rate);
  set("kmeans_max_iters", f.kmeans_max_iters);
  set("kmeans_n_init", f.kmeans_n_init);
  if (f.out) apply_setting(ef, "out", *f.out);
  if (f.pred) apply_setting(ef, "pred", *f.pred);
  if (f.truth) apply_setting(ef, "truth", *f.truth);
  if (f.quiet) ef.quiet = true;
}

void validate(ExperimentFile& ef) {
  if (ef.command == Command::Eval) {
    if (!ef.pred_path) throw UsageError("eval needs --pred");
    require_exists(*ef.pred_path, "prediction file");
    if (ef.truth_path) {
      require_exists(*ef.truth_path, "truth file");
    } else if (!ef.dataset) {
      throw UsageError("eval needs --truth or a labelled --dataset");
    }
  } else if (!ef.dataset) {
    throw UsageError("missing --dataset");
  }

  if (ef.dataset) {
    auto& source = *ef.dataset;
    switch (source.kind) {
      case SourceKind::Blobs:
        source.blobs.k = ef.config.k;
        break;
      case SourceKind::Mnist:
        require_exists(source.path, "MNIST directory");
        break;
      case SourceKind::Idx:
      case SourceKind::Delimited:
        if (source.path.empty()) throw UsageError("dataset path missing");
        require_exists(source.path, "dataset file");
        if (source.labels) require_exists(*source.labels, "label file");
        break;
    }
  }

  if (ef.methods.empty()) ef.methods = {ef.config.method};
  if (ef.seeds.empty()) ef.seeds = {ef.config.seed};
  if (ef.command != Command::Suite) {
    if (ef.methods.size() != 1) throw UsageError("this command takes exactly one --method");
    if (ef.seeds.size() != 1) throw UsageError("this command takes exactly one seed");
  }
  ef.config.method = ef.methods.front();
  ef.config.seed = ef.seeds.front();
  try {
    ef.config.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                   const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw UsageError(source + ":" + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": empty key");
    }
    out.emplace_back(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
  }
  return out;
}

DatasetSource parse_dataset_spec(const std::string& spec) {
  DatasetSource source;
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "blobs") {
    source.kind = SourceKind::Blobs;
  } else if (kind == "mnist") {
    source.kind = SourceKind::Mnist;
    source.path = rest;
  } else if (kind == "idx") {
    source.kind = SourceKind::Idx;
    const auto comma = rest.find(',');
    source.path = rest.substr(0, comma);
    if (comma != std::string::npos) source.labels = std::filesystem::path(rest.substr(comma + 1));
  } else if (kind == "csv" || kind == "tsv") {
    source.kind = SourceKind::Delimited;
    source.path = rest;
    if (kind == "tsv") source.delimited.delimiter = '\t';
  } else {
    throw UsageError("unknown dataset '" + spec + "' (expected blobs, mnist:DIR, idx:FILE, csv:FILE)");
  }
  return source;
}

Dataset load_dataset(const DatasetSource& source, std::uint64_t seed) {
  Dataset dataset;
  switch (source.kind) {
    case SourceKind::Blobs:
      dataset = make_blobs(source.blobs);
      break;
    case SourceKind::Idx:
      dataset = load_idx(source.path, source.labels);
      break;
    case SourceKind::Delimited:
      dataset = load_delimited(source.path, source.delimited);
      break;
    case SourceKind::Mnist: {
      std::vector<std::filesystem::path> image_files;
      for (const auto& entry : std::filesystem::directory_iterator(source.path)) {
        if (entry.path().filename().string().find("images-idx3-ubyte") != std::string::npos) {
          image_files.push_back(entry.path());
        }
      }
      std::sort(image_files.begin(), image_files.end());
      if (image_files.empty()) {
        throw IoError("no *images-idx3-ubyte files in " + source.path.string());
      }
      std::vector<Dataset> parts;
      for (const auto& images : image_files) {
        std::string name = images.filename().string();
        name.replace(name.find("images-idx3"), 11, "labels-idx1");
        const auto labels = images.parent_path() / name;
        parts.push_back(load_idx(images, std::filesystem::exists(labels)
                                             ? std::optional<std::filesystem::path>(labels)
                                             : std::nullopt));
      }
      dataset = concatenate(parts, "mnist");
      break;
    }
  }
  if (source.max_samples && *source.max_samples < dataset.size()) {
    dataset = subsample(dataset, *source.max_samples, seed);
  }
  return dataset;
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".json") {
    try {
      return nlohmann::json::parse(text).at("assignment").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  std::vector<int> labels;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    try {
      labels.push_back(parse_number<int>(path.string(), line));
    } catch (const UsageError&) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + " is not an integer label");
    }
  }
  return labels;
}

ExperimentFile parse_cli(int argc, const char* const* argv, std::string* help) {
  CLI::App app{"deepkm: deep K-means clustering experiments"};
  app.require_subcommand(1);
  Flags flags;

  auto* run = app.add_subcommand("run", "train and evaluate one method with one seed");
  auto* suite = app.add_subcommand("suite", "every method x seed, aggregated into suite.tsv");
  auto* eval = app.add_subcommand("eval", "ACC/NMI of a prediction file against ground truth");
  auto* project = app.add_subcommand("project", "run, then write a 2-D PCA projection of the latents");
  for (auto* sub : {run, suite, eval, project}) add_options(*sub, flags);
  eval->add_option("--pred", flags.pred, "predicted labels (text or run JSON)");
  eval->add_option("--truth", flags.truth, "ground-truth labels (text or run JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    if (help) *help = app.help();
    return {};
  } catch (const CLI::CallForAllHelp&) {
    if (help) *help = app.help("", CLI::AppFormatMode::All);
    return {};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  ExperimentFile ef;
  if (run->parsed()) ef.command = Command::Run;
  if (suite->parsed()) ef.command = Command::Suite;
  if (eval->parsed()) ef.command = Command::Eval;
  if (project->parsed()) ef.command = Command::Project;

  if (const char* env_out = std::getenv("DEEPKM_OUT"); env_out != nullptr && *env_out != '\0') {
    ef.out_dir = env_out;
  }
  if (flags.config) {
    for (const auto& [key, value] : parse_config_text(read_file(*flags.config), *flags.config)) {
      apply_setting(ef, key, value);
    }
  }
  apply_flags(ef, flags);
  validate(ef);
  return ef;
}

}  // namespace deepkm::cli
