#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <optional>
#include <string>
#include <vector>

#include "deepkm/data.hpp"
#include "deepkm/harness.hpp"

namespace deepkm::cli {

/// Bad command line or config file. Maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Command { Run, Suite, Eval, Project };

enum class SourceKind { Blobs, Mnist, Idx, Delimited };

struct DatasetSource {
  SourceKind kind = SourceKind::Blobs;
  /// IDX directory for Mnist, image file for Idx, table for Delimited.
  std::filesystem::path path;
  std::optional<std::filesystem::path> labels;
  DelimitedOptions delimited;
  BlobsOptions blobs;
  /// Keep a seeded random subset of this many rows.
  std::optional<Index> max_samples;
};

struct ExperimentFile {
  Command command = Command::Run;
  std::optional<DatasetSource> dataset;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  TrainConfig config;
  std::filesystem::path out_dir = "results";
  /// eval: predicted and ground-truth label files.
  std::optional<std::filesystem::path> pred_path;
  std::optional<std::filesystem::path> truth_path;
  bool quiet = false;
};

/// Flat "key = value" text with optional [section] headers; '#' and ';'
/// start comments. Keys are returned as "section.key" (or "key" before any
/// section), in file order. Throws UsageError with the line number on
/// malformed lines.
std::vector<std::pair<std::string, std::string>> parse_config_text(
    const std::string& text, const std::string& source = "<config>");

/// Parses argv (argv[0] is the program name). Precedence, lowest first:
/// built-in defaults, DEEPKM_OUT, --config file, command-line flags.
/// `help` is set (and nothing validated) when --help was requested.
ExperimentFile parse_cli(int argc, const char* const* argv, std::string* help = nullptr);

/// Parses a dataset spec such as "blobs", "mnist:DIR", "idx:IMAGES[,LABELS]", "csv:PATH".
DatasetSource parse_dataset_spec(const std::string& spec);

Dataset load_dataset(const DatasetSource& source, std::uint64_t seed);

/// Reads one integer label per line, or the "assignment" array of a run JSON file.
std::vector<int> read_labels(const std::filesystem::path& path);

}  // namespace deepkm::cli
