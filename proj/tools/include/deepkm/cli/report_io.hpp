#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deepkm/harness.hpp"
#include "json.hpp"

namespace deepkm::cli {

using Json = nlohmann::ordered_json;

Json config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const Json& json);

/// Field order is fixed; `include_timing = false` drops wall_clock_seconds.
Json report_to_json(const RunReport& report, bool include_timing = true);

/// "<method>_seed<seed>"
std::string run_stem(const RunReport& report);

std::string loss_tsv(const RunReport& report);
std::string suite_tsv(const std::vector<SuiteRow>& rows);

struct EmittedFiles {
  std::vector<std::filesystem::path> paths;
};

/// Writes <stem>.json and <stem>_losses.tsv for every run and, when rows are
/// given, suite.tsv. Creates the directory. Throws IoError when unwritable.
EmittedFiles emit_report(const std::vector<RunReport>& runs, const std::vector<SuiteRow>& rows,
                         const std::filesystem::path& out_dir);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace deepkm::cli
