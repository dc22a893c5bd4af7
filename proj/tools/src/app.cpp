#include "deepkm/cli/app.hpp"

#include <cstdio>
#include <ostream>

#include "deepkm/cli/experiment.hpp"
#include "deepkm/cli/projection.hpp"
#include "deepkm/cli/report_io.hpp"

namespace deepkm::cli {
namespace {

std::string format_scores(const RunReport& report) {
  char buffer[128];
  if (report.metrics) {
    std::snprintf(buffer, sizeof(buffer), "acc=%.4f nmi=%.4f (%.1fs)", report.metrics->acc,
                  report.metrics->nmi, report.wall_clock_seconds);
  } else {
    std::snprintf(buffer, sizeof(buffer), "no labels (%.1fs)", report.wall_clock_seconds);
  }
  return buffer;
}

int command_run(const ExperimentFile& ef, std::ostream& out, bool project) {
  const Dataset dataset = load_dataset(*ef.dataset, ef.config.seed);
  const RunReport report = run_method(dataset, ef.config);
  const auto files = emit_report({report}, {}, ef.out_dir);
  if (!ef.quiet) {
    out << method_name(report.config.method) << " seed=" << report.config.seed << ' '
        << format_scores(report) << '\n';
  }
  if (project) {
    const auto projection = project_2d(report.latents);
    std::optional<std::span<const int>> truth;
    if (dataset.labels) truth = std::span<const int>(*dataset.labels);
    const auto path = ef.out_dir / (run_stem(report) + "_projection.tsv");
    write_text(path, projection_tsv(projection, report.assignment.labels, truth));
    if (!ef.quiet) out << "wrote " << path.string() << '\n';
  }
  if (!ef.quiet) {
    for (const auto& path : files.paths) out << "wrote " << path.string() << '\n';
  }
  return 0;
}

int command_suite(const ExperimentFile& ef, std::ostream& out, std::ostream& err) {
  const Dataset dataset = load_dataset(*ef.dataset, 0);
  const SuiteResult suite = run_suite(dataset, ef.config, ef.seeds, ef.methods, [&](const RunReport& r) {
    if (!ef.quiet) {
      out << method_name(r.config.method) << " seed=" << r.config.seed << ' ' << format_scores(r) << '\n';
    }
  });
  emit_report(suite.runs, suite.rows, ef.out_dir);
  out << suite_tsv(suite.rows);
  if (!suite.failures.empty()) {
    err << suite.failures.size() << " run(s) failed:\n";
    for (const auto& f : suite.failures) {
      err << "  " << method_name(f.method) << " seed=" << f.seed << ": " << f.message << '\n';
    }
    return 1;
  }
  return 0;
}

int command_eval(const ExperimentFile& ef, std::ostream& out) {
  const std::vector<int> pred = read_labels(*ef.pred_path);
  std::vector<int> truth;
  if (ef.truth_path) {
    truth = read_labels(*ef.truth_path);
  } else {
    const Dataset dataset = load_dataset(*ef.dataset, ef.config.seed);
    if (!dataset.labels) throw UsageError("dataset has no labels to evaluate against");
    truth = *dataset.labels;
  }
  const MetricsReport metrics = evaluate(pred, truth);
  char buffer[96];
  std::snprintf(buffer, sizeof(buffer), "acc\t%.6f\nnmi\t%.6f\n", metrics.acc, metrics.nmi);
  out << buffer;
  return 0;
}

}  // namespace

int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  ExperimentFile ef;
  try {
    std::string help;
    ef = parse_cli(argc, argv, &help);
    if (!help.empty()) {
      out << help;
      return 0;
    }
  } catch (const Error& e) {
    err << "usage error: " << e.what() << "\n(run with --help for the option list)\n";
    return 2;
  }

  try {
    switch (ef.command) {
      case Command::Run: return command_run(ef, out, false);
      case Command::Project: return command_run(ef, out, true);
      case Command::Suite: return command_suite(ef, out, err);
      case Command::Eval: return command_eval(ef, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace deepkm::cli
