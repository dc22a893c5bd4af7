#include "deepkm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace deepkm {
namespace {

void require_same_length(std::span<const int> pred, std::span<const int> truth, const char* where) {
  if (pred.size() != truth.size()) {
    throw InputError(std::string(where) + ": prediction has " + std::to_string(pred.size()) +
                     " labels, ground truth has " + std::to_string(truth.size()));
  }
}

std::vector<int> distinct(std::span<const int> values) {
  std::vector<int> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int index_of(const std::vector<int>& sorted, int value) {
  return static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), value) - sorted.begin());
}

// Optimal matching on the square-padded contingency table (maximizing hits).
std::pair<long long, std::vector<std::pair<int, int>>> best_matching(const ContingencyTable& table) {
  const Index rows = table.counts.rows();
  const Index cols = table.counts.cols();
  const Index n = std::max(rows, cols);
  Matrix cost = Matrix::Zero(n, n);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      cost(r, c) = -static_cast<double>(table.counts(r, c));
    }
  }
  const HungarianResult match = hungarian(cost);
  long long hits = 0;
  std::vector<std::pair<int, int>> mapping;
  for (Index r = 0; r < rows; ++r) {
    const int c = match.row_to_col[static_cast<std::size_t>(r)];
    if (c < cols) {
      hits += table.counts(r, c);
      mapping.emplace_back(table.pred_values[static_cast<std::size_t>(r)],
                           table.true_values[static_cast<std::size_t>(c)]);
    }
  }
  return {hits, std::move(mapping)};
}

double entropy(const Eigen::Matrix<long long, Eigen::Dynamic, 1>& counts, double total) {
  double h = 0.0;
  for (Index i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      const double p = static_cast<double>(counts[i]) / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

ContingencyTable contingency(std::span<const int> pred, std::span<const int> truth) {
  require_same_length(pred, truth, "contingency");
  ContingencyTable table;
  table.pred_values = distinct(pred);
  table.true_values = distinct(truth);
  table.counts = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(
      static_cast<Index>(table.pred_values.size()), static_cast<Index>(table.true_values.size()));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++table.counts(index_of(table.pred_values, pred[i]), index_of(table.true_values, truth[i]));
  }
  table.total = static_cast<long long>(pred.size());
  return table;
}

// Shortest augmenting path formulation with row/column potentials, O(n^3).
HungarianResult hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols()) {
    throw InputError("hungarian: cost matrix must be square");
  }
  if (!cost.allFinite()) {
    throw InputError("hungarian: cost matrix has non-finite entries");
  }
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> col_owner(n + 1, 0), way(n + 1, 0);

  for (int row = 1; row <= n; ++row) {
    col_owner[0] = row;
    int col = 0;
    std::vector<double> min_slack(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col] = 1;
      const int r = col_owner[col];
      double delta = inf;
      int next = 0;
      for (int c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double slack = cost(r - 1, c - 1) - u[r] - v[c];
        if (slack < min_slack[c]) {
          min_slack[c] = slack;
          way[c] = col;
        }
        if (min_slack[c] < delta) {
          delta = min_slack[c];
          next = c;
        }
      }
      for (int c = 0; c <= n; ++c) {
        if (used[c]) {
          u[col_owner[c]] += delta;
          v[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      col = next;
    } while (col_owner[col] != 0);
    do {
      const int prev = way[col];
      col_owner[col] = col_owner[prev];
      col = prev;
    } while (col != 0);
  }

  HungarianResult result;
  result.row_to_col.assign(static_cast<std::size_t>(n), -1);
  for (int c = 1; c <= n; ++c) {
    if (col_owner[c] != 0) result.row_to_col[static_cast<std::size_t>(col_owner[c] - 1)] = c - 1;
  }
  for (int r = 0; r < n; ++r) {
    result.cost += cost(r, result.row_to_col[static_cast<std::size_t>(r)]);
  }
  return result;
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  require_same_length(pred, truth, "accuracy");
  if (pred.empty()) {
    throw InputError("accuracy: no labels");
  }
  const auto [hits, mapping] = best_matching(contingency(pred, truth));
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
  require_same_length(pred, truth, "nmi");
  if (pred.empty()) {
    throw InputError("nmi: no labels");
  }
  const ContingencyTable table = contingency(pred, truth);
  const double total = static_cast<double>(table.total);
  const Eigen::Matrix<long long, Eigen::Dynamic, 1> row_counts = table.counts.rowwise().sum();
  const Eigen::Matrix<long long, Eigen::Dynamic, 1> col_counts =
      table.counts.colwise().sum().transpose();
  const double h_pred = entropy(row_counts, total);
  const double h_true = entropy(col_counts, total);

  double mutual = 0.0;
  for (Index r = 0; r < table.counts.rows(); ++r) {
    for (Index c = 0; c < table.counts.cols(); ++c) {
      const auto n_rc = table.counts(r, c);
      if (n_rc == 0) continue;
      const double p = static_cast<double>(n_rc) / total;
      mutual += p * std::log(static_cast<double>(n_rc) * total /
                             (static_cast<double>(row_counts[r]) * static_cast<double>(col_counts[c])));
    }
  }

  // Identical up to renaming: one non-empty cell per row and per column.
  if (table.counts.rows() == table.counts.cols() &&
      (table.counts.array() > 0).count() == table.counts.rows()) {
    return 1.0;
  }
  const double denom = h_pred + h_true;
  if (denom <= 0.0) {
    return 0.0;
  }
  return std::clamp(2.0 * mutual / denom, 0.0, 1.0);
}

MetricsReport evaluate(std::span<const int> pred, std::span<const int> truth) {
  require_same_length(pred, truth, "evaluate");
  if (pred.empty()) {
    throw InputError("evaluate: no labels");
  }
  MetricsReport report;
  auto [hits, mapping] = best_matching(contingency(pred, truth));
  report.acc = static_cast<double>(hits) / static_cast<double>(pred.size());
  report.nmi = nmi(pred, truth);
  report.mapping = std::move(mapping);
  return report;
}

}  // namespace deepkm
