#pragma once

#include <span>
#include <vector>

#include "deepkm/common.hpp"

namespace deepkm {

/// Counts of (predicted cluster, true label) pairs. Label values are
/// compacted: rows follow the sorted distinct predicted labels, columns the
/// sorted distinct true labels.
struct ContingencyTable {
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> counts;
  std::vector<int> pred_values;
  std::vector<int> true_values;
  long long total = 0;
};

ContingencyTable contingency(std::span<const int> pred, std::span<const int> truth);

struct HungarianResult {
  /// column assigned to each row
  std::vector<int> row_to_col;
  double cost = 0.0;
};

/// Minimum-cost perfect matching on a square matrix. Throws InputError on
/// non-square input or non-finite entries.
HungarianResult hungarian(const Matrix& cost);

struct MetricsReport {
  double acc = 0.0;
  double nmi = 0.0;
  /// (predicted label, true label) pairs of the optimal one-to-one matching.
  std::vector<std::pair<int, int>> mapping;
};

/// Best fraction of agreements over one-to-one cluster-to-label maps.
double accuracy(std::span<const int> pred, std::span<const int> truth);

/// 2 I(C;Y) / (H(C) + H(Y)), natural log; 0/0 is taken as 0 except that two
/// identical (up to renaming) partitions score 1.
double nmi(std::span<const int> pred, std::span<const int> truth);

MetricsReport evaluate(std::span<const int> pred, std::span<const int> truth);

}  // namespace deepkm
