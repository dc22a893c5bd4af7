#pragma once

#include <cstdint>
#include <vector>

#include "deepkm/common.hpp"

namespace deepkm {

/// K cluster representatives in R^l, one per row.
class Centroids {
 public:
  Centroids() = default;
  /// Throws ConfigError on zero rows or non-finite entries.
  explicit Centroids(Matrix centers);

  Index count() const { return centers_.rows(); }
  Index dim() const { return centers_.cols(); }
  const Matrix& matrix() const { return centers_; }
  auto row(Index k) const { return centers_.row(k); }

  /// Replaces the centers, preserving the invariants.
  void assign_matrix(Matrix centers);

  friend bool operator==(const Centroids& a, const Centroids& b) {
    return a.centers_.rows() == b.centers_.rows() && a.centers_.cols() == b.centers_.cols() &&
           a.centers_ == b.centers_;
  }

 private:
  Matrix centers_;
};

/// Hard cluster labels, each in [0, K).
struct Assignment {
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Squared L2 distances, (N x K).
Matrix squared_distances(const Matrix& points, const Matrix& centers);

/// Sum over points of squared distance to the center named by `assignment`.
double kmeans_objective(const Matrix& points, const Centroids& centroids,
                        const Assignment& assignment);

/// D^2-weighted seeding. Throws ConfigError when N < K.
Centroids kmeans_plus_plus_init(const Matrix& points, int k, std::uint64_t seed);

/// Nearest center by squared L2; ties go to the lowest index.
Assignment assign(const Matrix& points, const Centroids& centroids);

struct LloydStep {
  Centroids centroids;
  Assignment assignment;
  /// Objective of the new assignment against the centers passed in.
  double objective = 0.0;
  /// Number of empty clusters that were repaired.
  int repaired = 0;
};

/// One assign-then-average iteration. An empty cluster takes over the point
/// farthest from its current center.
LloydStep lloyd_step(const Matrix& points, const Centroids& centroids);

struct KMeansOptions {
  int k = 2;
  std::uint64_t seed = 0;
  int max_iters = 100;
  double tol = 1e-6;
  /// Independent k-means++ starts; the lowest final objective wins (earliest on ties).
  int n_init = 10;
};

struct KMeansResult {
  Centroids centroids;
  Assignment assignment;
  /// Objective of `assignment` against `centroids`.
  double objective = 0.0;
  int iterations = 0;
  /// Which of the n_init starts produced this result.
  int best_start = 0;
  /// Per-iteration values reported by lloyd_step.
  std::vector<double> objective_history;
};

KMeansResult kmeans(const Matrix& points, const KMeansOptions& options);

/// Runs Lloyd iterations from the given centers instead of k-means++.
KMeansResult kmeans_from(const Matrix& points, Centroids initial, int max_iters, double tol);

}  // namespace deepkm
