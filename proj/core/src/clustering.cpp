#include "deepkm/clustering.hpp"

#include <limits>
#include <random>
#include <string>

namespace deepkm {
namespace {

void require_same_dim(const Matrix& points, const Centroids& centroids, const char* where) {
  if (points.cols() != centroids.dim()) {
    throw ShapeError(std::string(where) + ": points have dim " + std::to_string(points.cols()) +
                     ", centroids have dim " + std::to_string(centroids.dim()));
  }
}

}  // namespace

Centroids::Centroids(Matrix centers) { assign_matrix(std::move(centers)); }

void Centroids::assign_matrix(Matrix centers) {
  if (centers.rows() < 1 || centers.cols() < 1) {
    throw ConfigError("centroids need at least one center of positive dimension");
  }
  if (!centers.allFinite()) {
    throw NumericError("centroids contain non-finite entries");
  }
  centers_ = std::move(centers);
}

Matrix squared_distances(const Matrix& points, const Matrix& centers) {
  if (points.cols() != centers.cols()) {
    throw ShapeError("squared_distances: dimension mismatch");
  }
  Matrix d(points.rows(), centers.rows());
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index k = 0; k < centers.rows(); ++k) {
      d(i, k) = (points.row(i) - centers.row(k)).squaredNorm();
    }
  }
  return d;
}

double kmeans_objective(const Matrix& points, const Centroids& centroids,
                        const Assignment& assignment) {
  require_same_dim(points, centroids, "kmeans_objective");
  if (assignment.size() != static_cast<std::size_t>(points.rows())) {
    throw ShapeError("kmeans_objective: assignment length differs from point count");
  }
  double total = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    const int k = assignment.labels[i];
    if (k < 0 || k >= centroids.count()) {
      throw InputError("label " + std::to_string(k) + " out of range");
    }
    total += (points.row(i) - centroids.row(k)).squaredNorm();
  }
  return total;
}

Centroids kmeans_plus_plus_init(const Matrix& points, int k, std::uint64_t seed) {
  const Index n = points.rows();
  if (k < 1) {
    throw ConfigError("K must be positive");
  }
  if (n < k) {
    throw ConfigError("cannot pick " + std::to_string(k) + " centers from " + std::to_string(n) +
                      " points");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Index> chosen;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  auto take = [&](Index idx) {
    chosen.push_back(idx);
    taken[static_cast<std::size_t>(idx)] = 1;
  };
  take(std::uniform_int_distribution<Index>(0, n - 1)(rng));

  Eigen::VectorXd nearest(n);
  for (Index i = 0; i < n; ++i) {
    nearest[i] = (points.row(i) - points.row(chosen[0])).squaredNorm();
  }

  while (static_cast<int>(chosen.size()) < k) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (!taken[static_cast<std::size_t>(i)]) total += nearest[i];
    }
    Index pick = -1;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double running = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)] || nearest[i] <= 0.0) continue;
        running += nearest[i];
        pick = i;
        if (running > target) break;
      }
    } else {
      // Every remaining point duplicates a chosen center; fall back to uniform.
      std::vector<Index> free;
      for (Index i = 0; i < n; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) free.push_back(i);
      }
      pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
    }
    take(pick);
    for (Index i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (points.row(i) - points.row(pick)).squaredNorm());
    }
  }

  Matrix centers(k, points.cols());
  for (int c = 0; c < k; ++c) {
    centers.row(c) = points.row(chosen[static_cast<std::size_t>(c)]);
  }
  return Centroids(std::move(centers));
}

Assignment assign(const Matrix& points, const Centroids& centroids) {
  require_same_dim(points, centroids, "assign");
  Assignment out;
  out.labels.resize(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (Index k = 0; k < centroids.count(); ++k) {
      const double d = (points.row(i) - centroids.row(k)).squaredNorm();
      if (d < best) {
        best = d;
        best_k = static_cast<int>(k);
      }
    }
    out.labels[static_cast<std::size_t>(i)] = best_k;
  }
  return out;
}

LloydStep lloyd_step(const Matrix& points, const Centroids& centroids) {
  require_same_dim(points, centroids, "lloyd_step");
  const Index n = points.rows();
  const Index k_count = centroids.count();

  LloydStep step;
  step.assignment = assign(points, centroids);
  auto& labels = step.assignment.labels;

  Eigen::VectorXd own_distance(n);
  for (Index i = 0; i < n; ++i) {
    own_distance[i] = (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  step.objective = own_distance.sum();

  std::vector<Index> sizes(static_cast<std::size_t>(k_count), 0);
  for (int label : labels) ++sizes[static_cast<std::size_t>(label)];

  for (Index k = 0; k < k_count; ++k) {
    if (sizes[static_cast<std::size_t>(k)] > 0) continue;
    // Farthest point (lowest index on ties) among clusters that can spare one.
    Index donor = -1;
    double worst = -1.0;
    for (Index i = 0; i < n; ++i) {
      const auto from = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      if (sizes[from] > 1 && own_distance[i] > worst) {
        worst = own_distance[i];
        donor = i;
      }
    }
    if (donor < 0) break;  // only possible when N < K
    --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(donor)])];
    labels[static_cast<std::size_t>(donor)] = static_cast<int>(k);
    ++sizes[static_cast<std::size_t>(k)];
    own_distance[donor] = 0.0;
    ++step.repaired;
  }

  Matrix sums = Matrix::Zero(k_count, points.cols());
  for (Index i = 0; i < n; ++i) {
    sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
  }
  for (Index k = 0; k < k_count; ++k) {
    const auto size = sizes[static_cast<std::size_t>(k)];
    if (size > 0) {
      sums.row(k) /= static_cast<double>(size);
    } else {
      sums.row(k) = centroids.row(k);
    }
  }
  step.centroids = Centroids(std::move(sums));
  return step;
}

KMeansResult kmeans_from(const Matrix& points, Centroids initial, int max_iters, double tol) {
  require_same_dim(points, initial, "kmeans");
  if (max_iters < 1) {
    throw ConfigError("max_iters must be positive");
  }
  KMeansResult result;
  Centroids current = std::move(initial);
  for (int it = 0; it < max_iters; ++it) {
    LloydStep step = lloyd_step(points, current);
    result.objective_history.push_back(step.objective);
    double shift = 0.0;
    for (Index k = 0; k < current.count(); ++k) {
      shift = std::max(shift, (step.centroids.row(k) - current.row(k)).norm());
    }
    current = std::move(step.centroids);
    result.iterations = it + 1;
    if (shift < tol) break;
  }
  result.assignment = assign(points, current);
  result.objective = kmeans_objective(points, current, result.assignment);
  result.centroids = std::move(current);
  return result;
}

KMeansResult kmeans(const Matrix& points, const KMeansOptions& options) {
  if (options.k < 1 || points.rows() < options.k) {
    throw ConfigError("kmeans needs 1 <= K <= N (K=" + std::to_string(options.k) +
                      ", N=" + std::to_string(points.rows()) + ")");
  }
  if (options.n_init < 1) {
    throw ConfigError("kmeans n_init must be positive");
  }
  KMeansResult best;
  for (int start = 0; start < options.n_init; ++start) {
    // Start 0 uses the caller's seed as is; later starts derive their own.
    const std::uint64_t seed =
        start == 0 ? options.seed : options.seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(start));
    KMeansResult result = kmeans_from(points, kmeans_plus_plus_init(points, options.k, seed),
                                      options.max_iters, options.tol);
    if (start == 0 || result.objective < best.objective) {
      result.best_start = start;
      best = std::move(result);
    }
  }
  return best;
}

}  // namespace deepkm
