#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "deepkm/clustering.hpp"
#include "oracles.hpp"

using namespace deepkm;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix m(static_cast<Index>(values.size()), static_cast<Index>(values.begin()->size()));
  Index r = 0;
  for (const auto& row : values) {
    Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

}  // namespace

TEST_CASE("centroid invariants") {
  CHECK_THROWS_AS(Centroids(Matrix(0, 2)), ConfigError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Centroids{bad}, NumericError);
}

TEST_CASE("kmeans++ seeding") {
  const Matrix points = rows({{0, 0}, {1, 0}, {5, 5}, {6, 5}});
  SUBCASE("N == K picks every point once") {
    const Centroids c = kmeans_plus_plus_init(points, 4, 3);
    std::multiset<std::pair<double, double>> chosen, expected;
    for (Index k = 0; k < 4; ++k) chosen.insert({c.row(k)(0), c.row(k)(1)});
    for (Index k = 0; k < 4; ++k) expected.insert({points(k, 0), points(k, 1)});
    CHECK(chosen == expected);
  }
  SUBCASE("deterministic per seed") {
    CHECK(kmeans_plus_plus_init(points, 2, 9) == kmeans_plus_plus_init(points, 2, 9));
  }
  SUBCASE("N < K") { CHECK_THROWS_AS(kmeans_plus_plus_init(points, 5, 1), ConfigError); }
  SUBCASE("duplicates still yield distinct indices") {
    const Matrix same = Matrix::Ones(3, 2);
    CHECK(kmeans_plus_plus_init(same, 3, 1).count() == 3);
  }
  SUBCASE("two separated pairs end with one center per pair after one Lloyd step") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const LloydStep step = lloyd_step(points, kmeans_plus_plus_init(points, 2, seed));
      const auto& l = step.assignment.labels;
      CHECK(l[0] == l[1]);
      CHECK(l[2] == l[3]);
      CHECK(l[0] != l[2]);
    }
  }
}

TEST_CASE("assign") {
  const Centroids c(rows({{0, 0}, {2, 0}, {10, 10}}));
  CHECK(assign(rows({{10, 10}}), c).labels[0] == 2);
  CHECK(assign(rows({{1, 0}}), c).labels[0] == 0);  // tie -> lowest index
  CHECK_THROWS_AS(assign(Matrix::Zero(1, 3), c), ShapeError);

  std::mt19937_64 rng(5);
  const Matrix pts = oracle::random_matrix(20, 3, rng);
  const Centroids c3(oracle::random_matrix(3, 3, rng));
  const Assignment a = assign(pts, c3);
  for (Index i = 0; i < 20; ++i) {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
      if ((pts.row(i) - c3.row(k)).squaredNorm() < (pts.row(i) - c3.row(best)).squaredNorm()) best = k;
    }
    CHECK(a.labels[static_cast<std::size_t>(i)] == best);
  }
}

TEST_CASE("lloyd_step") {
  SUBCASE("fixed point") {
    const Matrix pts = rows({{0, 0}, {0, 2}, {10, 0}, {10, 2}});
    const Centroids c(rows({{0, 1}, {10, 1}}));
    CHECK(lloyd_step(pts, c).centroids == c);
  }
  SUBCASE("1-D two points") {
    const LloydStep s = lloyd_step(rows({{0}, {2}}), Centroids(rows({{0}})));
    CHECK(s.centroids.row(0)(0) == 1.0);
    // Objective against the old center 0: 0 + 4.
    CHECK(s.objective == 4.0);
    CHECK(kmeans_objective(rows({{0}, {2}}), s.centroids, s.assignment) == 2.0);
  }
  SUBCASE("empty cluster takes the farthest point") {
    const Matrix pts = rows({{0}, {1}, {9}});
    const LloydStep s = lloyd_step(pts, Centroids(rows({{0}, {100}})));
    CHECK(s.repaired == 1);
    CHECK(s.assignment.labels == std::vector<int>{0, 0, 1});
    CHECK(s.centroids.row(1)(0) == 9.0);
    CHECK(s.centroids.row(0)(0) == 0.5);
  }
}

TEST_CASE("kmeans reaches the exhaustive optimum on small instances") {
  std::mt19937_64 rng(17);
  int optimal = 0;
  const int trials = 30;
  for (int t = 0; t < trials; ++t) {
    const Matrix pts = oracle::random_matrix(6, 2, rng);
    const KMeansResult r = kmeans(pts, {2, static_cast<std::uint64_t>(t), 100, 1e-9});
    const double best = oracle::best_partition_cost(pts, 2);
    // More starts never do worse than the first one alone.
    CHECK(r.objective <= kmeans(pts, {2, static_cast<std::uint64_t>(t), 100, 1e-9, 1}).objective);
    CHECK(r.objective >= best - 1e-9);
    if (std::abs(r.objective - best) <= 1e-9) ++optimal;
  }
  CHECK(optimal >= trials * 9 / 10);

  // Two blobs of six points each.
  Matrix blobs(12, 2);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (Index i = 0; i < 12; ++i) {
    blobs(i, 0) = (i < 6 ? -5.0 : 5.0) + noise(rng);
    blobs(i, 1) = noise(rng);
  }
  const KMeansResult r = kmeans(blobs, {2, 1, 100, 1e-9});
  CHECK(r.objective == doctest::Approx(oracle::best_partition_cost(blobs, 2)).epsilon(1e-12));
}

TEST_CASE("kmeans invariants") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 10; ++t) {
    const Matrix pts = oracle::random_matrix(40, 3, rng);
    const int k = 2 + t % 3;
    const KMeansResult r = kmeans(pts, {k, static_cast<std::uint64_t>(t), 100, 1e-12});

    for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
      CHECK(r.objective_history[i] <= r.objective_history[i - 1] + 1e-9);
    }
    // Each center is the mean of its cluster.
    for (int c = 0; c < k; ++c) {
      RowVector sum = RowVector::Zero(3);
      int count = 0;
      for (Index i = 0; i < pts.rows(); ++i) {
        if (r.assignment.labels[static_cast<std::size_t>(i)] == c) {
          sum += pts.row(i);
          ++count;
        }
      }
      REQUIRE(count > 0);
      CHECK((sum / count - r.centroids.row(c)).cwiseAbs().maxCoeff() <= 1e-9);
    }
    // No single relabel lowers the objective.
    for (Index i = 0; i < pts.rows(); ++i) {
      const int own = r.assignment.labels[static_cast<std::size_t>(i)];
      for (int c = 0; c < k; ++c) {
        CHECK((pts.row(i) - r.centroids.row(own)).squaredNorm() <=
              (pts.row(i) - r.centroids.row(c)).squaredNorm());
      }
    }
  }
}

TEST_CASE("kmeans K=1, determinism, errors") {
  const Matrix pts = rows({{1, 2}, {3, 4}, {5, 0}});
  const KMeansResult r = kmeans(pts, {1, 4, 100, 1e-6});
  CHECK((r.centroids.row(0) - pts.colwise().mean()).cwiseAbs().maxCoeff() < 1e-15);
  // One Lloyd step reaches the mean; a second confirms the shift is zero.
  CHECK(r.iterations <= 2);

  std::mt19937_64 rng(1);
  const Matrix many = oracle::random_matrix(50, 4, rng);
  const auto a = kmeans(many, {3, 11, 100, 1e-6});
  const auto b = kmeans(many, {3, 11, 100, 1e-6});
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignment == b.assignment);

  CHECK_THROWS_AS(kmeans(pts, {4, 0, 100, 1e-6}), ConfigError);
  CHECK_THROWS_AS(kmeans(pts, {2, 0, 100, 1e-6, 0}), ConfigError);
}

TEST_CASE("permuting points permutes labels and keeps centers") {
  std::mt19937_64 rng(77);
  Matrix pts(30, 2);
  std::normal_distribution<double> noise(0.0, 0.2);
  for (Index i = 0; i < 30; ++i) {
    pts(i, 0) = 4.0 * static_cast<double>(i % 3) + noise(rng);
    pts(i, 1) = noise(rng);
  }
  std::vector<Index> perm(30);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix shuffled(30, 2);
  for (Index i = 0; i < 30; ++i) shuffled.row(i) = pts.row(perm[static_cast<std::size_t>(i)]);

  // Same starting centers for both orderings.
  const Centroids init(rows({{0, 0}, {4, 0}, {8, 0}}));
  const auto a = kmeans_from(pts, init, 100, 1e-12);
  const auto b = kmeans_from(shuffled, init, 100, 1e-12);
  CHECK((a.centroids.matrix() - b.centroids.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  for (Index i = 0; i < 30; ++i) {
    CHECK(b.assignment.labels[static_cast<std::size_t>(i)] ==
          a.assignment.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
  }
}
