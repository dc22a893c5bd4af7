#include "doctest.h"

#include <random>

#include "deepkm/metrics.hpp"
#include "oracles.hpp"

using namespace deepkm;

namespace {

std::vector<int> random_labels(std::size_t n, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> out(n);
  for (auto& v : out) v = pick(rng);
  return out;
}

}  // namespace

TEST_CASE("hungarian matches an exhaustive scan") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int n = 1; n <= 6; ++n) {
    for (int t = 0; t < 15; ++t) {
      Matrix cost(n, n);
      for (Index i = 0; i < cost.size(); ++i) cost.data()[i] = u(rng);
      const HungarianResult h = hungarian(cost);
      CHECK(h.cost == doctest::Approx(oracle::brute_force_assignment(cost)).epsilon(1e-12));
      // The reported cost is the cost of the reported permutation.
      double total = 0.0;
      std::vector<int> seen(static_cast<std::size_t>(n), 0);
      for (int r = 0; r < n; ++r) {
        total += cost(r, h.row_to_col[static_cast<std::size_t>(r)]);
        ++seen[static_cast<std::size_t>(h.row_to_col[static_cast<std::size_t>(r)])];
      }
      CHECK(total == doctest::Approx(h.cost).epsilon(1e-12));
      for (int s : seen) CHECK(s == 1);
    }
  }
}

TEST_CASE("hungarian small cases and errors") {
  Matrix anti(2, 2);
  anti << 1, 0, 0, 1;
  const HungarianResult h = hungarian(anti);
  CHECK(h.cost == 0.0);
  CHECK(h.row_to_col == std::vector<int>{1, 0});

  CHECK(hungarian(Matrix(0, 0)).row_to_col.empty());
  CHECK_THROWS_AS(hungarian(Matrix::Zero(2, 3)), InputError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(hungarian(bad), InputError);
}

TEST_CASE("accuracy") {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2};
  CHECK(accuracy(std::vector<int>{2, 2, 0, 0, 1, 1}, truth) == 1.0);
  CHECK(accuracy(std::vector<int>{0, 0, 0, 0, 0, 0}, truth) == doctest::Approx(1.0 / 3.0));
  // More predicted clusters than classes.
  CHECK(accuracy(std::vector<int>{0, 1, 2, 3, 4, 5}, truth) == doctest::Approx(0.5));

  std::mt19937_64 rng(32);
  for (int t = 0; t < 60; ++t) {
    const int kp = 1 + t % 5, kt = 1 + (t / 5) % 4;
    const auto pred = random_labels(25, kp, rng);
    const auto tru = random_labels(25, kt, rng);
    CHECK(std::abs(accuracy(pred, tru) - oracle::brute_force_accuracy(pred, tru)) <= 1e-12);
  }

  CHECK_THROWS_AS(accuracy(std::vector<int>{0, 1}, std::vector<int>{0}), InputError);
  CHECK_THROWS_AS(accuracy(std::vector<int>{}, std::vector<int>{}), InputError);
}

TEST_CASE("nmi") {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2};
  CHECK(nmi(std::vector<int>{5, 5, 3, 3, 9, 9}, truth) == 1.0);
  CHECK(nmi(std::vector<int>{0, 0, 0, 0, 0, 0}, truth) == 0.0);
  CHECK(nmi(std::vector<int>{4, 4, 4}, std::vector<int>{1, 1, 1}) == 1.0);
  // Independent partitions share no information.
  CHECK(nmi(std::vector<int>{0, 1, 0, 1}, std::vector<int>{0, 0, 1, 1}) == doctest::Approx(0.0));

  std::mt19937_64 rng(33);
  for (int t = 0; t < 60; ++t) {
    const auto a = random_labels(40, 2 + t % 5, rng);
    auto b = a;
    // Corrupt a fraction of b so it is correlated but not identical.
    for (std::size_t i = 0; i < b.size(); i += 3 + static_cast<std::size_t>(t % 4)) b[i] = (b[i] + 1) % 4;
    const double v = nmi(a, b);
    CHECK(std::abs(v - oracle::direct_nmi(a, b)) <= 1e-12);
    CHECK(std::abs(v - nmi(b, a)) <= 1e-12);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    // Renaming clusters changes nothing.
    auto renamed = a;
    for (auto& x : renamed) x = 10 - 3 * x;
    CHECK(std::abs(nmi(renamed, b) - v) <= 1e-12);
  }
}

TEST_CASE("evaluate reports a mapping consistent with accuracy") {
  const std::vector<int> pred{1, 1, 0, 0, 0};
  const std::vector<int> truth{0, 0, 1, 1, 0};
  const MetricsReport r = evaluate(pred, truth);
  CHECK(r.acc == doctest::Approx(0.8));
  CHECK(r.nmi == doctest::Approx(oracle::direct_nmi(pred, truth)).epsilon(1e-12));
  REQUIRE(r.mapping.size() == 2);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (auto [p, t] : r.mapping)
      if (p == pred[i] && t == truth[i]) ++hits;
  }
  CHECK(static_cast<double>(hits) / 5.0 == r.acc);
}

TEST_CASE("contingency table") {
  const auto t = contingency(std::vector<int>{3, 3, 7}, std::vector<int>{0, 1, 1});
  CHECK(t.pred_values == std::vector<int>{3, 7});
  CHECK(t.true_values == std::vector<int>{0, 1});
  CHECK(t.counts(0, 0) == 1);
  CHECK(t.counts(0, 1) == 1);
  CHECK(t.counts(1, 1) == 1);
  CHECK(t.total == 3);
}
