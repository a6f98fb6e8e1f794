#include <doctest.h>

#include <cmath>
#include <random>

#include "geospca/baselines.hpp"
#include "geospca/engine.hpp"
#include "geospca/linalg.hpp"
#include "oracle.hpp"

using geospca::DataMatrix;
using geospca::Support;

namespace {

DataMatrix tightness_fixture() {
  Eigen::MatrixXd X(2, 4);
  X << -0.25, 0.25, 1.0, 1.0,
        1.0,  1.0,  0.0, 0.0;
  return DataMatrix::uncentered(X);
}

}  // namespace

TEST_CASE("greedy: rank-1 data reduces to top norms") {
  std::mt19937_64 rng(5);
  Eigen::MatrixXd raw = oracle::randn(rng, 6, 1) * oracle::randn(rng, 1, 8);
  const DataMatrix X = DataMatrix::uncentered(raw);
  const auto greedy = greedy_support(X, 3, 1);

  std::vector<int> order(8);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return X.col_sq_norms()[a] > X.col_sq_norms()[b]; });
  std::vector<int> top(order.begin(), order.begin() + 3);
  CHECK(greedy.support == Support(top, 8));

  const auto oracle_result = geospca::brute_force(X, 3, 1);
  CHECK(geospca::variance_objective(X, greedy.support, 1) ==
        doctest::Approx(oracle_result.value).epsilon(1e-9));
}

TEST_CASE("greedy: k = 1 picks the largest column") {
  std::mt19937_64 rng(7);
  const DataMatrix X = DataMatrix::uncentered(oracle::randn(rng, 5, 7));
  const auto greedy = greedy_support(X, 1, 1);
  int argmax = 0;
  for (int i = 1; i < 7; ++i) {
    if (X.col_sq_norms()[i] > X.col_sq_norms()[argmax]) argmax = i;
  }
  CHECK(greedy.support == Support({argmax}, 7));
}

TEST_CASE("greedy: trace grows and stays below the exhaustive optimum") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 10; ++round) {
    const DataMatrix X = DataMatrix::uncentered(oracle::random_instance(rng, 8, 10));
    const auto greedy = greedy_support(X, 3, 2);
    REQUIRE(greedy.variance_trace.size() == 3);
    for (std::size_t i = 1; i < greedy.variance_trace.size(); ++i) {
      CHECK(greedy.variance_trace[i] >= greedy.variance_trace[i - 1] - 1e-10);
    }
    const auto oracle_result = geospca::brute_force(X, 3, 2);
    CHECK(geospca::variance_objective(X, greedy.support, 2) <=
          oracle_result.value * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("classic_pca: orthogonal columns, full component count") {
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(5, 3);
  raw(0, 0) = 2.0;
  raw(1, 1) = 1.5;
  raw(2, 2) = 1.0;
  const DataMatrix X = DataMatrix::uncentered(raw);
  const auto pca = classic_pca(X, 3);
  CHECK(pca.residual_col_sq_norms.maxCoeff() < 1e-10);
  CHECK(pca.explained_curve.back() ==
        doctest::Approx(X.squared_frobenius_norm()).epsilon(1e-10));
}

TEST_CASE("classic_pca: zero components leave the matrix as the residual") {
  const DataMatrix X = tightness_fixture();
  const auto pca = classic_pca(X, 0);
  CHECK(pca.residual_matrix(X) == X.values());
  CHECK(pca.residual_col_sq_norms == X.col_sq_norms());
}

TEST_CASE("classic_pca: residual energy matches the spectrum oracle") {
  std::mt19937_64 rng(13);
  for (int round = 0; round < 10; ++round) {
    const Eigen::MatrixXd raw = oracle::random_instance(rng, 6, 8);
    const DataMatrix X = DataMatrix::uncentered(raw);
    const auto pca = classic_pca(X, 2);
    const std::vector<double> spectrum = oracle::jacobi_eigenvalues(raw * raw.transpose());
    const double expected = X.squared_frobenius_norm() - spectrum[0] - spectrum[1];
    CHECK(pca.residual_col_sq_norms.sum() ==
          doctest::Approx(expected).epsilon(1e-9));
    CHECK(pca.residual_matrix(X).squaredNorm() == doctest::Approx(expected).epsilon(1e-9));

    // The curve grows with diminishing increments (eigenvalues nonincreasing).
    const auto full = classic_pca(X, 6);
    for (std::size_t j = 1; j < full.explained_curve.size(); ++j) {
      CHECK(full.explained_curve[j] >= full.explained_curve[j - 1] - 1e-12);
      if (j >= 2) {
        const double inc_prev = full.explained_curve[j - 1] - full.explained_curve[j - 2];
        const double inc = full.explained_curve[j] - full.explained_curve[j - 1];
        CHECK(inc <= inc_prev + 1e-9);
      }
    }
  }
}

TEST_CASE("brute_force: fixture optimum, lexicographic tie-break") {
  const DataMatrix X = tightness_fixture();
  const auto result = geospca::brute_force(X, 2, 1);
  CHECK(result.value == doctest::Approx(2.0));
  // {0,1} and {2,3} both reach 2.0; the lexicographically smaller one wins.
  CHECK(result.support == Support({0, 1}, 4));
  CHECK(result.residual == doctest::Approx(0.125));
}

TEST_CASE("brute_force: full support when k = p") {
  std::mt19937_64 rng(17);
  const DataMatrix X = DataMatrix::uncentered(oracle::randn(rng, 4, 5));
  const auto result = geospca::brute_force(X, 5, 2);
  CHECK(result.support == Support::full(5));
  CHECK(result.value ==
        doctest::Approx(geospca::variance_objective(X, Support::full(5), 2)));
}

TEST_CASE("brute_force: guard trips on huge enumerations") {
  std::mt19937_64 rng(19);
  const DataMatrix X = DataMatrix::uncentered(oracle::randn(rng, 3, 50));
  CHECK_THROWS_AS(geospca::brute_force(X, 10, 1), geospca::TooLargeError);
}

TEST_CASE("brute_force: value invariant under column permutation") {
  std::mt19937_64 rng(23);
  const Eigen::MatrixXd raw = oracle::random_instance(rng, 5, 7);
  const DataMatrix X = DataMatrix::uncentered(raw);
  const auto base = geospca::brute_force(X, 3, 2);

  std::vector<int> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd permuted(5, 7);
  for (int j = 0; j < 7; ++j) permuted.col(perm[static_cast<std::size_t>(j)]) = raw.col(j);
  const auto shuffled = geospca::brute_force(DataMatrix::uncentered(permuted), 3, 2);
  CHECK(shuffled.value == doctest::Approx(base.value).epsilon(1e-10));

  std::vector<int> mapped;
  for (int i : base.support.indices()) mapped.push_back(perm[static_cast<std::size_t>(i)]);
  CHECK(Support(mapped, 7) == shuffled.support);
}

TEST_CASE("brute_force: agrees with the Jacobi oracle") {
  std::mt19937_64 rng(29);
  for (int round = 0; round < 10; ++round) {
    const DataMatrix X = DataMatrix::uncentered(oracle::random_instance(rng, 6, 8));
    const auto mine = geospca::brute_force(X, 3, 2);
    double best = -1.0;
    for (const auto& combo : oracle::k_subsets(8, 3)) {
      best = std::max(best, oracle::explained_variance(X.values(), combo, 2));
    }
    CHECK(mine.value == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("dominance: greedy never beats the exhaustive optimum") {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 10; ++round) {
    const DataMatrix X = DataMatrix::uncentered(oracle::random_instance(rng, 6, 9));
    const auto greedy = greedy_support(X, 3, 2);
    const auto oracle_result = geospca::brute_force(X, 3, 2);
    CHECK(geospca::variance_objective(X, greedy.support, 2) <=
          oracle_result.value * (1.0 + 1e-9) + 1e-12);
  }
}
