#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "geospca/baselines.hpp"
#include "geospca/engine.hpp"
#include "oracle.hpp"

using geospca::Certificate;
using geospca::CutPool;
using geospca::DataMatrix;
using geospca::EngineConfig;
using geospca::SolveReport;
using geospca::StopReason;
using geospca::Support;
using geospca::ThresholdStatus;

namespace {

DataMatrix tightness_fixture() {
  Eigen::MatrixXd X(2, 4);
  X << -0.25, 0.25, 1.0, 1.0,
        1.0,  1.0,  0.0, 0.0;
  return DataMatrix::uncentered(X);
}

// Exhaustive optimum over size-k supports via the test-side Jacobi route.
double oracle_optimum(const DataMatrix& X, int k, int a, std::vector<int>* argmax = nullptr) {
  double best = -1.0;
  for (const std::vector<int>& combo : oracle::k_subsets(X.cols(), k)) {
    const double value = oracle::explained_variance(X.values(), combo, a);
    if (value > best) {
      best = value;
      if (argmax) *argmax = combo;
    }
  }
  return best;
}

double oracle_residual(const DataMatrix& X, const std::vector<int>& support, int a) {
  double weight = 0.0;
  for (int i : support) weight += X.col_sq_norms()[i];
  return weight - oracle::explained_variance(X.values(), support, a);
}

}  // namespace

TEST_CASE("separate: zero-residual supports are always feasible") {
  std::mt19937_64 rng(3);
  Eigen::MatrixXd raw = oracle::randn(rng, 6, 2) * oracle::randn(rng, 2, 7);
  const DataMatrix X = DataMatrix::uncentered(raw);
  CHECK_FALSE(geospca::separate(X, Support({0, 3, 5}, 7), 2, 0.0).has_value());
  CHECK_FALSE(geospca::separate(X, Support({1, 2}, 7), 2, 1.0).has_value());
}

TEST_CASE("separate: fixture crosses feasibility at its residual") {
  const DataMatrix X = tightness_fixture();
  const Support s({0, 1}, 4);
  const auto cut = geospca::separate(X, s, 1, 0.1);
  REQUIRE(cut.has_value());
  CHECK(cut->forbidden == s);
  CHECK_FALSE(geospca::separate(X, s, 1, 0.2).has_value());
}

TEST_CASE("fixed threshold: a huge threshold accepts the top-k support") {
  std::mt19937_64 rng(5);
  const DataMatrix X = DataMatrix::uncentered(oracle::randn(rng, 5, 8));
  EngineConfig cfg;
  cfg.components = 2;
  cfg.cardinality = 3;
  const auto result =
      solve_fixed_threshold(X, cfg, X.squared_frobenius_norm(), CutPool{});
  CHECK(result.status == ThresholdStatus::Feasible);
  CHECK(result.cuts_added == 0);

  // Top-3 columns by squared norm.
  std::vector<int> order(8);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return X.col_sq_norms()[a] > X.col_sq_norms()[b]; });
  std::vector<int> top(order.begin(), order.begin() + 3);
  CHECK(result.support == Support(top, 8));
}

TEST_CASE("fixed threshold: fixture at a tight threshold cuts the parallel pair") {
  const DataMatrix X = tightness_fixture();
  EngineConfig cfg;
  cfg.components = 1;
  cfg.cardinality = 2;
  const auto result = solve_fixed_threshold(X, cfg, 0.01, CutPool{});
  CHECK(result.status == ThresholdStatus::Feasible);
  CHECK(result.support == Support({2, 3}, 4));
  CHECK(result.master_value == doctest::Approx(2.0));
  CHECK(result.pool.contains_exact(Support({0, 1}, 4)));
}

TEST_CASE("fixed threshold: infeasible when the pool already excludes everything") {
  const DataMatrix X = tightness_fixture();
  EngineConfig cfg;
  cfg.components = 1;
  cfg.cardinality = 2;
  CutPool pool;
  for (const auto& combo : oracle::k_subsets(4, 2)) pool.add(geospca::Cut{Support(combo, 4), -1});
  const auto result = solve_fixed_threshold(X, cfg, 1.0, pool);
  CHECK(result.status == ThresholdStatus::Infeasible);
}

TEST_CASE("adversarial instance: literal first row and column norms") {
  const DataMatrix X4 = geospca::exponential_cut_instance(4);
  CHECK(X4.values()(0, 0) == 1.0);
  CHECK(X4.values()(0, 1) == 1.0);
  CHECK(X4.values()(0, 2) == doctest::Approx(19.0 / 24.0));
  CHECK(X4.values()(0, 3) == doctest::Approx(19.0 / 24.0));

  const DataMatrix X5 = geospca::exponential_cut_instance(5);
  CHECK(X5.col_sq_norms()[0] == doctest::Approx(1.0));
  CHECK(X5.col_sq_norms()[1] == doctest::Approx(1.0));
  for (int j = 2; j < 5; ++j) CHECK(X5.col_sq_norms()[j] > 1.0);
  CHECK_FALSE(X5.is_centered());
  CHECK_THROWS_AS(geospca::exponential_cut_instance(3), std::invalid_argument);
}

TEST_CASE("adversarial instance: the identical pair is the unique optimum") {
  for (int p : {4, 5, 6, 8, 10}) {
    CAPTURE(p);
    const DataMatrix X = geospca::exponential_cut_instance(p);
    std::vector<int> argmax;
    const double best = oracle_optimum(X, 2, 1, &argmax);
    CHECK(best == doctest::Approx(2.0));
    CHECK(argmax == std::vector<int>{0, 1});
  }
}

TEST_CASE("adversarial instance: every other pair is cut before the optimum") {
  const DataMatrix X = geospca::exponential_cut_instance(8);
  EngineConfig cfg;
  cfg.components = 1;
  cfg.cardinality = 2;
  const auto result = solve_fixed_threshold(X, cfg, 1e-5, CutPool{});
  CHECK(result.status == ThresholdStatus::Feasible);
  CHECK(result.support == Support({0, 1}, 8));
  CHECK(result.cuts_added == 8 * 7 / 2 - 1);
}

TEST_CASE("solve: exact low-rank instance certifies immediately") {
  std::mt19937_64 rng(7);
  Eigen::MatrixXd raw = oracle::randn(rng, 8, 2) * oracle::randn(rng, 2, 10);
  const DataMatrix X = DataMatrix::uncentered(raw);
  EngineConfig cfg;
  cfg.components = 2;
  cfg.cardinality = 4;
  const SolveReport report = solve_common(X, cfg);
  CHECK(report.certificate == Certificate::Optimal);
  CHECK(report.cuts_generated == 0);
  CHECK(report.f_value == doctest::Approx(report.psi).epsilon(1e-9));
  CHECK(report.gap_ratio == 0.0);
  CHECK(report.apriori_bound == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("solve: fixture reaches the exact optimum and certifies it") {
  const DataMatrix X = tightness_fixture();
  EngineConfig cfg;
  cfg.components = 1;
  cfg.cardinality = 2;
  cfg.delta = 0.01;
  cfg.patience = 3;
  const SolveReport report = solve_common(X, cfg);
  CHECK(report.f_value == doctest::Approx(2.0));
  const bool expected_support =
      report.support == Support({0, 1}, 4) || report.support == Support({2, 3}, 4);
  CHECK(expected_support);
  CHECK(report.certificate == Certificate::Optimal);
  CHECK(report.f_value <= report.psi + 1e-12);
  CHECK(report.f_value ==
        doctest::Approx(report.psi - report.support_residual).epsilon(1e-9));
}

TEST_CASE("solve: trace thresholds decrease and master values are antitone") {
  std::mt19937_64 rng(19);
  const DataMatrix X = DataMatrix::uncentered(oracle::randn(rng, 6, 9));
  EngineConfig cfg;
  cfg.components = 2;
  cfg.cardinality = 3;
  cfg.patience = 8;
  int calls = 0;
  const SolveReport report =
      solve_common(X, cfg, [&](const geospca::Progress& p) { ++calls; CHECK(p.f <= p.psi + 1e-9); });
  CHECK(calls == static_cast<int>(report.trace.size()));
  for (std::size_t i = 0; i < report.trace.size(); ++i) {
    const auto& point = report.trace[i];
    // Accepted iterates satisfy the threshold they were solved under.
    CHECK(point.psi - point.f <=
          point.eta_threshold + 1e-9 * (std::max(point.eta_threshold, 0.0) + point.psi));
    if (i == 0) continue;
    CHECK(point.eta_threshold < report.trace[i - 1].eta_threshold);
    CHECK(point.psi <= report.trace[i - 1].psi + 1e-12);
    CHECK(point.cuts >= report.trace[i - 1].cuts);
  }
}

TEST_CASE("solve: cut budget stop yields an upper-bounded report") {
  const DataMatrix X = tightness_fixture();
  EngineConfig cfg;
  cfg.components = 1;
  cfg.cardinality = 2;
  cfg.eta0 = 0.01;  // nothing but {2,3} is feasible, so cuts accumulate
  cfg.max_cuts = 2;
  const SolveReport report = solve_common(X, cfg);
  CHECK(report.stop_reason == StopReason::CutBudget);
  CHECK(report.certificate == Certificate::UpperBounded);
  CHECK(report.cuts_generated == 2);
  CHECK(report.f_value <= report.upper_bound + 1e-12);
}

TEST_CASE("solve: matches the exhaustive oracle on small instances") {
  std::mt19937_64 rng(53);
  int optimal_hits = 0;
  const int rounds = 25;
  for (int round = 0; round < rounds; ++round) {
    const int n = 4 + static_cast<int>(rng() % 6);
    const int p = 5 + static_cast<int>(rng() % 6);
    const int k = 2 + static_cast<int>(rng() % 2);
    const int a = 1 + static_cast<int>(rng() % 2);
    const DataMatrix X = DataMatrix::uncentered(oracle::random_instance(rng, n, p));
    EngineConfig cfg;
    cfg.components = a;
    cfg.cardinality = k;
    const SolveReport report = solve_common(X, cfg);

    std::vector<int> argmax;
    const double best = oracle_optimum(X, k, a, &argmax);
    CHECK(report.f_value <= best * (1.0 + 1e-9) + 1e-12);
    if (report.certificate == Certificate::Optimal) {
      CHECK(report.f_value == doctest::Approx(best).epsilon(1e-7));
    }
    if (std::abs(report.f_value - best) <= 1e-7 * std::max(1.0, best)) ++optimal_hits;

    // The threshold bound: valid whenever eta_star dominates the residual of
    // the exact optimum.
    const double eta_opt = oracle_residual(X, argmax, a);
    if (report.eta_star >= eta_opt) {
      CHECK(best - report.f_value <= report.eta_star + 1e-9);
    }
  }
  CHECK(optimal_hits >= rounds - 1);
}

TEST_CASE("solve: small step reaches the exact optimum with infinite patience") {
  std::mt19937_64 rng(61);
  for (int round = 0; round < 8; ++round) {
    const int n = 4 + static_cast<int>(rng() % 4);
    const int p = 5 + static_cast<int>(rng() % 3);
    const int k = 2;
    const int a = 1 + static_cast<int>(rng() % 2);
    const DataMatrix X = DataMatrix::uncentered(oracle::random_instance(rng, n, p));

    // Smallest positive gap between support residuals.
    std::vector<double> residuals;
    for (const auto& combo : oracle::k_subsets(p, k)) {
      residuals.push_back(oracle_residual(X, combo, a));
    }
    std::sort(residuals.begin(), residuals.end());
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < residuals.size(); ++i) {
      const double gap = residuals[i] - residuals[i - 1];
      if (gap > 1e-9) min_gap = std::min(min_gap, gap);
    }
    if (!std::isfinite(min_gap)) continue;

    EngineConfig cfg;
    cfg.components = a;
    cfg.cardinality = k;
    cfg.delta = min_gap / 2.0;
    cfg.patience = 1'000'000;
    const SolveReport report = solve_common(X, cfg);
    const double best = oracle_optimum(X, k, a);
    CHECK(report.f_value == doctest::Approx(best).epsilon(1e-7));
  }
}

TEST_CASE("gap_bounds: mirrors the report and recomputes the a-priori bound") {
  const DataMatrix X = tightness_fixture();
  EngineConfig cfg;
  cfg.components = 1;
  cfg.cardinality = 2;
  const SolveReport report = solve_common(X, cfg);
  const auto bounds = gap_bounds(X, cfg, report);
  CHECK(bounds.eta_bound == report.eta_star);
  CHECK(bounds.apriori_bound == doctest::Approx(report.apriori_bound));
  CHECK(bounds.gap_ratio == report.gap_ratio);

  // Corollary-style check: the a-priori bound dominates the residual of the
  // exact optimum.
  std::vector<int> argmax;
  oracle_optimum(X, 2, 1, &argmax);
  CHECK(oracle_residual(X, argmax, 1) <= bounds.apriori_bound + 1e-9);
}

TEST_CASE("engine config validation") {
  const DataMatrix X = tightness_fixture();
  EngineConfig cfg;
  cfg.components = 0;
  CHECK_THROWS_AS(solve_common(X, cfg), std::invalid_argument);
  cfg.components = 1;
  cfg.cardinality = 5;
  CHECK_THROWS_AS(solve_common(X, cfg), std::invalid_argument);
  cfg.cardinality = 2;
  cfg.components = 3;  // exceeds row count
  CHECK_THROWS_AS(solve_common(X, cfg), std::invalid_argument);
}
