#include "geospca/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geospca/linalg.hpp"

namespace geospca {

GreedyResult greedy_support(const DataMatrix& X, int k, int components) {
  if (k < 0 || k > X.cols()) throw std::invalid_argument("greedy_support: k out of range");
  if (components < 1 || components > X.rows()) {
    throw std::invalid_argument("greedy_support: components out of range");
  }

  GreedyResult out;
  std::vector<int> chosen;
  std::vector<char> in_support(static_cast<std::size_t>(X.cols()), 0);

  for (int step = 0; step < k; ++step) {
    const int a_eff = std::min(static_cast<int>(chosen.size()) + 1, components);
    int best_index = -1;
    double best_value = -1.0;
    for (int i = 0; i < X.cols(); ++i) {
      if (in_support[static_cast<std::size_t>(i)]) continue;
      std::vector<int> candidate = chosen;
      candidate.push_back(i);
      const double value = variance_objective(X, Support(candidate, X.cols()), a_eff);
      if (value > best_value) {  // strict: ties keep the lowest index
        best_value = value;
        best_index = i;
      }
    }
    chosen.push_back(best_index);
    std::sort(chosen.begin(), chosen.end());
    in_support[static_cast<std::size_t>(best_index)] = 1;
    out.variance_trace.push_back(best_value);
  }
  out.support = Support(std::move(chosen), X.cols());
  return out;
}

double PcaResult::top_k_residual(int k) const {
  std::vector<double> norms(residual_col_sq_norms.data(),
                            residual_col_sq_norms.data() + residual_col_sq_norms.size());
  k = std::min<int>(k, static_cast<int>(norms.size()));
  std::partial_sort(norms.begin(), norms.begin() + k, norms.end(), std::greater<>());
  return std::accumulate(norms.begin(), norms.begin() + k, 0.0);
}

Eigen::MatrixXd PcaResult::residual_matrix(const DataMatrix& X) const {
  if (basis.cols() == 0) return X.values();
  return X.values() - basis * (basis.transpose() * X.values());
}

PcaResult classic_pca(const DataMatrix& X, int components) {
  const int n = X.rows();
  if (components < 0 || components > std::min<int>(n, X.cols())) {
    throw std::invalid_argument("classic_pca: components out of range");
  }

  PcaResult out;
  if (components == 0) {
    out.basis = Eigen::MatrixXd::Zero(n, 0);
    out.eigenvalues = Eigen::VectorXd::Zero(0);
    out.residual_col_sq_norms = X.col_sq_norms();
    return out;
  }

  // Left Gram keeps memory at O(n^2 + n p); the p x p covariance is never
  // built.
  const Eigen::MatrixXd gram = X.values() * X.values().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  out.basis.resize(n, components);
  out.eigenvalues.resize(components);
  for (int j = 0; j < components; ++j) {
    out.eigenvalues[j] = std::max(solver.eigenvalues()[n - 1 - j], 0.0);
    out.basis.col(j) = solver.eigenvectors().col(n - 1 - j);
  }

  const Eigen::MatrixXd projected = out.basis.transpose() * X.values();  // a x p
  out.residual_col_sq_norms =
      (X.col_sq_norms() - projected.colwise().squaredNorm().transpose()).cwiseMax(0.0);

  out.explained_curve.resize(static_cast<std::size_t>(components));
  double cumulative = 0.0;
  for (int j = 0; j < components; ++j) {
    cumulative += out.eigenvalues[j];
    out.explained_curve[static_cast<std::size_t>(j)] = cumulative;
  }
  return out;
}

namespace {

// C(p, k) with an early bail-out above the guard.
double binomial_guarded(int p, int k, double guard) {
  double value = 1.0;
  for (int i = 1; i <= k; ++i) {
    value *= static_cast<double>(p - k + i) / static_cast<double>(i);
    if (value > guard) return guard + 1.0;
  }
  return value;
}

}  // namespace

BruteForceResult brute_force(const DataMatrix& X, int k, int components) {
  const int p = X.cols();
  if (k < 1 || k > p) throw std::invalid_argument("brute_force: k out of range");
  if (components < 1 || components > X.rows()) {
    throw std::invalid_argument("brute_force: components out of range");
  }
  constexpr double kGuard = 1e6;
  if (binomial_guarded(p, k, kGuard) > kGuard) {
    throw TooLargeError("brute_force: C(p, k) exceeds the enumeration guard");
  }

  std::vector<int> combo(static_cast<std::size_t>(k));
  std::iota(combo.begin(), combo.end(), 0);

  BruteForceResult best;
  best.value = -1.0;
  for (;;) {
    Support s(combo, p);
    const double value = variance_objective(X, s, components);
    if (value > best.value) {  // strict: enumeration is lexicographic
      best.value = value;
      best.support = s;
    }
    // next combination
    int i = k - 1;
    while (i >= 0 && combo[static_cast<std::size_t>(i)] == p - k + i) --i;
    if (i < 0) break;
    ++combo[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
      combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  best.residual = X.support_weight(best.support) - best.value;
  return best;
}

}  // namespace geospca
