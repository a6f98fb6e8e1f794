#include "geospca/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace geospca {

namespace {

// Relative eigenvalue floor below which a direction is treated as rank
// deficient when forming basis vectors.
constexpr double kRankTolerance = 1e-13;

void require_finite(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) {
    throw NonFiniteInputError("matrix contains NaN or infinite entries");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Support

Support::Support(std::vector<int> indices, int ambient_dim)
    : indices_(std::move(indices)), ambient_dim_(ambient_dim) {
  if (ambient_dim_ < 0) {
    throw std::invalid_argument("Support: negative ambient dimension");
  }
  std::sort(indices_.begin(), indices_.end());
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] < 0 || indices_[i] >= ambient_dim_) {
      throw std::invalid_argument("Support: index out of range");
    }
    if (i > 0 && indices_[i] == indices_[i - 1]) {
      throw std::invalid_argument("Support: duplicate index");
    }
  }
}

Support Support::full(int ambient_dim) {
  std::vector<int> all(static_cast<std::size_t>(ambient_dim));
  for (int i = 0; i < ambient_dim; ++i) all[static_cast<std::size_t>(i)] = i;
  return Support(std::move(all), ambient_dim);
}

bool Support::contains(int index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

bool Support::is_superset_of(const Support& other) const {
  return std::includes(indices_.begin(), indices_.end(), other.indices_.begin(),
                       other.indices_.end());
}

bool Support::intersects(const Support& other) const {
  auto a = indices_.begin();
  auto b = other.indices_.begin();
  while (a != indices_.end() && b != other.indices_.end()) {
    if (*a == *b) return true;
    if (*a < *b) {
      ++a;
    } else {
      ++b;
    }
  }
  return false;
}

Support Support::united_with(const Support& other) const {
  std::vector<int> merged;
  merged.reserve(indices_.size() + other.indices_.size());
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(),
                 other.indices_.end(), std::back_inserter(merged));
  return Support(std::move(merged), std::max(ambient_dim_, other.ambient_dim_));
}

// ---------------------------------------------------------------------------
// DataMatrix

DataMatrix::DataMatrix(Eigen::MatrixXd values, bool centered)
    : values_(std::move(values)), centered_(centered) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw std::invalid_argument("DataMatrix: empty matrix");
  }
  col_sq_norms_ = values_.colwise().squaredNorm();
}

DataMatrix DataMatrix::centered(Eigen::MatrixXd raw) {
  require_finite(raw);
  if (raw.rows() < 1 || raw.cols() < 1) {
    throw std::invalid_argument("DataMatrix: empty matrix");
  }
  const Eigen::RowVectorXd means = raw.colwise().mean();
  raw.rowwise() -= means;
  return DataMatrix(std::move(raw), true);
}

DataMatrix DataMatrix::uncentered(Eigen::MatrixXd raw) {
  require_finite(raw);
  return DataMatrix(std::move(raw), false);
}

double DataMatrix::support_weight(const Support& s) const {
  double total = 0.0;
  for (int i : s.indices()) total += col_sq_norms_[i];
  return total;
}

Eigen::MatrixXd DataMatrix::submatrix(const Support& s) const {
  Eigen::MatrixXd sub(values_.rows(), s.size());
  int col = 0;
  for (int i : s.indices()) sub.col(col++) = values_.col(i);
  return sub;
}

// ---------------------------------------------------------------------------
// Spectral kernel

DataMatrix center(const Eigen::MatrixXd& raw) { return DataMatrix::centered(raw); }

namespace {

// Descending eigenvalues of a symmetric PSD matrix, clamped at zero.
Eigen::VectorXd psd_eigenvalues_desc(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = solver.eigenvalues().reverse();
  return ev.cwiseMax(0.0);
}

// Extends `basis` (n x a, first `filled` columns orthonormal) with
// deterministic orthonormal completion columns: for each missing column, the
// standard basis vector with the largest residual against the current span.
void complete_orthonormal(Eigen::MatrixXd& basis, int filled) {
  const int n = static_cast<int>(basis.rows());
  const int a = static_cast<int>(basis.cols());
  for (int j = filled; j < a; ++j) {
    Eigen::VectorXd best;
    double best_norm = 0.0;
    for (int seed = 0; seed < n; ++seed) {
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, seed);
      for (int q = 0; q < j; ++q) v -= basis.col(q).dot(v) * basis.col(q);
      const double norm = v.norm();
      if (norm > best_norm + 1e-12) {
        best_norm = norm;
        best = std::move(v);
      }
    }
    if (best_norm <= 0.0) {
      throw std::logic_error("orthonormal completion exhausted basis seeds");
    }
    basis.col(j) = best / best_norm;
  }
}

}  // namespace

SpectralSummary spectral_summary(const DataMatrix& X, const Support& s, int components) {
  if (components < 1) {
    throw std::invalid_argument("spectral_summary: components must be >= 1");
  }
  if (s.empty()) {
    throw EmptySupportError("spectral_summary: empty support");
  }
  const int n = X.rows();
  if (components > n) {
    throw std::invalid_argument("spectral_summary: components exceed row count");
  }
  const int m = s.size();

  SpectralSummary out;
  out.components = components;
  out.total_variance = X.support_weight(s);
  out.eigenvalues = Eigen::VectorXd::Zero(components);
  out.left_basis = Eigen::MatrixXd::Zero(n, components);

  const Eigen::MatrixXd sub = X.submatrix(s);
  if (m <= n) {
    // Right Gram route: |s| x |s| eigenproblem, left vectors via X(s) v / s.
    const Eigen::MatrixXd gram = sub.transpose() * sub;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    const Eigen::VectorXd ev = solver.eigenvalues().reverse().cwiseMax(0.0);
    const int kept = std::min(components, m);
    out.eigenvalues.head(kept) = ev.head(kept);
    const double floor = kRankTolerance * std::max(ev[0], 0.0);
    int filled = 0;
    for (int j = 0; j < kept; ++j) {
      if (ev[j] <= floor) break;
      Eigen::VectorXd u = sub * solver.eigenvectors().col(m - 1 - j);
      const double norm = u.norm();
      if (norm <= 0.0) break;
      u /= norm;
      // One re-orthogonalization pass keeps near-degenerate columns clean.
      for (int q = 0; q < filled; ++q) u -= out.left_basis.col(q).dot(u) * out.left_basis.col(q);
      const double n2 = u.norm();
      if (n2 <= 0.5) break;
      out.left_basis.col(filled++) = u / n2;
    }
    complete_orthonormal(out.left_basis, filled);
  } else {
    // Left Gram route: n x n eigenproblem, eigenvectors are the left basis.
    const Eigen::MatrixXd gram = sub * sub.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    const Eigen::VectorXd ev = solver.eigenvalues().reverse().cwiseMax(0.0);
    out.eigenvalues = ev.head(components);
    for (int j = 0; j < components; ++j) {
      out.left_basis.col(j) = solver.eigenvectors().col(n - 1 - j);
    }
  }

  double explained = out.eigenvalues.sum();
  // The kept eigenvalues can exceed tr(Gram) only through roundoff; clamping
  // keeps total = explained + residual an exact identity with residual >= 0.
  explained = std::min(explained, out.total_variance);
  out.explained_variance = explained;
  out.residual = out.total_variance - explained;
  return out;
}

double variance_objective(const DataMatrix& X, const Support& s, int components) {
  if (components < 1) {
    throw std::invalid_argument("variance_objective: components must be >= 1");
  }
  if (s.empty()) {
    throw EmptySupportError("variance_objective: empty support");
  }
  if (components > X.rows()) {
    throw std::invalid_argument("variance_objective: components exceed row count");
  }
  const int n = X.rows();
  const int m = s.size();
  const Eigen::MatrixXd sub = X.submatrix(s);
  const Eigen::MatrixXd gram =
      (m <= n) ? Eigen::MatrixXd(sub.transpose() * sub) : Eigen::MatrixXd(sub * sub.transpose());
  const Eigen::VectorXd ev = psd_eigenvalues_desc(gram);
  const int kept = std::min<int>(components, static_cast<int>(ev.size()));
  const double explained = ev.head(kept).sum();
  return std::min(explained, X.support_weight(s));
}

double residual_variance(const DataMatrix& X, const Support& s, int components) {
  return X.support_weight(s) - variance_objective(X, s, components);
}

Eigen::MatrixXd loadings_from_left_basis(const DataMatrix& X, const Support& s,
                                         const SpectralSummary& summary) {
  const int p = X.cols();
  const int a = summary.components;
  const int m = s.size();
  Eigen::MatrixXd loadings = Eigen::MatrixXd::Zero(p, a);
  if (m == 0) return loadings;

  const Eigen::MatrixXd sub = X.submatrix(s);
  const double floor =
      kRankTolerance * std::max(summary.eigenvalues.size() > 0 ? summary.eigenvalues[0] : 0.0, 0.0);

  Eigen::MatrixXd right = Eigen::MatrixXd::Zero(m, a);
  int filled = 0;
  for (int j = 0; j < a; ++j) {
    if (summary.eigenvalues[j] <= floor) break;
    Eigen::VectorXd v = sub.transpose() * summary.left_basis.col(j);
    const double norm = v.norm();
    if (norm <= 0.0) break;
    v /= norm;
    for (int q = 0; q < filled; ++q) v -= right.col(q).dot(v) * right.col(q);
    const double n2 = v.norm();
    if (n2 <= 0.5) break;
    right.col(filled++) = v / n2;
  }

  for (int j = 0; j < filled; ++j) {
    int row = 0;
    for (int i : s.indices()) loadings(i, j) = right(row++, j);
  }
  return loadings;
}

}  // namespace geospca
