#pragma once

#include <Eigen/Core>

#include "geospca/types.hpp"

namespace geospca {

/// Truncated spectral picture of the selected columns X(s).
///
/// `eigenvalues` are the `components` largest eigenvalues of X(s)^T X(s)
/// (equivalently of X(s) X(s)^T), nonincreasing, clamped at zero and padded
/// with zeros past the rank. `left_basis` holds matching orthonormal left
/// eigenvectors (n x a). The three scalars satisfy
/// total_variance = explained_variance + residual exactly.
struct SpectralSummary {
  int components = 0;
  Eigen::VectorXd eigenvalues;   // length = components
  Eigen::MatrixXd left_basis;    // n x components, orthonormal columns
  double explained_variance = 0.0;  // sum of the kept eigenvalues
  double total_variance = 0.0;      // ||X(s)||_F^2 from cached column norms
  double residual = 0.0;            // variance missed by the rank-a projection
};

/// Centers each column of `raw` to zero mean and caches column norms.
/// Throws NonFiniteInputError on NaN/Inf entries.
DataMatrix center(const Eigen::MatrixXd& raw);

/// Top-`components` symmetric eigendecomposition of the selected columns.
///
/// Works on the |s| x |s| Gram matrix when |s| <= n, otherwise on the n x n
/// left Gram matrix; the p x p covariance is never formed. Requires
/// 1 <= components <= n and |s| >= 1; eigenvalues past the rank are padded
/// with zeros and the basis is completed orthonormally.
SpectralSummary spectral_summary(const DataMatrix& X, const Support& s, int components);

/// Explained variance only (no eigenvectors); same contract as
/// spectral_summary().explained_variance but cheaper.
double variance_objective(const DataMatrix& X, const Support& s, int components);

/// Residual ||X(s) - U U^T X(s)||_F^2 without forming the basis.
double residual_variance(const DataMatrix& X, const Support& s, int components);

/// Sparse loading matrix W (p x a) with nonzero rows only on `s`, orthonormal
/// nonzero columns, and tr(W^T X^T X W) equal to the explained variance.
/// Columns whose eigenvalue is (numerically) zero are zero-padded.
Eigen::MatrixXd loadings_from_left_basis(const DataMatrix& X, const Support& s,
                                         const SpectralSummary& summary);

}  // namespace geospca
