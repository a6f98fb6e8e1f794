#pragma once

#include <Eigen/Core>

#include <vector>

#include "geospca/types.hpp"

namespace geospca {

struct GreedyResult {
  Support support;
  std::vector<double> variance_trace;  // explained variance after each added index
};

/// Greedy support builder: grows the support one index at a time, always
/// adding the index with the largest resulting explained variance. While the
/// support is smaller than `components`, the evaluation uses |support|+1
/// components. Ties break toward the lowest index.
GreedyResult greedy_support(const DataMatrix& X, int k, int components);

struct PcaResult {
  Eigen::MatrixXd basis;                // n x a orthonormal left basis
  Eigen::VectorXd eigenvalues;          // top-a, nonincreasing
  Eigen::VectorXd residual_col_sq_norms;  // per-column squared residual norms
  std::vector<double> explained_curve;  // cumulative explained variance, 1..a

  /// Sum of the `k` largest residual column norms: an upper bound on the
  /// residual of any optimal size-k support.
  double top_k_residual(int k) const;

  /// Materializes the residual matrix X - B B^T X.
  Eigen::MatrixXd residual_matrix(const DataMatrix& X) const;
};

/// Classic full-support PCA with `components` PCs, computed on the n x n left
/// Gram matrix (the p x p covariance is never formed). components may be 0,
/// in which case the residual is X itself.
PcaResult classic_pca(const DataMatrix& X, int components);

struct BruteForceResult {
  Support support;        // lexicographically smallest maximizer
  double value = 0.0;     // optimal explained variance
  double residual = 0.0;  // residual of the maximizer
};

/// Exhaustive maximization of the explained variance over all size-k
/// supports. Guarded: throws TooLargeError when C(p, k) exceeds 10^6.
BruteForceResult brute_force(const DataMatrix& X, int k, int components);

}  // namespace geospca
