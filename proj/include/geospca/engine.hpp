#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "geospca/linalg.hpp"
#include "geospca/master.hpp"
#include "geospca/types.hpp"

namespace geospca {

struct EngineConfig {
  int components = 1;   // PCs sharing the support
  int cardinality = 1;  // support size k
  double eta0 = 0.0;    // initial residual threshold; <= 0 means ||X||_F^2
  double delta = 0.0;   // schedule decrement; <= 0 means 1e-6 * ||X||_F^2
  int patience = 25;    // stop after this many non-improving outer iterations
  std::int64_t max_cuts = 10'000;
  double feasibility_tol = 1e-9;  // relative slack in residual comparisons
  std::int64_t node_limit = 10'000'000;
  int max_ties = 32;  // master ties examined when choosing the iterate

  double resolved_eta0(const DataMatrix& X) const;
  double resolved_delta(const DataMatrix& X) const;
  void validate(const DataMatrix& X) const;
};

/// Separation oracle: feasible when the rank-a residual of X(s) is within the
/// threshold (relative slack `tol`), otherwise the no-good cut forbidding s.
std::optional<Cut> separate(const DataMatrix& X, const Support& s, int components, double eta,
                            double tol = 1e-9);

enum class ThresholdStatus {
  Feasible,    // support meets the residual threshold
  Infeasible,  // every size-k support is excluded by the pool
  CutBudget,   // the pool hit max_cuts before a feasible support appeared
};

struct ThresholdResult {
  ThresholdStatus status = ThresholdStatus::Infeasible;
  Support support;             // meaningful for Feasible
  double master_value = 0.0;   // weight sum of `support`
  double support_residual = 0.0;
  CutPool pool;                // input pool extended with the new cuts
  std::int64_t cuts_added = 0;
};

/// Cut-generation loop at a fixed threshold: repeatedly take the master
/// optimum, cut it while its residual exceeds `eta`, and return the first
/// feasible support. Cuts carried in `pool` are reused and the enlarged pool
/// is returned. When the master optimum is tied, the tie with the smallest
/// residual is preferred (first max_ties ties examined).
ThresholdResult solve_fixed_threshold(const DataMatrix& X, const EngineConfig& cfg, double eta,
                                      CutPool pool);

enum class Certificate { Optimal, UpperBounded };
enum class StopReason { Converged, Exhausted, CutBudget };

struct TracePoint {
  int t = 0;
  double eta_threshold = 0.0;
  double psi = 0.0;  // master objective of the iterate
  double f = 0.0;    // true explained variance of the iterate
  std::int64_t cuts = 0;
};

struct RuntimeBreakdown {
  double total_ms = 0.0;
  double master_ms = 0.0;
  double eigen_ms = 0.0;
};

struct SolveReport {
  Support support;
  Eigen::MatrixXd loadings;     // p x a
  double psi = 0.0;             // weight sum at the incumbent
  double f_value = 0.0;         // explained variance at the incumbent
  double support_residual = 0.0;  // residual of the incumbent; psi - f_value
  double eta_star = 0.0;        // threshold that produced the incumbent
  std::vector<TracePoint> trace;
  std::int64_t cuts_generated = 0;
  Certificate certificate = Certificate::UpperBounded;
  double upper_bound = 0.0;     // valid upper bound on the exact optimum
  double apriori_bound = 0.0;   // top-k residual column norms of classic PCA
  double gap_ratio = 0.0;       // eta_star / f_value, 0 when Optimal
  StopReason stop_reason = StopReason::Converged;
  RuntimeBreakdown runtime;
};

struct Progress {
  int t = 0;
  double eta_threshold = 0.0;
  double psi = 0.0;
  double f = 0.0;
  std::int64_t cuts = 0;
};
using ProgressCallback = std::function<void(const Progress&)>;

/// Full solve: runs the decreasing threshold schedule, reusing cuts across
/// iterations, keeps the best iterate, and certifies it by comparing against
/// the final master value under all generated cuts.
SolveReport solve_common(const DataMatrix& X, const EngineConfig& cfg,
                         const ProgressCallback& progress = {});

struct GapBounds {
  double eta_bound = 0.0;      // threshold bound attached to the incumbent
  double apriori_bound = 0.0;  // sum of the k largest residual column norms
  double gap_ratio = 0.0;
};

/// Bounds on the optimality gap of a finished solve; the a-priori part only
/// needs classic PCA and is valid before any solve.
GapBounds gap_bounds(const DataMatrix& X, const EngineConfig& cfg, const SolveReport& report);

/// Adversarial instance on p = n columns for which the cut loop at a tiny
/// threshold with k = 2, a = 1 must cut every column pair except the optimal
/// one: columns 0 and 1 are identical unit vectors while every other column
/// has norm greater than 1 and is pairwise independent. Used as-is, without
/// centering.
DataMatrix exponential_cut_instance(int p);

}  // namespace geospca
