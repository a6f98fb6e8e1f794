#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "geospca/engine.hpp"
#include "geospca/master.hpp"
#include "geospca/types.hpp"

namespace geospca {

struct BlockEngineOptions {
  std::int64_t max_cuts = 10'000;
  double feasibility_tol = 1e-9;
  std::int64_t node_limit = 10'000'000;
};

struct BlockReport {
  std::vector<Support> supports;             // pairwise disjoint, one per block
  std::vector<Eigen::MatrixXd> loadings;     // p x a_i per block
  std::vector<double> psi;                   // weight sum per block
  std::vector<double> explained;             // explained variance per block
  std::vector<double> residual;              // residual per block
  std::vector<std::int64_t> cuts_per_block;
  double total_psi = 0.0;
  double total_f = 0.0;
  double residual_budget = 0.0;  // sum of the per-block thresholds
  Certificate certificate = Certificate::UpperBounded;
  double upper_bound = 0.0;
  StopReason stop_reason = StopReason::Converged;
  std::int64_t cuts_generated = 0;
};

/// Disjoint-block solve: repeatedly take the exact block master optimum and
/// cut, per block, every support whose residual exceeds that block's
/// threshold; stops when all blocks are within threshold. Throws
/// InfeasibleError when the thresholds exclude every assignment.
BlockReport solve_blocks(const DataMatrix& X, const BlockSpec& spec,
                         const BlockEngineOptions& options = {});

enum class ShapeFamily { Rectangle, Triangle, Octagon };

struct GridPatternSpec {
  int width = 0;
  int height = 0;
  ShapeFamily family = ShapeFamily::Rectangle;
  int min_size = 1;  // pattern size bounds, in pixels
  int max_size = 1;
};

/// Enumerates every in-grid placement of the shape family with a pixel count
/// inside [min_size, max_size]. Pixels are row-major indices. Identical index
/// sets are deduplicated. Throws EmptyPatternSetError when nothing fits.
///
/// Shape pixelations: a w x h rectangle covers its full box; a side-m
/// triangle is the lower-left half of the m x m box including the diagonal;
/// a side-m octagon (m >= 3) is the m x m box minus its four corner pixels.
PatternSet generate_patterns(const GridPatternSpec& spec);

/// Evaluates every pattern's residual at `components` PCs and marks patterns
/// admissible when the residual is within `eta_tau` (relative slack `tol`).
PatternSet prefilter_patterns(const DataMatrix& X, PatternSet pats, int components,
                              double eta_tau, double tol = 1e-9);

enum class StructuredBoundStatus {
  SumThreshold,  // disjoint selection: gap bounded by budget * eta_tau when
                 // eta_tau dominates the per-pattern optimal residuals
  Heuristic,     // overlapping selection: no residual bound on the union
};

struct StructuredReport {
  std::vector<int> selected;  // pattern indices, ascending
  Support covered;            // union of the selected patterns
  double psi = 0.0;           // master value: weight of the covered set
  double total_f = 0.0;       // explained variance of the selection
  double residual = 0.0;      // disjoint: sum over patterns; else of the union
  std::vector<Eigen::MatrixXd> loadings;  // per pattern (disjoint) or single
  StructuredBoundStatus bound_status = StructuredBoundStatus::Heuristic;
  double bound_value = 0.0;
};

/// Structured solve on a prefiltered catalog. Disjoint: one exact master call
/// selects at most `budget` admissible, pairwise-disjoint patterns, each
/// carrying its own group of `components` PCs. Overlapping: the union support
/// carries a single group of `components` PCs and the report is heuristic.
StructuredReport solve_structured(const DataMatrix& X, const PatternSet& pats, int components,
                                  int budget, double eta_tau, bool disjoint,
                                  const BlockEngineOptions& options = {});

/// Line-oriented catalog format: `# grid WxH` header, then one pattern per
/// line as space-separated ascending indices.
void write_pattern_catalog(std::ostream& out, const PatternSet& pats, int grid_width,
                           int grid_height);
PatternSet read_pattern_catalog(std::istream& in, int* grid_width = nullptr,
                                int* grid_height = nullptr);

}  // namespace geospca
