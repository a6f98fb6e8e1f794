#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "geospca/types.hpp"

namespace geospca {

/// No-good cut: forbids every support that contains `forbidden`. When `block`
/// is nonnegative the cut applies only to that block of a block master.
struct Cut {
  Support forbidden;
  int block = -1;
};

/// Append-only collection of cuts. Duplicate forbidden sets per block are
/// rejected (add() returns false).
class CutPool {
 public:
  bool add(Cut cut);

  std::size_t size() const { return cuts_.size(); }
  bool empty() const { return cuts_.empty(); }
  const std::vector<Cut>& cuts() const { return cuts_; }

  /// True when some cut scoped to `block` (or global) is contained in `s`.
  bool excludes(const Support& s, int block = -1) const;

  /// Fast path: true when `s` itself is a forbidden set of `block`.
  bool contains_exact(const Support& s, int block = -1) const;

 private:
  static std::string key(const Support& s, int block);

  std::vector<Cut> cuts_;
  std::unordered_set<std::string> exact_keys_;
  // Cuts strictly smaller than a candidate can exclude it without being equal
  // to it; kept separate so the equality fast path stays a hash lookup.
  std::vector<std::size_t> proper_cut_indices_;
  std::size_t max_forbidden_size_ = 0;
  std::size_t min_forbidden_size_ = std::numeric_limits<std::size_t>::max();

 public:
  std::size_t min_forbidden_size() const { return min_forbidden_size_; }
};

/// Shape of a disjoint-block problem: per-block cardinalities, component
/// counts and residual thresholds.
struct BlockSpec {
  std::vector<int> cardinalities;   // k_i, one per block
  std::vector<int> components;      // a_i
  std::vector<double> residuals;    // per-block threshold eta_i

  int block_count() const { return static_cast<int>(cardinalities.size()); }
  void validate(int ambient_dim) const;
};

/// Catalog of candidate index patterns with admissibility metadata.
struct PatternSet {
  std::vector<Support> patterns;
  int budget = 0;                    // max number of selected patterns
  bool disjoint = false;             // selected patterns must not overlap
  std::vector<char> admissible;      // per pattern; empty = all admissible
  std::vector<double> pattern_residual;  // filled by prefiltering

  bool pattern_admissible(std::size_t j) const {
    return admissible.empty() || admissible[j] != 0;
  }
};

struct MasterOptions {
  std::int64_t node_limit = 10'000'000;
  int max_ties = 32;
};

struct CommonMasterSolution {
  Support support;
  double value = 0.0;
};

/// Exact solver for the cardinality-k master: maximize the weight sum over
/// supports of size exactly k that contain no forbidden set of `pool`.
/// Returns nullopt when every k-subset is excluded. Ties are broken toward
/// the lexicographically smallest support.
std::optional<CommonMasterSolution> solve_common_master(const Eigen::VectorXd& weights, int k,
                                                        const CutPool& pool,
                                                        const MasterOptions& options = {});

struct BlockMasterSolution {
  std::vector<Support> supports;  // one per block, pairwise disjoint
  double value = 0.0;
};

/// Exact solver for the disjoint block master: disjoint supports of sizes
/// exactly k_i maximizing total weight, honoring per-block cuts. Blocks with
/// equal cardinality and identical cut sets are returned sorted by their
/// smallest index.
std::optional<BlockMasterSolution> solve_block_master(const Eigen::VectorXd& weights,
                                                      const BlockSpec& spec, const CutPool& pool,
                                                      const MasterOptions& options = {});

struct PatternMasterSolution {
  std::vector<int> selected;  // pattern indices, ascending
  Support covered;            // union of the selected patterns
  double value = 0.0;
};

/// Exact solver for the pattern-selection master: choose at most
/// `pats.budget` admissible patterns (pairwise disjoint when requested)
/// maximizing the weight of the covered index set. An empty selection is a
/// legal optimum when nothing is admissible.
std::optional<PatternMasterSolution> solve_pattern_master(const Eigen::VectorXd& weights,
                                                          const PatternSet& pats,
                                                          const MasterOptions& options = {});

/// Incremental enumerator behind solve_common_master. Keeps the best-first
/// generator alive across solves so that re-solving after appending one cut
/// costs one enumeration step instead of a restart. Candidates are emitted in
/// nonincreasing value order, lexicographic within ties.
class KSubsetEnumerator {
 public:
  KSubsetEnumerator(Eigen::VectorXd weights, int k, MasterOptions options = {});
  ~KSubsetEnumerator();
  KSubsetEnumerator(KSubsetEnumerator&&) noexcept;
  KSubsetEnumerator& operator=(KSubsetEnumerator&&) noexcept;

  /// Best feasible candidates under `pool`: the optimum plus any further
  /// value-ties, up to options.max_ties entries. Empty = infeasible.
  std::vector<CommonMasterSolution> best(const CutPool& pool, int block = -1);

  std::int64_t nodes_visited() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace geospca
