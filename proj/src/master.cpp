#include "geospca/master.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <numeric>
#include <queue>

namespace geospca {

// ---------------------------------------------------------------------------
// CutPool

std::string CutPool::key(const Support& s, int block) {
  std::string k;
  k.reserve(sizeof(int) * (s.indices().size() + 1));
  k.append(reinterpret_cast<const char*>(&block), sizeof(int));
  for (int i : s.indices()) k.append(reinterpret_cast<const char*>(&i), sizeof(int));
  return k;
}

bool CutPool::add(Cut cut) {
  if (cut.forbidden.empty()) {
    throw std::invalid_argument("CutPool: cut with empty forbidden set");
  }
  std::string k = key(cut.forbidden, cut.block);
  if (exact_keys_.contains(k)) return false;
  exact_keys_.insert(std::move(k));
  const std::size_t size = static_cast<std::size_t>(cut.forbidden.size());
  max_forbidden_size_ = std::max(max_forbidden_size_, size);
  min_forbidden_size_ = std::min(min_forbidden_size_, size);
  cuts_.push_back(std::move(cut));
  return true;
}

bool CutPool::contains_exact(const Support& s, int block) const {
  if (cuts_.empty()) return false;
  if (exact_keys_.contains(key(s, block))) return true;
  return block != -1 && exact_keys_.contains(key(s, -1));
}

bool CutPool::excludes(const Support& s, int block) const {
  if (cuts_.empty()) return false;
  if (contains_exact(s, block)) return true;
  if (min_forbidden_size_ >= static_cast<std::size_t>(s.size())) return false;
  for (const Cut& cut : cuts_) {
    if (cut.block != -1 && cut.block != block) continue;
    if (cut.forbidden.size() >= s.size()) continue;
    if (s.is_superset_of(cut.forbidden)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// BlockSpec

void BlockSpec::validate(int ambient_dim) const {
  const std::size_t b = cardinalities.size();
  if (b == 0) throw std::invalid_argument("BlockSpec: no blocks");
  if (components.size() != b || residuals.size() != b) {
    throw std::invalid_argument("BlockSpec: field lengths disagree");
  }
  int total = 0;
  for (std::size_t i = 0; i < b; ++i) {
    if (cardinalities[i] < 1) throw std::invalid_argument("BlockSpec: cardinality < 1");
    if (components[i] < 1) throw std::invalid_argument("BlockSpec: components < 1");
    if (residuals[i] < 0) throw std::invalid_argument("BlockSpec: negative residual threshold");
    total += cardinalities[i];
  }
  if (total > ambient_dim) {
    throw std::invalid_argument("BlockSpec: cardinalities exceed column count");
  }
}

// ---------------------------------------------------------------------------
// KSubsetEnumerator
//
// Best-first enumeration of all size-k position sets over columns sorted by
// nonincreasing weight. Each state is derived from its parent by shifting one
// position to the right; restricting shifts to positions at or below the
// parent's last-shifted position makes the enumeration duplicate free, so no
// visited set is needed. Equal-sum states are collected in batches and sorted
// lexicographically on the original column indices before emission.

struct KSubsetEnumerator::Impl {
  struct Node {
    double sum;
    std::int64_t parent;  // index into `expanded`, -1 for the root
    int moved_pos;        // position shifted relative to the parent
    int frontier;         // positions <= frontier may shift in children
  };

  struct HeapEntry {
    double sum;
    std::int64_t node;
    bool operator<(const HeapEntry& o) const {
      if (sum != o.sum) return sum < o.sum;
      return node > o.node;  // older nodes first within a batch pop
    }
  };

  struct Candidate {
    double value;
    std::vector<int> cols;  // original indices, ascending
  };

  Eigen::VectorXd weights;
  int k = 0;
  int m = 0;
  MasterOptions options;
  std::vector<int> order;         // column index by sorted rank
  std::vector<double> w_sorted;   // weight by sorted rank

  std::vector<Node> nodes;
  std::vector<std::vector<int>> expanded;  // positions of expanded nodes
  std::priority_queue<HeapEntry> heap;
  std::vector<Candidate> buffer;  // emission order: value desc, lex asc
  std::size_t head = 0;           // buffer prefix known to be excluded
  std::int64_t pops = 0;
  bool exhausted = false;

  static constexpr std::size_t kTieBatchCap = 4096;

  Impl(Eigen::VectorXd w, int k_, MasterOptions opt)
      : weights(std::move(w)), k(k_), m(static_cast<int>(weights.size())), options(opt) {
    if (k < 0 || k > m) {
      throw std::invalid_argument("k-subset enumerator: k out of range");
    }
    order.resize(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (weights[a] != weights[b]) return weights[a] > weights[b];
      return a < b;
    });
    w_sorted.resize(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) w_sorted[static_cast<std::size_t>(r)] = weights[order[r]];

    double root_sum = 0.0;
    for (int r = 0; r < k; ++r) root_sum += w_sorted[static_cast<std::size_t>(r)];
    nodes.push_back(Node{root_sum, -1, -1, k - 1});
    heap.push(HeapEntry{root_sum, 0});
  }

  std::vector<int> positions_of(std::int64_t id) const {
    const Node& node = nodes[static_cast<std::size_t>(id)];
    std::vector<int> pos;
    if (node.parent < 0) {
      pos.resize(static_cast<std::size_t>(k));
      std::iota(pos.begin(), pos.end(), 0);
    } else {
      pos = expanded[static_cast<std::size_t>(node.parent)];
      pos[static_cast<std::size_t>(node.moved_pos)] += 1;
    }
    return pos;
  }

  // Pops the whole equal-sum batch at the heap top, expands each state and
  // appends the batch to the buffer in lexicographic order.
  void emit_batch() {
    if (heap.empty()) {
      exhausted = true;
      return;
    }
    const double batch_sum = heap.top().sum;
    std::vector<std::pair<std::vector<int>, double>> batch;
    while (!heap.empty() && heap.top().sum == batch_sum && batch.size() < kTieBatchCap) {
      const std::int64_t id = heap.top().node;
      heap.pop();
      if (++pops > options.node_limit) {
        throw NodeLimitError("k-subset enumerator: node limit exceeded");
      }
      std::vector<int> pos = positions_of(id);
      const Node node = nodes[static_cast<std::size_t>(id)];

      const std::int64_t expanded_id = static_cast<std::int64_t>(expanded.size());
      expanded.push_back(pos);
      for (int q = 0; q <= node.frontier; ++q) {
        const int cur = pos[static_cast<std::size_t>(q)];
        const int limit = (q + 1 < k) ? pos[static_cast<std::size_t>(q + 1)] : m;
        if (cur + 1 >= limit) continue;
        const double child_sum = node.sum - w_sorted[static_cast<std::size_t>(cur)] +
                                 w_sorted[static_cast<std::size_t>(cur + 1)];
        nodes.push_back(Node{child_sum, expanded_id, q, q});
        heap.push(HeapEntry{child_sum, static_cast<std::int64_t>(nodes.size()) - 1});
      }

      std::vector<int> cols(static_cast<std::size_t>(k));
      for (int q = 0; q < k; ++q) {
        cols[static_cast<std::size_t>(q)] = order[static_cast<std::size_t>(pos[static_cast<std::size_t>(q)])];
      }
      std::sort(cols.begin(), cols.end());
      batch.emplace_back(std::move(cols), node.sum);
    }
    std::sort(batch.begin(), batch.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [cols, value] : batch) {
      buffer.push_back(Candidate{value, std::move(cols)});
    }
  }

  // Ensures buffer[i] exists; returns false when the enumeration is done.
  bool ensure(std::size_t i) {
    while (buffer.size() <= i && !exhausted) emit_batch();
    return i < buffer.size();
  }
};

KSubsetEnumerator::KSubsetEnumerator(Eigen::VectorXd weights, int k, MasterOptions options)
    : impl_(std::make_unique<Impl>(std::move(weights), k, options)) {}

KSubsetEnumerator::~KSubsetEnumerator() = default;
KSubsetEnumerator::KSubsetEnumerator(KSubsetEnumerator&&) noexcept = default;
KSubsetEnumerator& KSubsetEnumerator::operator=(KSubsetEnumerator&&) noexcept = default;

std::int64_t KSubsetEnumerator::nodes_visited() const { return impl_->pops; }

std::vector<CommonMasterSolution> KSubsetEnumerator::best(const CutPool& pool, int block) {
  Impl& im = *impl_;
  const int p = im.m;

  auto as_support = [&](const std::vector<int>& cols) { return Support(cols, p); };

  // Advance past the permanently excluded prefix. Pools only grow between
  // calls, so entries skipped here are never feasible again.
  std::size_t i = im.head;
  while (im.ensure(i) && pool.excludes(as_support(im.buffer[i].cols), block)) ++i;
  im.head = i;
  if (i >= im.buffer.size()) return {};

  const double best_value = im.buffer[i].value;
  std::vector<CommonMasterSolution> ties;
  ties.push_back(CommonMasterSolution{as_support(im.buffer[i].cols), best_value});
  ++i;
  while (static_cast<int>(ties.size()) < im.options.max_ties && im.ensure(i) &&
         im.buffer[i].value == best_value) {
    Support s = as_support(im.buffer[i].cols);
    if (!pool.excludes(s, block)) {
      ties.push_back(CommonMasterSolution{std::move(s), best_value});
    }
    ++i;
  }
  return ties;
}

std::optional<CommonMasterSolution> solve_common_master(const Eigen::VectorXd& weights, int k,
                                                        const CutPool& pool,
                                                        const MasterOptions& options) {
  if (k > weights.size()) {
    throw std::invalid_argument("solve_common_master: k exceeds column count");
  }
  MasterOptions single = options;
  single.max_ties = 1;
  KSubsetEnumerator enumerator(weights, k, single);
  std::vector<CommonMasterSolution> best = enumerator.best(pool);
  if (best.empty()) return std::nullopt;
  return std::move(best.front());
}

// ---------------------------------------------------------------------------
// Block master: depth-first branch and bound assigning columns in
// nonincreasing weight order to a block or to "unused", with a fractional
// greedy upper bound (fill all remaining capacity with the best remaining
// weights, ignoring cuts and disjointness).

namespace {

struct BlockSearch {
  const Eigen::VectorXd& weights;
  const BlockSpec& spec;
  const CutPool& pool;
  const MasterOptions& options;
  int p;
  int b;

  std::vector<int> order;        // columns, weight desc / index asc
  std::vector<double> suffix;    // suffix[i] = sum of w over order[i..]
  std::vector<double> w_by_pos;  // weight of order[i]

  // Cuts indexed by (block, column) so violation checks touch only the cuts
  // that contain the column being assigned.
  std::vector<std::vector<const Cut*>> cuts_by_block_col;

  std::vector<int> capacity;                // per block
  std::vector<std::vector<char>> chosen;    // per block membership mask
  std::vector<std::vector<int>> chosen_ix;  // per block chosen columns
  std::vector<int> symmetry_class;          // blocks; equal class => interchangeable

  double incumbent_value = -1.0;
  bool have_incumbent = false;
  std::vector<std::vector<int>> incumbent;
  std::int64_t visited = 0;

  BlockSearch(const Eigen::VectorXd& w, const BlockSpec& s, const CutPool& c,
              const MasterOptions& o)
      : weights(w), spec(s), pool(c), options(o), p(static_cast<int>(w.size())),
        b(s.block_count()) {
    order.resize(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      if (weights[x] != weights[y]) return weights[x] > weights[y];
      return x < y;
    });
    w_by_pos.resize(static_cast<std::size_t>(p));
    suffix.assign(static_cast<std::size_t>(p) + 1, 0.0);
    for (int i = p - 1; i >= 0; --i) {
      w_by_pos[static_cast<std::size_t>(i)] = weights[order[static_cast<std::size_t>(i)]];
      suffix[static_cast<std::size_t>(i)] =
          suffix[static_cast<std::size_t>(i) + 1] + w_by_pos[static_cast<std::size_t>(i)];
    }

    cuts_by_block_col.assign(static_cast<std::size_t>(b) * static_cast<std::size_t>(p), {});
    for (const Cut& cut : pool.cuts()) {
      for (int blk = 0; blk < b; ++blk) {
        if (cut.block != -1 && cut.block != blk) continue;
        for (int col : cut.forbidden.indices()) {
          cuts_by_block_col[static_cast<std::size_t>(blk) * static_cast<std::size_t>(p) +
                            static_cast<std::size_t>(col)]
              .push_back(&cut);
        }
      }
    }

    capacity = spec.cardinalities;
    chosen.assign(static_cast<std::size_t>(b), std::vector<char>(static_cast<std::size_t>(p), 0));
    chosen_ix.assign(static_cast<std::size_t>(b), {});

    // Interchangeability: equal cardinality and identical cut sets.
    std::map<std::pair<int, std::vector<const Cut*>>, int> classes;
    symmetry_class.resize(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i) {
      std::vector<const Cut*> sig;
      for (const Cut& cut : pool.cuts()) {
        if (cut.block == -1 || cut.block == i) sig.push_back(&cut);
      }
      auto key = std::make_pair(spec.cardinalities[static_cast<std::size_t>(i)], std::move(sig));
      auto [it, inserted] = classes.emplace(std::move(key), static_cast<int>(classes.size()));
      symmetry_class[static_cast<std::size_t>(i)] = it->second;
    }
  }

  bool violates_cut(int block, int col) const {
    for (const Cut* cut : cuts_by_block_col[static_cast<std::size_t>(block) *
                                                static_cast<std::size_t>(p) +
                                            static_cast<std::size_t>(col)]) {
      bool complete = true;
      for (int j : cut->forbidden.indices()) {
        if (j == col) continue;
        if (!chosen[static_cast<std::size_t>(block)][static_cast<std::size_t>(j)]) {
          complete = false;
          break;
        }
      }
      if (complete) return true;
    }
    return false;
  }

  void dfs(int pos, int remaining, double value) {
    if (++visited > options.node_limit) {
      throw NodeLimitError("solve_block_master: node limit exceeded");
    }
    if (remaining == 0) {
      if (!have_incumbent || value > incumbent_value) {
        have_incumbent = true;
        incumbent_value = value;
        incumbent = chosen_ix;
      }
      return;
    }
    if (p - pos < remaining) return;  // cannot fill all capacities
    const double bound = value + suffix[static_cast<std::size_t>(pos)] -
                         suffix[static_cast<std::size_t>(pos + remaining)];
    if (have_incumbent && bound <= incumbent_value) return;

    const int col = order[static_cast<std::size_t>(pos)];
    std::vector<char> class_seen(static_cast<std::size_t>(b), 0);
    for (int i = 0; i < b; ++i) {
      if (capacity[static_cast<std::size_t>(i)] == 0) continue;
      // Symmetry: among interchangeable empty blocks, only the first may
      // receive its first column.
      if (chosen_ix[static_cast<std::size_t>(i)].empty()) {
        const int cls = symmetry_class[static_cast<std::size_t>(i)];
        if (class_seen[static_cast<std::size_t>(cls)]) continue;
        class_seen[static_cast<std::size_t>(cls)] = 1;
      }
      if (violates_cut(i, col)) continue;
      capacity[static_cast<std::size_t>(i)]--;
      chosen[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] = 1;
      chosen_ix[static_cast<std::size_t>(i)].push_back(col);
      dfs(pos + 1, remaining - 1, value + weights[col]);
      chosen_ix[static_cast<std::size_t>(i)].pop_back();
      chosen[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] = 0;
      capacity[static_cast<std::size_t>(i)]++;
    }
    dfs(pos + 1, remaining, value);  // leave the column unused
  }
};

}  // namespace

std::optional<BlockMasterSolution> solve_block_master(const Eigen::VectorXd& weights,
                                                      const BlockSpec& spec, const CutPool& pool,
                                                      const MasterOptions& options) {
  spec.validate(static_cast<int>(weights.size()));
  BlockSearch search(weights, spec, pool, options);
  int total = 0;
  for (int k : spec.cardinalities) total += k;
  search.dfs(0, total, 0.0);
  if (!search.have_incumbent) return std::nullopt;

  BlockMasterSolution out;
  out.value = search.incumbent_value;
  out.supports.reserve(static_cast<std::size_t>(spec.block_count()));
  for (auto& ix : search.incumbent) {
    out.supports.emplace_back(ix, static_cast<int>(weights.size()));
  }
  // Canonical order inside each interchangeability class: smallest index
  // first. Swapping such blocks changes neither feasibility nor value.
  for (int cls = 0;; ++cls) {
    std::vector<int> members;
    for (int i = 0; i < spec.block_count(); ++i) {
      if (search.symmetry_class[static_cast<std::size_t>(i)] == cls) members.push_back(i);
    }
    if (members.empty()) break;
    std::vector<Support> sups;
    sups.reserve(members.size());
    for (int i : members) sups.push_back(out.supports[static_cast<std::size_t>(i)]);
    std::sort(sups.begin(), sups.end());
    for (std::size_t q = 0; q < members.size(); ++q) {
      out.supports[static_cast<std::size_t>(members[q])] = std::move(sups[q]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pattern master: branch and bound over patterns in nonincreasing weight-sum
// order; the bound fills the remaining budget with the largest remaining
// standalone pattern sums (overlaps ignored, hence an upper bound).

namespace {

struct PatternSearch {
  const Eigen::VectorXd& weights;
  const PatternSet& pats;
  const MasterOptions& options;
  int p;
  int budget;

  std::vector<int> order;    // admissible pattern indices, sum desc / index asc
  std::vector<double> sums;  // standalone sum per ordered pattern

  std::vector<char> covered;
  std::vector<int> selection;
  double value = 0.0;

  double incumbent_value = -1.0;
  bool have_incumbent = false;
  std::vector<int> incumbent;
  std::int64_t visited = 0;

  PatternSearch(const Eigen::VectorXd& w, const PatternSet& ps, const MasterOptions& o)
      : weights(w), pats(ps), options(o), p(static_cast<int>(w.size())), budget(ps.budget) {
    for (std::size_t j = 0; j < pats.patterns.size(); ++j) {
      if (pats.pattern_admissible(j)) order.push_back(static_cast<int>(j));
    }
    auto standalone = [&](int j) {
      double s = 0.0;
      for (int i : pats.patterns[static_cast<std::size_t>(j)].indices()) s += weights[i];
      return s;
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
      const double sa = standalone(a), sc = standalone(c);
      if (sa != sc) return sa > sc;
      return a < c;
    });
    sums.resize(order.size());
    for (std::size_t q = 0; q < order.size(); ++q) sums[q] = standalone(order[q]);
    covered.assign(static_cast<std::size_t>(p), 0);
  }

  double bound(std::size_t pos, int picked) const {
    double extra = 0.0;
    int room = budget - picked;
    for (std::size_t q = pos; q < order.size() && room > 0; ++q, --room) extra += sums[q];
    return value + extra;
  }

  void record() {
    if (!have_incumbent || value > incumbent_value) {
      have_incumbent = true;
      incumbent_value = value;
      incumbent = selection;
    }
  }

  void dfs(std::size_t pos, int picked) {
    if (++visited > options.node_limit) {
      throw NodeLimitError("solve_pattern_master: node limit exceeded");
    }
    if (pos == order.size() || picked == budget) {
      record();
      return;
    }
    if (have_incumbent && bound(pos, picked) <= incumbent_value) return;

    const int j = order[pos];
    const Support& pat = pats.patterns[static_cast<std::size_t>(j)];
    bool can_take = true;
    if (pats.disjoint) {
      for (int i : pat.indices()) {
        if (covered[static_cast<std::size_t>(i)]) {
          can_take = false;
          break;
        }
      }
    }
    if (can_take) {
      double gain = 0.0;
      std::vector<int> newly;
      for (int i : pat.indices()) {
        if (!covered[static_cast<std::size_t>(i)]) {
          covered[static_cast<std::size_t>(i)] = 1;
          newly.push_back(i);
          gain += weights[i];
        }
      }
      selection.push_back(j);
      value += gain;
      dfs(pos + 1, picked + 1);
      value -= gain;
      selection.pop_back();
      for (int i : newly) covered[static_cast<std::size_t>(i)] = 0;
    }
    dfs(pos + 1, picked);
  }
};

}  // namespace

std::optional<PatternMasterSolution> solve_pattern_master(const Eigen::VectorXd& weights,
                                                          const PatternSet& pats,
                                                          const MasterOptions& options) {
  if (pats.budget < 0) throw std::invalid_argument("solve_pattern_master: negative budget");
  if (!pats.admissible.empty() && pats.admissible.size() != pats.patterns.size()) {
    throw std::invalid_argument("solve_pattern_master: admissibility length mismatch");
  }
  for (const Support& pat : pats.patterns) {
    if (pat.empty()) throw std::invalid_argument("solve_pattern_master: empty pattern");
    if (pat.ambient_dim() > static_cast<int>(weights.size())) {
      throw std::invalid_argument("solve_pattern_master: pattern exceeds weight vector");
    }
  }

  PatternSearch search(weights, pats, options);
  if (search.budget == 0 || search.order.empty()) {
    PatternMasterSolution empty;
    empty.covered = Support({}, static_cast<int>(weights.size()));
    return empty;
  }
  search.dfs(0, 0);
  PatternMasterSolution out;
  out.value = search.have_incumbent ? search.incumbent_value : 0.0;
  std::vector<int> chosen = search.incumbent;
  std::sort(chosen.begin(), chosen.end());
  Support covered({}, static_cast<int>(weights.size()));
  for (int j : chosen) covered = covered.united_with(pats.patterns[static_cast<std::size_t>(j)]);
  out.selected = std::move(chosen);
  out.covered = std::move(covered);
  return out;
}

}  // namespace geospca
