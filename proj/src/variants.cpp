#include "geospca/variants.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "geospca/linalg.hpp"

namespace geospca {

BlockReport solve_blocks(const DataMatrix& X, const BlockSpec& spec,
                         const BlockEngineOptions& options) {
  spec.validate(X.cols());
  const int b = spec.block_count();
  for (int a : spec.components) {
    if (a > X.rows()) throw std::invalid_argument("solve_blocks: components exceed row count");
  }

  MasterOptions master_options;
  master_options.node_limit = options.node_limit;

  CutPool pool;
  BlockReport report;
  report.stop_reason = StopReason::Converged;

  std::vector<Support> supports;
  std::vector<double> residuals(static_cast<std::size_t>(b), 0.0);
  double master_value = 0.0;

  for (;;) {
    std::optional<BlockMasterSolution> sol =
        solve_block_master(X.col_sq_norms(), spec, pool, master_options);
    if (!sol.has_value()) {
      throw InfeasibleError("solve_blocks: thresholds exclude every assignment");
    }
    supports = std::move(sol->supports);
    master_value = sol->value;

    int violations = 0;
    for (int l = 0; l < b; ++l) {
      const Support& s = supports[static_cast<std::size_t>(l)];
      const double r = residual_variance(X, s, spec.components[static_cast<std::size_t>(l)]);
      residuals[static_cast<std::size_t>(l)] = r;
      const double threshold = spec.residuals[static_cast<std::size_t>(l)];
      const double slack =
          options.feasibility_tol * (std::max(threshold, 0.0) + X.support_weight(s));
      if (r > threshold + slack) {
        pool.add(Cut{s, l});
        ++violations;
      }
    }
    if (violations == 0) break;
    if (static_cast<std::int64_t>(pool.size()) > options.max_cuts) {
      report.stop_reason = StopReason::CutBudget;
      break;
    }
  }

  report.supports = supports;
  report.cuts_generated = static_cast<std::int64_t>(pool.size());
  report.cuts_per_block.assign(static_cast<std::size_t>(b), 0);
  for (const Cut& cut : pool.cuts()) {
    if (cut.block >= 0) report.cuts_per_block[static_cast<std::size_t>(cut.block)]++;
  }

  report.total_psi = master_value;
  for (int l = 0; l < b; ++l) {
    const Support& s = supports[static_cast<std::size_t>(l)];
    const int a = spec.components[static_cast<std::size_t>(l)];
    const SpectralSummary summary = spectral_summary(X, s, a);
    report.supports[static_cast<std::size_t>(l)] = s;
    report.loadings.push_back(loadings_from_left_basis(X, s, summary));
    report.psi.push_back(summary.total_variance);
    report.explained.push_back(summary.explained_variance);
    report.residual.push_back(summary.residual);
    report.total_f += summary.explained_variance;
    report.residual_budget += spec.residuals[static_cast<std::size_t>(l)];
  }

  if (report.stop_reason == StopReason::CutBudget) {
    report.certificate = Certificate::UpperBounded;
    report.upper_bound = master_value;
  } else if (report.residual_budget == 0.0) {
    // Zero thresholds: the master optimum equals the explained variance.
    report.certificate = Certificate::Optimal;
    report.upper_bound = report.total_f;
  } else {
    // Conditional bound: valid whenever each threshold dominates the residual
    // of the corresponding optimal block.
    report.certificate = Certificate::UpperBounded;
    report.upper_bound = report.total_f + report.residual_budget;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Pattern generation

namespace {

std::vector<std::vector<int>> shape_offsets(ShapeFamily family, int min_size, int max_size,
                                            int max_side) {
  std::vector<std::vector<int>> shapes;  // (row, col) pairs flattened as row*side+col
  auto add_shape = [&](const std::vector<std::pair<int, int>>& pixels) {
    std::vector<int> flat;
    flat.reserve(pixels.size() * 2);
    for (auto [r, c] : pixels) {
      flat.push_back(r);
      flat.push_back(c);
    }
    shapes.push_back(std::move(flat));
  };

  switch (family) {
    case ShapeFamily::Rectangle:
      for (int h = 1; h <= max_side; ++h) {
        for (int w = 1; w <= max_side; ++w) {
          const int size = w * h;
          if (size < min_size || size > max_size) continue;
          std::vector<std::pair<int, int>> pixels;
          for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) pixels.emplace_back(r, c);
          add_shape(pixels);
        }
      }
      break;
    case ShapeFamily::Triangle:
      for (int side = 1; side <= max_side; ++side) {
        const int size = side * (side + 1) / 2;
        if (size < min_size || size > max_size) continue;
        std::vector<std::pair<int, int>> pixels;
        for (int r = 0; r < side; ++r)
          for (int c = 0; c <= r; ++c) pixels.emplace_back(r, c);
        add_shape(pixels);
      }
      break;
    case ShapeFamily::Octagon:
      for (int side = 3; side <= max_side; ++side) {
        const int size = side * side - 4;
        if (size < min_size || size > max_size) continue;
        std::vector<std::pair<int, int>> pixels;
        for (int r = 0; r < side; ++r) {
          for (int c = 0; c < side; ++c) {
            const bool corner = (r == 0 || r == side - 1) && (c == 0 || c == side - 1);
            if (!corner) pixels.emplace_back(r, c);
          }
        }
        add_shape(pixels);
      }
      break;
  }
  return shapes;
}

}  // namespace

PatternSet generate_patterns(const GridPatternSpec& spec) {
  if (spec.width < 1 || spec.height < 1) {
    throw std::invalid_argument("generate_patterns: grid dimensions must be >= 1");
  }
  if (spec.min_size < 1 || spec.max_size < spec.min_size) {
    throw std::invalid_argument("generate_patterns: bad size range");
  }
  const int p = spec.width * spec.height;
  const int max_side = std::max(spec.width, spec.height);

  PatternSet out;
  std::set<std::vector<int>> seen;
  for (const std::vector<int>& shape : shape_offsets(spec.family, spec.min_size, spec.max_size,
                                                     max_side)) {
    int shape_h = 0, shape_w = 0;
    for (std::size_t q = 0; q < shape.size(); q += 2) {
      shape_h = std::max(shape_h, shape[q] + 1);
      shape_w = std::max(shape_w, shape[q + 1] + 1);
    }
    for (int r0 = 0; r0 + shape_h <= spec.height; ++r0) {
      for (int c0 = 0; c0 + shape_w <= spec.width; ++c0) {
        std::vector<int> indices;
        indices.reserve(shape.size() / 2);
        for (std::size_t q = 0; q < shape.size(); q += 2) {
          indices.push_back((r0 + shape[q]) * spec.width + (c0 + shape[q + 1]));
        }
        std::sort(indices.begin(), indices.end());
        if (seen.insert(indices).second) {
          out.patterns.emplace_back(std::move(indices), p);
        }
      }
    }
  }
  if (out.patterns.empty()) {
    throw EmptyPatternSetError("generate_patterns: no shape fits the grid");
  }
  return out;
}

PatternSet prefilter_patterns(const DataMatrix& X, PatternSet pats, int components,
                              double eta_tau, double tol) {
  if (pats.patterns.empty()) {
    throw std::invalid_argument("prefilter_patterns: empty pattern set");
  }
  pats.admissible.assign(pats.patterns.size(), 0);
  pats.pattern_residual.assign(pats.patterns.size(), 0.0);
  for (std::size_t j = 0; j < pats.patterns.size(); ++j) {
    const double r = residual_variance(X, pats.patterns[j], components);
    const double slack =
        tol * (std::max(eta_tau, 0.0) + X.support_weight(pats.patterns[j]));
    pats.pattern_residual[j] = r;
    pats.admissible[j] = (r <= eta_tau + slack) ? 1 : 0;
  }
  return pats;
}

StructuredReport solve_structured(const DataMatrix& X, const PatternSet& pats, int components,
                                  int budget, double eta_tau, bool disjoint,
                                  const BlockEngineOptions& options) {
  if (pats.admissible.size() != pats.patterns.size()) {
    throw std::invalid_argument("solve_structured: catalog must be prefiltered");
  }
  if (budget < 0) throw std::invalid_argument("solve_structured: negative budget");
  if (components < 1 || components > X.rows()) {
    throw std::invalid_argument("solve_structured: components out of range");
  }

  PatternSet configured = pats;
  configured.budget = budget;
  configured.disjoint = disjoint;
  MasterOptions master_options;
  master_options.node_limit = options.node_limit;

  std::optional<PatternMasterSolution> sol =
      solve_pattern_master(X.col_sq_norms(), configured, master_options);
  if (!sol.has_value()) {
    throw InfeasibleError("solve_structured: contradictory pattern inputs");
  }

  StructuredReport report;
  report.selected = sol->selected;
  report.covered = sol->covered;
  report.psi = sol->value;

  if (disjoint) {
    for (int j : report.selected) {
      const Support& pat = pats.patterns[static_cast<std::size_t>(j)];
      const SpectralSummary summary = spectral_summary(X, pat, components);
      report.total_f += summary.explained_variance;
      report.residual += summary.residual;
      report.loadings.push_back(loadings_from_left_basis(X, pat, summary));
    }
    report.bound_status = StructuredBoundStatus::SumThreshold;
    report.bound_value = static_cast<double>(budget) * eta_tau;
  } else {
    if (!report.covered.empty()) {
      const SpectralSummary summary = spectral_summary(X, report.covered, components);
      report.total_f = summary.explained_variance;
      report.residual = summary.residual;
      report.loadings.push_back(loadings_from_left_basis(X, report.covered, summary));
    }
    report.bound_status = StructuredBoundStatus::Heuristic;
    report.bound_value = 0.0;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Catalog serialization

void write_pattern_catalog(std::ostream& out, const PatternSet& pats, int grid_width,
                           int grid_height) {
  out << "# grid " << grid_width << "x" << grid_height << "\n";
  for (const Support& pat : pats.patterns) {
    bool first = true;
    for (int i : pat.indices()) {
      if (!first) out << ' ';
      out << i;
      first = false;
    }
    out << '\n';
  }
}

PatternSet read_pattern_catalog(std::istream& in, int* grid_width, int* grid_height) {
  PatternSet out;
  std::string line;
  std::size_t line_no = 0;
  int width = 0, height = 0;
  int ambient = 0;
  std::vector<std::vector<int>> raw;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream header(line.substr(1));
      std::string word;
      char x = 0;
      if (header >> word >> width >> x >> height && word == "grid" && x == 'x') {
        ambient = width * height;
      } else {
        throw ParseError("bad pattern catalog header", line_no, 1);
      }
      continue;
    }
    std::istringstream row(line);
    std::vector<int> indices;
    int value = 0;
    while (row >> value) indices.push_back(value);
    if (!row.eof()) throw ParseError("bad pattern index", line_no, 1);
    if (indices.empty()) continue;
    raw.push_back(std::move(indices));
    for (int i : raw.back()) ambient = std::max(ambient, i + 1);
  }
  for (auto& indices : raw) out.patterns.emplace_back(std::move(indices), ambient);
  if (grid_width) *grid_width = width;
  if (grid_height) *grid_height = height;
  return out;
}

}  // namespace geospca
