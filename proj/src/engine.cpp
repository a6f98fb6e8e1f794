#include "geospca/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "geospca/baselines.hpp"

namespace geospca {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string support_key(const Support& s) {
  std::string key;
  key.reserve(sizeof(int) * s.indices().size());
  for (int i : s.indices()) key.append(reinterpret_cast<const char*>(&i), sizeof(int));
  return key;
}

// Residual comparisons carry a relative slack on the threshold plus a slack
// scaled by the support weight, which absorbs eigensolver roundoff even at
// eta = 0.
bool within_threshold(double residual, double eta, double tol, double scale) {
  return residual <= eta + tol * (std::max(eta, 0.0) + scale);
}

// One cut-generation run: the enumerator and the residual cache survive
// across threshold levels, so re-solving after a new cut or a tightened
// threshold costs one enumeration step instead of a restart.
class CutRun {
 public:
  CutRun(const DataMatrix& X, const EngineConfig& cfg, CutPool pool)
      : X_(X),
        cfg_(cfg),
        pool_(std::move(pool)),
        enumerator_(X.col_sq_norms(), cfg.cardinality,
                    MasterOptions{cfg.node_limit, cfg.max_ties}) {}

  struct Step {
    ThresholdStatus status = ThresholdStatus::Infeasible;
    Support support;
    double master_value = 0.0;
    double residual = 0.0;
  };

  Step run_at(double eta) {
    for (;;) {
      const auto t0 = Clock::now();
      std::vector<CommonMasterSolution> ties = enumerator_.best(pool_);
      master_ms_ += ms_between(t0, Clock::now());
      if (ties.empty()) return Step{ThresholdStatus::Infeasible, {}, 0.0, 0.0};

      // Among value-tied optima prefer the smallest residual; the tie list is
      // lexicographically ordered, so equal residuals keep the smallest
      // support.
      std::size_t pick = 0;
      double pick_residual = residual_of(ties[0].support);
      for (std::size_t i = 1; i < ties.size(); ++i) {
        const double r = residual_of(ties[i].support);
        if (r < pick_residual) {
          pick = i;
          pick_residual = r;
        }
      }
      last_master_value_ = ties[pick].value;
      last_support_ = ties[pick].support;
      last_residual_ = pick_residual;
      have_last_ = true;

      if (within_threshold(pick_residual, eta, cfg_.feasibility_tol, ties[pick].value)) {
        return Step{ThresholdStatus::Feasible, ties[pick].support, ties[pick].value,
                    pick_residual};
      }
      if (static_cast<std::int64_t>(pool_.size()) + 1 > cfg_.max_cuts) {
        return Step{ThresholdStatus::CutBudget, ties[pick].support, ties[pick].value,
                    pick_residual};
      }
      pool_.add(Cut{ties[pick].support, -1});
    }
  }

  // Master optimum under the current pool with no further separation; nullopt
  // when every size-k support is excluded.
  std::optional<double> master_value() {
    const auto t0 = Clock::now();
    std::vector<CommonMasterSolution> best = enumerator_.best(pool_);
    master_ms_ += ms_between(t0, Clock::now());
    if (best.empty()) return std::nullopt;
    return best.front().value;
  }

  double residual_of(const Support& s) {
    const std::string key = support_key(s);
    auto it = residual_cache_.find(key);
    if (it != residual_cache_.end()) return it->second;
    const auto t0 = Clock::now();
    const double r = residual_variance(X_, s, cfg_.components);
    eigen_ms_ += ms_between(t0, Clock::now());
    residual_cache_.emplace(key, r);
    return r;
  }

  CutPool& pool() { return pool_; }
  const CutPool& pool() const { return pool_; }
  double master_ms() const { return master_ms_; }
  double eigen_ms() const { return eigen_ms_; }
  bool have_last() const { return have_last_; }
  const Support& last_support() const { return last_support_; }
  double last_residual() const { return last_residual_; }
  double last_master_value() const { return last_master_value_; }

 private:
  const DataMatrix& X_;
  const EngineConfig& cfg_;
  CutPool pool_;
  KSubsetEnumerator enumerator_;
  std::unordered_map<std::string, double> residual_cache_;
  double master_ms_ = 0.0;
  double eigen_ms_ = 0.0;
  bool have_last_ = false;
  Support last_support_;
  double last_residual_ = 0.0;
  double last_master_value_ = 0.0;
};

}  // namespace

// ---------------------------------------------------------------------------
// EngineConfig

double EngineConfig::resolved_eta0(const DataMatrix& X) const {
  if (eta0 > 0.0) return eta0;
  return std::max(X.squared_frobenius_norm(), 1e-12);
}

double EngineConfig::resolved_delta(const DataMatrix& X) const {
  if (delta > 0.0) return delta;
  return std::max(1e-6 * X.squared_frobenius_norm(), 1e-18);
}

void EngineConfig::validate(const DataMatrix& X) const {
  if (components < 1) throw std::invalid_argument("EngineConfig: components < 1");
  if (components > X.rows()) {
    throw std::invalid_argument("EngineConfig: components exceed row count");
  }
  if (cardinality < 1) throw std::invalid_argument("EngineConfig: cardinality < 1");
  if (cardinality > X.cols()) {
    throw std::invalid_argument("EngineConfig: cardinality exceeds column count");
  }
  if (patience < 1) throw std::invalid_argument("EngineConfig: patience < 1");
  if (max_cuts < 0) throw std::invalid_argument("EngineConfig: negative cut budget");
  if (feasibility_tol < 0) throw std::invalid_argument("EngineConfig: negative tolerance");
}

// ---------------------------------------------------------------------------

std::optional<Cut> separate(const DataMatrix& X, const Support& s, int components, double eta,
                            double tol) {
  const double residual = residual_variance(X, s, components);
  if (within_threshold(residual, eta, tol, X.support_weight(s))) return std::nullopt;
  return Cut{s, -1};
}

ThresholdResult solve_fixed_threshold(const DataMatrix& X, const EngineConfig& cfg, double eta,
                                      CutPool pool) {
  cfg.validate(X);
  const std::size_t cuts_before = pool.size();
  CutRun run(X, cfg, std::move(pool));
  CutRun::Step step = run.run_at(eta);

  ThresholdResult out;
  out.status = step.status;
  out.support = step.support;
  out.master_value = step.master_value;
  out.support_residual = step.residual;
  out.cuts_added = static_cast<std::int64_t>(run.pool().size() - cuts_before);
  out.pool = std::move(run.pool());
  return out;
}

SolveReport solve_common(const DataMatrix& X, const EngineConfig& cfg,
                         const ProgressCallback& progress) {
  cfg.validate(X);
  const auto start = Clock::now();
  const double eta0 = cfg.resolved_eta0(X);
  const double delta = cfg.resolved_delta(X);

  CutRun run(X, cfg, CutPool{});

  bool have_best = false;
  Support best_support;
  double best_f = -std::numeric_limits<double>::infinity();
  double best_psi = 0.0;
  double best_residual = 0.0;
  double eta_star = eta0;

  std::vector<TracePoint> trace;
  StopReason stop = StopReason::Converged;
  double eta_t = eta0;
  int nonimprove = 0;

  for (int t = 0;; ++t) {
    CutRun::Step step = run.run_at(eta_t);
    if (step.status == ThresholdStatus::Infeasible) {
      stop = StopReason::Exhausted;
      break;
    }
    if (step.status == ThresholdStatus::CutBudget) {
      stop = StopReason::CutBudget;
      break;
    }
    const double psi_t = step.master_value;
    const double f_t = psi_t - step.residual;
    const auto cuts_now = static_cast<std::int64_t>(run.pool().size());
    trace.push_back(TracePoint{t, eta_t, psi_t, f_t, cuts_now});
    if (progress) progress(Progress{t, eta_t, psi_t, f_t, cuts_now});

    if (!have_best || f_t > best_f) {
      have_best = true;
      best_f = f_t;
      best_psi = psi_t;
      best_support = step.support;
      best_residual = step.residual;
      eta_star = eta_t;
      nonimprove = 0;
    } else {
      ++nonimprove;
    }
    // The master value only decreases as cuts accumulate, so an incumbent
    // matching it can never be beaten: certified optimal, stop early.
    if (best_f >= psi_t * (1.0 - 1e-9)) {
      stop = StopReason::Converged;
      break;
    }
    if (nonimprove >= cfg.patience) {
      stop = StopReason::Converged;
      break;
    }
    eta_t = step.residual - delta;
  }

  if (!have_best) {
    // The budget tripped before any feasible support appeared. Report the
    // best master candidate seen; the certificate stays an upper bound.
    if (!run.have_last()) {
      throw std::logic_error("solve_common: no candidate available for the report");
    }
    best_support = run.last_support();
    best_residual = run.last_residual();
    best_psi = run.last_master_value();
    best_f = best_psi - best_residual;
    eta_star = eta0;
  }

  SolveReport report;
  report.support = best_support;
  report.psi = best_psi;
  report.f_value = best_f;
  report.support_residual = best_residual;
  report.eta_star = eta_star;
  report.trace = std::move(trace);
  report.cuts_generated = static_cast<std::int64_t>(run.pool().size());
  report.stop_reason = stop;

  if (stop == StopReason::CutBudget) {
    report.certificate = Certificate::UpperBounded;
    report.upper_bound = std::max(run.last_master_value(), best_f + delta);
  } else {
    const std::optional<double> psi_theta = run.master_value();
    if (!psi_theta.has_value()) {
      // Every size-k support was separated at some threshold; any support can
      // beat the incumbent by at most the schedule step.
      report.certificate = Certificate::UpperBounded;
      report.upper_bound = best_f + delta;
    } else if (best_f >= *psi_theta * (1.0 - 1e-9)) {
      report.certificate = Certificate::Optimal;
      report.upper_bound = best_f;
    } else {
      report.certificate = Certificate::UpperBounded;
      report.upper_bound = *psi_theta;
    }
  }

  const SpectralSummary summary = spectral_summary(X, best_support, cfg.components);
  report.loadings = loadings_from_left_basis(X, best_support, summary);
  report.apriori_bound = classic_pca(X, cfg.components).top_k_residual(cfg.cardinality);
  report.gap_ratio = (report.certificate == Certificate::Optimal || report.f_value <= 0.0)
                         ? 0.0
                         : report.eta_star / report.f_value;

  report.runtime.master_ms = run.master_ms();
  report.runtime.eigen_ms = run.eigen_ms();
  report.runtime.total_ms = ms_between(start, Clock::now());
  return report;
}

GapBounds gap_bounds(const DataMatrix& X, const EngineConfig& cfg, const SolveReport& report) {
  GapBounds out;
  out.eta_bound = report.eta_star;
  out.apriori_bound = classic_pca(X, cfg.components).top_k_residual(cfg.cardinality);
  out.gap_ratio = report.gap_ratio;
  return out;
}

DataMatrix exponential_cut_instance(int p) {
  if (p < 4) throw std::invalid_argument("exponential_cut_instance: p must be >= 4");
  const double alpha = 5.0 / 24.0;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(p, p);
  X(0, 0) = 1.0;
  X(0, 1) = 1.0;
  // Columns past the identical pair carry 1 - alpha on the first row plus
  // three +-2*alpha entries on a tridiagonal band whose ends wrap into row 1,
  // the wrap of the last column with a flipped sign. This puts every such
  // column norm above 1 (so all other pairs precede {0, 1} in the master
  // order) while any two columns share at most one same-sign band row, which
  // keeps every pair except {0, 1} strictly suboptimal and separable.
  for (int c = 2; c < p; ++c) {
    X(0, c) = 1.0 - alpha;
    X(c, c) = 2.0 * alpha;
    X((c >= 3) ? c - 1 : 1, c) = -2.0 * alpha;               // band above
    if (c <= p - 2) {
      X(c + 1, c) = -2.0 * alpha;                            // band below
    } else {
      X(1, c) = 2.0 * alpha;                                 // wrap, sign flipped
    }
  }
  return DataMatrix::uncentered(std::move(X));
}

}  // namespace geospca
