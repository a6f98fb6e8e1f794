#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "geospca/baselines.hpp"
#include "geospca/engine.hpp"
#include "geospca/io.hpp"
#include "geospca/variants.hpp"

namespace {

using geospca::Certificate;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitParse = 3;
constexpr int kExitSolver = 4;

// Relative output paths may be redirected via GEOSPCA_OUTPUT_DIR.
std::string resolve_output(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const char* dir = std::getenv("GEOSPCA_OUTPUT_DIR");
  if (!dir || !*dir) return path;
  std::string out(dir);
  if (out.back() != '/') out += '/';
  return out + path;
}

void emit(const json& report, const std::string& out_path) {
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    geospca::write_file_atomic(resolve_output(out_path), text);
  }
}

int fail(const std::string& type, const std::string& message, int code) {
  json err;
  err["error"] = {{"type", type}, {"message", message}};
  std::cout << err.dump(2) << "\n";
  return code;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

geospca::ShapeFamily parse_shape(const std::string& name) {
  if (name == "rectangle" || name == "rect") return geospca::ShapeFamily::Rectangle;
  if (name == "triangle") return geospca::ShapeFamily::Triangle;
  if (name == "octagon") return geospca::ShapeFamily::Octagon;
  throw CLI::ValidationError("--shape", "unknown shape family: " + name);
}

struct CommonArgs {
  std::string input;
  std::string format = "auto";
  bool header = false;
  bool no_center = false;
  std::string out;
  std::string trace;
};

geospca::DataMatrix load(const CommonArgs& args) {
  geospca::LoadOptions options;
  options.header = args.header;
  options.center = !args.no_center;
  if (args.format == "csv") options.format = geospca::MatrixFormat::Csv;
  if (args.format == "mm" || args.format == "matrixmarket") {
    options.format = geospca::MatrixFormat::MatrixMarket;
  }
  return geospca::load_matrix(args.input, options);
}

void print_summary(const geospca::SolveReport& report) {
  std::printf("f_value=%.6g gap=%.2f%% cuts=%lld time=%.0fms certificate=%s\n", report.f_value,
              100.0 * report.gap_ratio, static_cast<long long>(report.cuts_generated),
              report.runtime.total_ms,
              report.certificate == Certificate::Optimal ? "optimal" : "upper_bounded");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse PCA solver: orthogonal PCs on a common, block-disjoint or "
               "pattern-structured support via no-good cut generation"};
  app.require_subcommand(1);

  // --- run ---------------------------------------------------------------
  CommonArgs common;
  std::string mode = "common";
  geospca::EngineConfig engine;
  std::string block_k, block_a, block_eta;
  // structured options
  std::string grid, shape = "rectangle", patterns_file;
  int min_size = 1, max_size = 1, budget = 1;
  double eta_tau = 0.0;
  bool disjoint = true;

  CLI::App* run = app.add_subcommand("run", "solve an instance from a data file");
  run->add_option("--input", common.input, "input matrix file")->required();
  run->add_option("--format", common.format, "csv | mm | auto")->capture_default_str();
  run->add_flag("--header", common.header, "skip one CSV header row");
  run->add_flag("--no-center", common.no_center, "do not center columns");
  run->add_option("--mode", mode, "common | blocks | structured | greedy | oracle | bounds")
      ->capture_default_str();
  run->add_option("-k,--cardinality", engine.cardinality, "support size");
  run->add_option("-a,--components", engine.components, "number of PCs");
  run->add_option("--eta0", engine.eta0, "initial residual threshold (default ||X||_F^2)");
  run->add_option("--delta", engine.delta, "threshold decrement (default 1e-6*||X||_F^2)");
  run->add_option("--lambda", engine.patience, "non-improvement patience")
      ->capture_default_str();
  run->add_option("--max-cuts", engine.max_cuts, "cut budget")->capture_default_str();
  run->add_option("--tolerance", engine.feasibility_tol, "relative feasibility slack")
      ->capture_default_str();
  run->add_option("--node-limit", engine.node_limit, "search node budget")
      ->capture_default_str();
  run->add_option("--block-k", block_k, "blocks mode: per-block cardinalities, e.g. 2,2");
  run->add_option("--block-a", block_a, "blocks mode: per-block component counts");
  run->add_option("--block-eta", block_eta, "blocks mode: per-block residual thresholds");
  run->add_option("--grid", grid, "structured mode: grid as WxH, e.g. 8x8");
  run->add_option("--shape", shape, "structured mode: rectangle | triangle | octagon")
      ->capture_default_str();
  run->add_option("--min-size", min_size, "structured mode: smallest pattern, pixels");
  run->add_option("--max-size", max_size, "structured mode: largest pattern, pixels");
  run->add_option("--patterns", patterns_file, "structured mode: pattern catalog file");
  run->add_option("--budget", budget, "structured mode: max selected patterns");
  run->add_option("--eta-tau", eta_tau, "structured mode: per-pattern residual threshold");
  run->add_flag("--disjoint,!--no-disjoint", disjoint,
                "structured mode: require disjoint patterns")
      ->capture_default_str();
  run->add_option("--out", common.out, "write the JSON report here (default stdout)");
  run->add_option("--trace", common.trace, "write a per-iteration CSV trace here");

  // --- synth ---------------------------------------------------------------
  std::uint64_t seed = 0;
  int synth_rows = 0, synth_cols = 0, synth_rank = 0;
  double synth_noise = 0.0;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "write a seeded synthetic instance");
  synth->add_option("--seed", seed, "RNG seed")->required();
  synth->add_option("--rows,-n", synth_rows, "observations")->required();
  synth->add_option("--cols,-p", synth_cols, "features")->required();
  synth->add_option("--rank", synth_rank, "planted rank")->required();
  synth->add_option("--noise", synth_noise, "noise level")->capture_default_str();
  synth->add_option("--out", synth_out, "output file (.csv or .mtx)")->required();

  // --- patterns --------------------------------------------------------------
  std::string pat_grid, pat_shape = "rectangle", pat_out;
  int pat_min = 1, pat_max = 1;
  CLI::App* patterns = app.add_subcommand("patterns", "write a pattern catalog for a grid");
  patterns->add_option("--grid", pat_grid, "grid as WxH")->required();
  patterns->add_option("--shape", pat_shape, "rectangle | triangle | octagon")
      ->capture_default_str();
  patterns->add_option("--min-size", pat_min, "smallest pattern, pixels")->required();
  patterns->add_option("--max-size", pat_max, "largest pattern, pixels")->required();
  patterns->add_option("--out", pat_out, "catalog file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const Eigen::MatrixXd matrix =
          geospca::synth_matrix(seed, synth_rows, synth_cols, synth_rank, synth_noise);
      std::ostringstream body;
      if (synth_out.size() > 4 && synth_out.substr(synth_out.size() - 4) == ".mtx") {
        geospca::write_matrix_market(body, matrix);
      } else {
        geospca::write_csv(body, matrix);
      }
      geospca::write_file_atomic(resolve_output(synth_out), body.str());
      return kExitOk;
    }

    if (patterns->parsed()) {
      int w = 0, h = 0;
      if (std::sscanf(pat_grid.c_str(), "%dx%d", &w, &h) != 2) {
        return fail("usage", "--grid expects WxH", kExitParse);
      }
      geospca::GridPatternSpec spec{w, h, parse_shape(pat_shape), pat_min, pat_max};
      const geospca::PatternSet pats = geospca::generate_patterns(spec);
      std::ostringstream body;
      geospca::write_pattern_catalog(body, pats, w, h);
      if (pat_out.empty()) {
        std::cout << body.str();
      } else {
        geospca::write_file_atomic(resolve_output(pat_out), body.str());
      }
      return kExitOk;
    }

    // run
    const geospca::DataMatrix X = load(common);

    if (mode == "common") {
      const geospca::SolveReport report = geospca::solve_common(X, engine);
      emit(geospca::report_to_json(report), common.out);
      if (!common.trace.empty()) {
        geospca::write_file_atomic(resolve_output(common.trace), geospca::trace_to_csv(report));
      }
      print_summary(report);
      return kExitOk;
    }
    if (mode == "blocks") {
      geospca::BlockSpec spec;
      spec.cardinalities = parse_int_list(block_k);
      spec.components = block_a.empty()
                            ? std::vector<int>(spec.cardinalities.size(), engine.components)
                            : parse_int_list(block_a);
      spec.residuals = block_eta.empty()
                           ? std::vector<double>(spec.cardinalities.size(), engine.eta0)
                           : parse_double_list(block_eta);
      geospca::BlockEngineOptions options;
      options.max_cuts = engine.max_cuts;
      options.feasibility_tol = engine.feasibility_tol;
      options.node_limit = engine.node_limit;
      const geospca::BlockReport report = geospca::solve_blocks(X, spec, options);
      emit(geospca::report_to_json(report), common.out);
      std::printf("f_value=%.6g psi=%.6g cuts=%lld\n", report.total_f, report.total_psi,
                  static_cast<long long>(report.cuts_generated));
      return kExitOk;
    }
    if (mode == "structured") {
      geospca::PatternSet pats;
      if (!patterns_file.empty()) {
        std::ifstream in(patterns_file);
        if (!in) return fail("io", "cannot open " + patterns_file, kExitParse);
        pats = geospca::read_pattern_catalog(in);
      } else {
        int w = 0, h = 0;
        if (std::sscanf(grid.c_str(), "%dx%d", &w, &h) != 2) {
          return fail("usage", "--grid expects WxH (or pass --patterns)", kExitParse);
        }
        if (w * h != X.cols()) {
          return fail("usage", "grid size does not match the column count", kExitParse);
        }
        pats = geospca::generate_patterns(
            geospca::GridPatternSpec{w, h, parse_shape(shape), min_size, max_size});
      }
      pats = geospca::prefilter_patterns(X, std::move(pats), engine.components, eta_tau,
                                         engine.feasibility_tol);
      geospca::BlockEngineOptions options;
      options.max_cuts = engine.max_cuts;
      options.feasibility_tol = engine.feasibility_tol;
      options.node_limit = engine.node_limit;
      const geospca::StructuredReport report =
          geospca::solve_structured(X, pats, engine.components, budget, eta_tau, disjoint,
                                    options);
      emit(geospca::report_to_json(report), common.out);
      std::printf("f_value=%.6g patterns=%zu covered=%d\n", report.total_f,
                  report.selected.size(), report.covered.size());
      return kExitOk;
    }
    if (mode == "greedy") {
      const geospca::GreedyResult greedy =
          geospca::greedy_support(X, engine.cardinality, engine.components);
      const double f = geospca::variance_objective(X, greedy.support, engine.components);
      json j;
      j["support"] = json::array();
      for (int i : greedy.support.indices()) j["support"].push_back(i);
      j["f_value"] = f;
      j["trace"] = greedy.variance_trace;
      emit(j, common.out);
      std::printf("f_value=%.6g\n", f);
      return kExitOk;
    }
    if (mode == "oracle") {
      const geospca::BruteForceResult oracle =
          geospca::brute_force(X, engine.cardinality, engine.components);
      json j;
      j["support"] = json::array();
      for (int i : oracle.support.indices()) j["support"].push_back(i);
      j["f_value"] = oracle.value;
      j["support_residual"] = oracle.residual;
      emit(j, common.out);
      std::printf("f_value=%.6g\n", oracle.value);
      return kExitOk;
    }
    if (mode == "bounds") {
      const geospca::PcaResult pca = geospca::classic_pca(X, engine.components);
      json j;
      j["apriori_bound"] = pca.top_k_residual(engine.cardinality);
      j["explained_curve"] = pca.explained_curve;
      j["total_variance"] = X.squared_frobenius_norm();
      emit(j, common.out);
      std::printf("apriori_bound=%.6g\n", pca.top_k_residual(engine.cardinality));
      return kExitOk;
    }
    return fail("usage", "unknown mode: " + mode, kExitParse);
  } catch (const geospca::ParseError& e) {
    return fail("parse", e.what(), kExitParse);
  } catch (const geospca::ShapeError& e) {
    return fail("shape", e.what(), kExitParse);
  } catch (const std::exception& e) {
    return fail("solver", e.what(), kExitSolver);
  }
}
