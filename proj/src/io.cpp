#include "geospca/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace geospca {

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_number(std::string_view token, std::size_t line, std::size_t column) {
  // Trim surrounding blanks; RFC-4180 ignores them around unquoted fields.
  std::size_t begin = 0, end = token.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(token[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(token[end - 1]))) --end;
  token = token.substr(begin, end - begin);
  if (token.empty()) throw ParseError("empty numeric field", line, column);
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError("bad numeric field '" + std::string(token) + "'", line, column);
  }
  return value;
}

}  // namespace

Eigen::MatrixXd read_csv(std::istream& in, bool header) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header && line_no == 1) continue;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t field_start = 0;
    std::size_t column = 1;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        row.push_back(parse_number(std::string_view(line).substr(field_start, i - field_start),
                                   line_no, column));
        field_start = i + 1;
        ++column;
      }
    }
    if (width == 0) {
      width = row.size();
    } else if (row.size() != width) {
      throw ShapeError("ragged CSV row: expected " + std::to_string(width) + " fields, got " +
                           std::to_string(row.size()),
                       line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ShapeError("empty CSV input", line_no);

  Eigen::MatrixXd matrix(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return matrix;
}

Eigen::MatrixXd read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing MatrixMarket banner", 1, 1);
  ++line_no;
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lowercase(object) != "matrix") {
    throw ParseError("not a MatrixMarket matrix file", 1, 1);
  }
  format = lowercase(format);
  field = lowercase(field);
  symmetry = lowercase(symmetry);
  if (field != "real" && field != "integer" && field != "double") {
    throw ParseError("unsupported MatrixMarket field '" + field + "'", 1, 1);
  }
  if (symmetry != "general") {
    throw ParseError("unsupported MatrixMarket symmetry '" + symmetry + "'", 1, 1);
  }

  auto next_data_line = [&](std::string& out_line) {
    while (std::getline(in, out_line)) {
      ++line_no;
      if (out_line.empty() || out_line[0] == '%') continue;
      return true;
    }
    return false;
  };

  std::string sizes;
  if (!next_data_line(sizes)) throw ParseError("missing size line", line_no, 1);

  if (format == "array") {
    std::istringstream dims(sizes);
    Eigen::Index n = 0, p = 0;
    if (!(dims >> n >> p) || n < 1 || p < 1) throw ParseError("bad array sizes", line_no, 1);
    Eigen::MatrixXd matrix(n, p);
    // Array format lists entries column-major.
    for (Eigen::Index c = 0; c < p; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) {
        std::string entry;
        if (!next_data_line(entry)) throw ParseError("truncated array data", line_no, 1);
        matrix(r, c) = parse_number(entry, line_no, 1);
      }
    }
    return matrix;
  }
  if (format == "coordinate") {
    std::istringstream dims(sizes);
    Eigen::Index n = 0, p = 0;
    long long nnz = 0;
    if (!(dims >> n >> p >> nnz) || n < 1 || p < 1 || nnz < 0) {
      throw ParseError("bad coordinate sizes", line_no, 1);
    }
    Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(n, p);
    for (long long e = 0; e < nnz; ++e) {
      std::string entry;
      if (!next_data_line(entry)) throw ParseError("truncated coordinate data", line_no, 1);
      std::istringstream triple(entry);
      Eigen::Index i = 0, j = 0;
      std::string value;
      if (!(triple >> i >> j >> value) || i < 1 || i > n || j < 1 || j > p) {
        throw ParseError("bad coordinate entry", line_no, 1);
      }
      matrix(i - 1, j - 1) += parse_number(value, line_no, 3);
    }
    return matrix;
  }
  throw ParseError("unsupported MatrixMarket format '" + format + "'", 1, 1);
}

DataMatrix load_matrix(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);

  MatrixFormat format = options.format;
  if (format == MatrixFormat::Auto) {
    const std::string ext = lowercase(std::filesystem::path(path).extension().string());
    format = (ext == ".mtx" || ext == ".mm") ? MatrixFormat::MatrixMarket : MatrixFormat::Csv;
  }
  Eigen::MatrixXd raw = (format == MatrixFormat::Csv) ? read_csv(in, options.header)
                                                      : read_matrix_market(in);
  return options.center ? DataMatrix::centered(std::move(raw))
                        : DataMatrix::uncentered(std::move(raw));
}

void write_csv(std::ostream& out, const Eigen::MatrixXd& matrix) {
  char buffer[64];
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", matrix(r, c));
      if (c) out << ',';
      out << buffer;
    }
    out << '\n';
  }
}

void write_matrix_market(std::ostream& out, const Eigen::MatrixXd& matrix) {
  char buffer[64];
  out << "%%MatrixMarket matrix array real general\n";
  out << matrix.rows() << " " << matrix.cols() << "\n";
  for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", matrix(r, c));
      out << buffer << '\n';
    }
  }
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file: " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Eigen::MatrixXd synth_matrix(std::uint64_t seed, int rows, int cols, int rank, double noise) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("synth_matrix: empty shape");
  if (rank < 0 || rank > std::min(rows, cols)) {
    throw std::invalid_argument("synth_matrix: rank out of range");
  }
  if (noise < 0) throw std::invalid_argument("synth_matrix: negative noise");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd left(rows, rank), right(cols, rank);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < rank; ++j) left(i, j) = gauss(rng);
  for (int i = 0; i < cols; ++i)
    for (int j = 0; j < rank; ++j) right(i, j) = gauss(rng);
  Eigen::MatrixXd matrix = left * right.transpose();
  if (noise > 0) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) matrix(i, j) += noise * gauss(rng);
  }
  return matrix;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

nlohmann::json support_to_json(const Support& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i : s.indices()) arr.push_back(i);
  return arr;
}

const char* certificate_name(Certificate c) {
  return c == Certificate::Optimal ? "optimal" : "upper_bounded";
}

const char* stop_name(StopReason r) {
  switch (r) {
    case StopReason::Converged:
      return "converged";
    case StopReason::Exhausted:
      return "exhausted";
    case StopReason::CutBudget:
      return "cut_budget";
  }
  return "unknown";
}

}  // namespace

nlohmann::json report_to_json(const SolveReport& report) {
  nlohmann::json j;
  j["support"] = support_to_json(report.support);
  j["psi"] = report.psi;
  j["f_value"] = report.f_value;
  j["eta_star"] = report.eta_star;
  j["support_residual"] = report.support_residual;
  j["gap_bound"] = report.certificate == Certificate::Optimal ? 0.0 : report.eta_star;
  j["apriori_bound"] = report.apriori_bound;
  j["gap_ratio"] = report.gap_ratio;
  j["certificate"] = certificate_name(report.certificate);
  j["upper_bound"] = report.upper_bound;
  j["cuts"] = report.cuts_generated;
  j["stop_reason"] = stop_name(report.stop_reason);
  j["runtime_ms"] = report.runtime.total_ms;
  j["runtime_master_ms"] = report.runtime.master_ms;
  j["runtime_eigen_ms"] = report.runtime.eigen_ms;
  nlohmann::json trace = nlohmann::json::array();
  for (const TracePoint& point : report.trace) {
    trace.push_back({{"t", point.t},
                     {"eta", point.eta_threshold},
                     {"psi", point.psi},
                     {"f", point.f},
                     {"cuts", point.cuts}});
  }
  j["trace"] = trace;
  return j;
}

nlohmann::json report_to_json(const BlockReport& report) {
  nlohmann::json j;
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t l = 0; l < report.supports.size(); ++l) {
    blocks.push_back({{"support", support_to_json(report.supports[l])},
                      {"psi", report.psi[l]},
                      {"f_value", report.explained[l]},
                      {"residual", report.residual[l]},
                      {"cuts", report.cuts_per_block[l]}});
  }
  j["blocks"] = blocks;
  j["psi"] = report.total_psi;
  j["f_value"] = report.total_f;
  j["residual_budget"] = report.residual_budget;
  j["certificate"] = certificate_name(report.certificate);
  j["upper_bound"] = report.upper_bound;
  j["cuts"] = report.cuts_generated;
  j["stop_reason"] = stop_name(report.stop_reason);
  return j;
}

nlohmann::json report_to_json(const StructuredReport& report) {
  nlohmann::json j;
  j["selected_patterns"] = report.selected;
  j["support"] = support_to_json(report.covered);
  j["psi"] = report.psi;
  j["f_value"] = report.total_f;
  j["residual"] = report.residual;
  j["bound_status"] =
      report.bound_status == StructuredBoundStatus::SumThreshold ? "sum_threshold" : "heuristic";
  j["bound_value"] = report.bound_value;
  return j;
}

std::string trace_to_csv(const SolveReport& report) {
  std::ostringstream out;
  out << "t,eta,psi,f,cuts\n";
  out.precision(17);
  for (const TracePoint& point : report.trace) {
    out << point.t << ',' << point.eta_threshold << ',' << point.psi << ',' << point.f << ','
        << point.cuts << '\n';
  }
  return out.str();
}

}  // namespace geospca
