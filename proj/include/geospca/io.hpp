#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "geospca/engine.hpp"
#include "geospca/types.hpp"
#include "geospca/variants.hpp"

namespace geospca {

enum class MatrixFormat { Auto, Csv, MatrixMarket };

struct LoadOptions {
  MatrixFormat format = MatrixFormat::Auto;  // Auto: by file extension
  bool header = false;                       // CSV: skip one header row
  bool center = true;
};

/// Raw matrix from a CSV stream (RFC-4180 subset, '.' decimal, one
/// observation per row). Throws ShapeError on ragged rows, ParseError on bad
/// numbers.
Eigen::MatrixXd read_csv(std::istream& in, bool header = false);

/// Raw matrix from a Matrix Market stream; `array real general` and
/// `coordinate real general` (densified) are accepted.
Eigen::MatrixXd read_matrix_market(std::istream& in);

/// Loads and (by default) centers a data file.
DataMatrix load_matrix(const std::string& path, const LoadOptions& options = {});

/// Full-precision CSV writer; used for deterministic synthetic instances.
void write_csv(std::ostream& out, const Eigen::MatrixXd& matrix);
void write_matrix_market(std::ostream& out, const Eigen::MatrixXd& matrix);

/// Write-temp-then-rename: the destination never holds a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Seeded synthetic instance L * R^T + noise * G with standard normal
/// factors; identical seeds give identical matrices.
Eigen::MatrixXd synth_matrix(std::uint64_t seed, int rows, int cols, int rank, double noise);

nlohmann::json report_to_json(const SolveReport& report);
nlohmann::json report_to_json(const BlockReport& report);
nlohmann::json report_to_json(const StructuredReport& report);

std::string trace_to_csv(const SolveReport& report);

}  // namespace geospca
