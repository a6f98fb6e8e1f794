#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geospca {

// Thrown when an input matrix contains NaN or infinite entries.
struct NonFiniteInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a spectral quantity is requested on an empty column selection.
struct EmptySupportError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown by the exhaustive oracle when the enumeration guard trips.
struct TooLargeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a branch-and-bound search exceeds its node budget. The solvers
// never degrade to a heuristic answer; exceeding the budget is an error.
struct NodeLimitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown by block solves whose thresholds exclude every assignment.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a pattern generator produces no placements.
struct EmptyPatternSetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t line, std::size_t column)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ")"),
        line(line),
        column(column) {}
  std::size_t line = 0;
  std::size_t column = 0;
};

struct ShapeError : std::runtime_error {
  ShapeError(const std::string& msg, std::size_t line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
  std::size_t line = 0;
};

/// An ordered set of column indices in [0, p). Empty supports are legal
/// degenerate values; indices are always unique and sorted ascending.
class Support {
 public:
  Support() = default;

  Support(std::vector<int> indices, int ambient_dim);

  static Support full(int ambient_dim);

  int size() const { return static_cast<int>(indices_.size()); }
  bool empty() const { return indices_.empty(); }
  int ambient_dim() const { return ambient_dim_; }
  std::span<const int> indices() const { return indices_; }
  int operator[](int i) const { return indices_[static_cast<std::size_t>(i)]; }

  bool contains(int index) const;
  /// True when every index of `other` is also in *this.
  bool is_superset_of(const Support& other) const;
  bool intersects(const Support& other) const;
  Support united_with(const Support& other) const;

  friend bool operator==(const Support& a, const Support& b) {
    return a.indices_ == b.indices_;
  }
  /// Lexicographic order on the sorted index lists; used for tie-breaking.
  friend bool operator<(const Support& a, const Support& b) {
    return a.indices_ < b.indices_;
  }

 private:
  std::vector<int> indices_;
  int ambient_dim_ = 0;
};

/// Dense data matrix with cached squared column norms. Immutable after
/// construction, so concurrent reads are safe.
class DataMatrix {
 public:
  /// Centers each column of `raw` to zero mean.
  static DataMatrix centered(Eigen::MatrixXd raw);

  /// Wraps `raw` as-is (no centering); used by constructions that must be
  /// consumed literally.
  static DataMatrix uncentered(Eigen::MatrixXd raw);

  int rows() const { return static_cast<int>(values_.rows()); }
  int cols() const { return static_cast<int>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::VectorXd& col_sq_norms() const { return col_sq_norms_; }
  bool is_centered() const { return centered_; }

  double squared_frobenius_norm() const { return col_sq_norms_.sum(); }

  /// Sum of cached squared column norms over the support (the master
  /// objective evaluated at s).
  double support_weight(const Support& s) const;

  /// The n x |s| submatrix formed by the supported columns.
  Eigen::MatrixXd submatrix(const Support& s) const;

 private:
  DataMatrix(Eigen::MatrixXd values, bool centered);

  Eigen::MatrixXd values_;       // column-major (Eigen default)
  Eigen::VectorXd col_sq_norms_;
  bool centered_ = false;
};

}  // namespace geospca
