#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "almprec/linalg.hpp"

namespace almprec {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Symmetric sparse matrix stored as its lower triangle in compressed-row form.
///
/// Triplets given with row < col are mirrored into the lower triangle; giving
/// both (i, j) and (j, i) counts as a duplicate and is rejected.
class SparseSymmetricMatrix {
public:
  SparseSymmetricMatrix() = default;
  SparseSymmetricMatrix(std::size_t n, std::vector<Triplet> entries);

  static SparseSymmetricMatrix identity(std::size_t n);
  static SparseSymmetricMatrix diagonal(std::span<const double> d);
  /// Lower triangle of a dense row-major n x n array; exact zeros are skipped.
  static SparseSymmetricMatrix from_dense(std::size_t n, std::span<const double> dense);

  std::size_t n() const { return n_; }
  /// Stored (lower-triangle) entries.
  std::size_t stored_nnz() const { return values_.size(); }
  /// Nonzeros of the full symmetric matrix.
  std::size_t full_nnz() const;

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  double at(std::size_t i, std::size_t j) const;
  Vector diag() const;
  std::vector<Triplet> triplets() const;
  /// Row-major dense copy.
  Vector to_dense() const;

  /// A + shift * I
  SparseSymmetricMatrix shifted(double shift) const;

  friend bool operator==(const SparseSymmetricMatrix& a, const SparseSymmetricMatrix& b) {
    return a.n_ == b.n_ && a.row_ptr_ == b.row_ptr_ && a.col_idx_ == b.col_idx_ && a.values_ == b.values_;
  }

private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

Vector matvec(const SparseSymmetricMatrix& a, std::span<const double> x);

/// Induced 1-norm (maximum absolute column sum) of a - b.
double norm1_diff(const SparseSymmetricMatrix& a, const SparseSymmetricMatrix& b);

/// Error raised while reading Matrix Market text; carries the 1-based line.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

SparseSymmetricMatrix read_matrix_market(std::istream& in);
SparseSymmetricMatrix read_matrix_market(std::string_view text);
SparseSymmetricMatrix read_matrix_market_file(const std::string& path);

/// Writes `coordinate real symmetric` with 17 significant digits.
void write_matrix_market(std::ostream& out, const SparseSymmetricMatrix& a);
std::string write_matrix_market(const SparseSymmetricMatrix& a);

}  // namespace almprec
