#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "almprec/linalg.hpp"

namespace almprec {

enum class ColumnKind { constraint, bfgs_y, bfgs_w };

/// Where a column came from: a constraint gradient (with its index) or one of
/// the two secant-correction vectors.
struct ColumnLabel {
  ColumnKind kind = ColumnKind::constraint;
  std::size_t index = 0;

  friend bool operator==(const ColumnLabel&, const ColumnLabel&) = default;
  friend auto operator<=>(const ColumnLabel&, const ColumnLabel&) = default;
};

std::string to_string(const ColumnLabel& label);

/// Ordered dense columns v_i with signs s_i, representing sum_i s_i v_i v_i^T.
/// Columns are stored already scaled (sqrt(rho) * grad c_i, sqrt(nu) * y, ...).
class ColumnSet {
public:
  explicit ColumnSet(std::size_t n) : n_(n) {}

  void push_back(Vector column, int sign, ColumnLabel label);

  std::size_t n() const { return n_; }
  std::size_t size() const { return columns_.size(); }
  bool empty() const { return columns_.empty(); }

  const Vector& column(std::size_t i) const { return columns_[i]; }
  int sign(std::size_t i) const { return signs_[i]; }
  const ColumnLabel& label(std::size_t i) const { return labels_[i]; }
  const std::vector<Vector>& columns() const { return columns_; }
  const std::vector<int>& signs() const { return signs_; }
  const std::vector<ColumnLabel>& labels() const { return labels_; }

  bool has_bfgs() const;

  /// sum_i s_i v_i (v_i^T x)
  Vector apply(std::span<const double> x) const;

  /// Same columns reordered by `order` (a permutation of 0..size-1).
  ColumnSet permuted(std::span<const std::size_t> order) const;

  /// Hash of the column (bit pattern, sign, label).
  std::uint64_t column_hash(std::size_t i) const;

private:
  std::size_t n_;
  std::vector<Vector> columns_;
  std::vector<int> signs_;
  std::vector<ColumnLabel> labels_;
};

/// FNV-1a over raw bytes; used for staleness fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 1469598103934665603ull);

}  // namespace almprec
