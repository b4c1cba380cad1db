#include "almprec/column_set.hpp"

#include <stdexcept>

namespace almprec {

std::string to_string(const ColumnLabel& label) {
  switch (label.kind) {
    case ColumnKind::constraint:
      return "c" + std::to_string(label.index);
    case ColumnKind::bfgs_y:
      return "bfgs-y";
    case ColumnKind::bfgs_w:
      return "bfgs-w";
  }
  return "?";
}

void ColumnSet::push_back(Vector column, int sign, ColumnLabel label) {
  require_same_size(column.size(), n_, "ColumnSet::push_back");
  if (sign != 1 && sign != -1) throw std::invalid_argument("ColumnSet: sign must be +1 or -1");
  if (!all_finite(column)) throw std::invalid_argument("ColumnSet: column " + to_string(label) + " is not finite");
  columns_.push_back(std::move(column));
  signs_.push_back(sign);
  labels_.push_back(label);
}

bool ColumnSet::has_bfgs() const {
  for (const auto& l : labels_)
    if (l.kind != ColumnKind::constraint) return true;
  return false;
}

Vector ColumnSet::apply(std::span<const double> x) const {
  require_same_size(x.size(), n_, "ColumnSet::apply");
  Vector y(n_, 0.0);
  for (std::size_t i = 0; i < columns_.size(); ++i) axpy(signs_[i] * dot(columns_[i], x), columns_[i], y);
  return y;
}

ColumnSet ColumnSet::permuted(std::span<const std::size_t> order) const {
  require_same_size(order.size(), size(), "ColumnSet::permuted");
  ColumnSet out(n_);
  for (std::size_t k : order) out.push_back(columns_.at(k), signs_[k], labels_[k]);
  return out;
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t ColumnSet::column_hash(std::size_t i) const {
  std::uint64_t h = fnv1a(columns_[i].data(), columns_[i].size() * sizeof(double));
  h = fnv1a(&signs_[i], sizeof(int), h);
  const auto kind = static_cast<int>(labels_[i].kind);
  h = fnv1a(&kind, sizeof kind, h);
  return fnv1a(&labels_[i].index, sizeof(std::size_t), h);
}

}  // namespace almprec
