#include "almprec/sparse.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace almprec {

SparseSymmetricMatrix::SparseSymmetricMatrix(std::size_t n, std::vector<Triplet> entries) : n_(n) {
  if (n == 0) throw std::invalid_argument("SparseSymmetricMatrix: dimension must be >= 1");
  for (auto& t : entries) {
    if (t.row >= n || t.col >= n)
      throw std::out_of_range("SparseSymmetricMatrix: index (" + std::to_string(t.row) + ", " +
                              std::to_string(t.col) + ") outside dimension " + std::to_string(n));
    if (!std::isfinite(t.value)) throw std::invalid_argument("SparseSymmetricMatrix: non-finite entry");
    if (t.row < t.col) std::swap(t.row, t.col);
  }
  std::sort(entries.begin(), entries.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col)
      throw std::invalid_argument("SparseSymmetricMatrix: duplicate entry (" + std::to_string(entries[k].row) +
                                  ", " + std::to_string(entries[k].col) + ")");
  }
  row_ptr_.assign(n + 1, 0);
  col_idx_.reserve(entries.size());
  values_.reserve(entries.size());
  for (const auto& t : entries) {
    ++row_ptr_[t.row + 1];
    col_idx_.push_back(t.col);
    values_.push_back(t.value);
  }
  for (std::size_t i = 0; i < n; ++i) row_ptr_[i + 1] += row_ptr_[i];
}

SparseSymmetricMatrix SparseSymmetricMatrix::identity(std::size_t n) {
  return diagonal(Vector(n, 1.0));
}

SparseSymmetricMatrix SparseSymmetricMatrix::diagonal(std::span<const double> d) {
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
  return SparseSymmetricMatrix(d.size(), std::move(t));
}

SparseSymmetricMatrix SparseSymmetricMatrix::from_dense(std::size_t n, std::span<const double> dense) {
  require_same_size(dense.size(), n * n, "from_dense");
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      if (dense[i * n + j] != 0.0) t.push_back({i, j, dense[i * n + j]});
  return SparseSymmetricMatrix(n, std::move(t));
}

std::size_t SparseSymmetricMatrix::full_nnz() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) count += (col_idx_[k] == i) ? 1 : 2;
  return count;
}

double SparseSymmetricMatrix::at(std::size_t i, std::size_t j) const {
  if (i < j) std::swap(i, j);
  auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

Vector SparseSymmetricMatrix::diag() const {
  Vector d(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
  return d;
}

std::vector<Triplet> SparseSymmetricMatrix::triplets() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) t.push_back({i, col_idx_[k], values_[k]});
  return t;
}

Vector SparseSymmetricMatrix::to_dense() const {
  Vector d(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t j = col_idx_[k];
      d[i * n_ + j] = values_[k];
      d[j * n_ + i] = values_[k];
    }
  return d;
}

SparseSymmetricMatrix SparseSymmetricMatrix::shifted(double shift) const {
  std::vector<Triplet> t;
  t.reserve(values_.size() + n_);
  std::vector<bool> has_diag(n_, false);
  for (auto e : triplets()) {
    if (e.row == e.col) {
      e.value += shift;
      has_diag[e.row] = true;
    }
    t.push_back(e);
  }
  for (std::size_t i = 0; i < n_; ++i)
    if (!has_diag[i]) t.push_back({i, i, shift});
  return SparseSymmetricMatrix(n_, std::move(t));
}

Vector matvec(const SparseSymmetricMatrix& a, std::span<const double> x) {
  require_same_size(x.size(), a.n(), "matvec");
  Vector y(a.n(), 0.0);
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& v = a.values();
  for (std::size_t i = 0; i < a.n(); ++i) {
    double s = 0.0;
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) {
      const std::size_t j = ci[k];
      s += v[k] * x[j];
      if (j != i) y[j] += v[k] * x[i];
    }
    y[i] += s;
  }
  return y;
}

double norm1_diff(const SparseSymmetricMatrix& a, const SparseSymmetricMatrix& b) {
  require_same_size(a.n(), b.n(), "norm1_diff");
  const std::size_t n = a.n();
  Vector colsum(n, 0.0);
  auto account = [&](std::size_t i, std::size_t j, double d) {
    const double ad = std::abs(d);
    colsum[j] += ad;
    if (i != j) colsum[i] += ad;
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t ka = a.row_ptr()[i], ea = a.row_ptr()[i + 1];
    std::size_t kb = b.row_ptr()[i], eb = b.row_ptr()[i + 1];
    while (ka < ea || kb < eb) {
      const std::size_t ja = ka < ea ? a.col_idx()[ka] : n;
      const std::size_t jb = kb < eb ? b.col_idx()[kb] : n;
      if (ja == jb) {
        account(i, ja, a.values()[ka++] - b.values()[kb++]);
      } else if (ja < jb) {
        account(i, ja, a.values()[ka++]);
      } else {
        account(i, jb, -b.values()[kb++]);
      }
    }
  }
  return norm_inf(colsum);
}

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

SparseSymmetricMatrix read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty input");
  ++lineno;
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError(lineno, "missing %%MatrixMarket banner");
  if (lower(object) != "matrix" || lower(format) != "coordinate")
    throw ParseError(lineno, "only 'matrix coordinate' is supported");
  if (lower(field) != "real") throw ParseError(lineno, "field '" + field + "' is not real");
  symmetry = lower(symmetry);
  if (symmetry != "symmetric" && symmetry != "general")
    throw ParseError(lineno, "symmetry '" + symmetry + "' is not symmetric or general");

  const bool general = symmetry == "general";
  std::size_t rows = 0, cols = 0, nnz = 0;
  bool have_size = false;
  std::map<std::pair<std::size_t, std::size_t>, double> seen;
  std::size_t read = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (blank(line)) continue;
    std::istringstream ls(line);
    if (!have_size) {
      long long r = 0, c = 0, z = 0;
      if (!(ls >> r >> c >> z) || r <= 0 || c <= 0 || z < 0) throw ParseError(lineno, "malformed size line");
      if (r != c) throw ParseError(lineno, "matrix is not square");
      rows = static_cast<std::size_t>(r);
      cols = static_cast<std::size_t>(c);
      nnz = static_cast<std::size_t>(z);
      have_size = true;
      continue;
    }
    long long i = 0, j = 0;
    double v = 0.0;
    if (!(ls >> i >> j >> v)) throw ParseError(lineno, "malformed entry");
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > rows || static_cast<std::size_t>(j) > cols)
      throw ParseError(lineno, "index out of declared range");
    if (!std::isfinite(v)) throw ParseError(lineno, "non-finite value");
    auto key = std::make_pair(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1));
    if (!general && key.first < key.second) std::swap(key.first, key.second);
    if (!seen.emplace(key, v).second) throw ParseError(lineno, "duplicate entry");
    ++read;
  }
  if (!have_size) throw ParseError(lineno, "missing size line");
  if (read != nnz)
    throw ParseError(lineno, "expected " + std::to_string(nnz) + " entries, found " + std::to_string(read));

  std::vector<Triplet> t;
  if (general) {
    for (const auto& [key, v] : seen) {
      auto [i, j] = key;
      auto mirror = seen.find({j, i});
      const double w = mirror == seen.end() ? 0.0 : mirror->second;
      const double scale = std::max(std::abs(v), std::abs(w));
      if (std::abs(v - w) > 1e-12 * scale)
        throw ParseError(lineno, "general matrix is not symmetric at (" + std::to_string(i + 1) + ", " +
                                     std::to_string(j + 1) + ")");
      if (i >= j) t.push_back({i, j, v});
    }
  } else {
    for (const auto& [key, v] : seen) t.push_back({key.first, key.second, v});
  }
  return SparseSymmetricMatrix(rows, std::move(t));
}

SparseSymmetricMatrix read_matrix_market(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_matrix_market(in);
}

SparseSymmetricMatrix read_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file '" + path + "'");
  return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const SparseSymmetricMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << a.n() << ' ' << a.n() << ' ' << a.stored_nnz() << '\n';
  char buf[64];
  for (const auto& t : a.triplets()) {
    std::snprintf(buf, sizeof buf, "%.17g", t.value);
    out << t.row + 1 << ' ' << t.col + 1 << ' ' << buf << '\n';
  }
}

std::string write_matrix_market(const SparseSymmetricMatrix& a) {
  std::ostringstream out;
  write_matrix_market(out, a);
  return out.str();
}

}  // namespace almprec
