#include "almprec/aux_precond.hpp"

#include <atomic>
#include <cmath>
#include <set>

namespace almprec {

namespace {

std::atomic<std::uint64_t> next_id{1};

struct SparseFactor {
  std::vector<std::size_t> ptr;
  std::vector<std::size_t> col;
  std::vector<double> val;
};

// Row-oriented incomplete Cholesky with threshold dropping. Off-diagonal
// L(i,k) is dropped when |L(i,k)| < drop_tol * ||A(i,:)||_2. drop_tol = 0
// keeps every fill entry and yields the exact factor.
std::optional<SparseFactor> incomplete_cholesky(const SparseSymmetricMatrix& a, double drop_tol) {
  const std::size_t n = a.n();
  // Full-row 2-norms of A, accumulated over the symmetric expansion.
  Vector rownorm(n, 0.0);
  for (const auto& t : a.triplets()) {
    rownorm[t.row] += t.value * t.value;
    if (t.row != t.col) rownorm[t.col] += t.value * t.value;
  }
  for (double& v : rownorm) v = std::sqrt(v);

  SparseFactor f;
  f.ptr.assign(1, 0);
  // Column lists of the finished rows: (row, value) with row > col.
  std::vector<std::vector<std::pair<std::size_t, double>>> by_col(n);
  Vector diag(n, 0.0);
  Vector work(n, 0.0);
  std::set<std::size_t> pattern;

  for (std::size_t i = 0; i < n; ++i) {
    pattern.clear();
    double wdiag = 0.0;
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
      const std::size_t j = a.col_idx()[k];
      if (j == i) {
        wdiag = a.values()[k];
      } else {
        work[j] = a.values()[k];
        pattern.insert(j);
      }
    }
    const double threshold = drop_tol * rownorm[i];
    std::vector<std::pair<std::size_t, double>> row;
    while (!pattern.empty()) {
      const std::size_t k = *pattern.begin();
      pattern.erase(pattern.begin());
      const double lik = work[k] / diag[k];
      work[k] = 0.0;
      if (lik == 0.0 || std::abs(lik) < threshold) continue;
      row.emplace_back(k, lik);
      for (const auto& [j, ljk] : by_col[k]) {
        // j ranges over finished rows only, so j < i.
        if (work[j] == 0.0) pattern.insert(j);
        work[j] -= lik * ljk;
      }
      wdiag -= lik * lik;
    }
    if (!(wdiag > 0.0) || !std::isfinite(wdiag)) return std::nullopt;
    diag[i] = std::sqrt(wdiag);
    for (const auto& [k, v] : row) {
      f.col.push_back(k);
      f.val.push_back(v);
      by_col[k].emplace_back(i, v);
    }
    f.col.push_back(i);
    f.val.push_back(diag[i]);
    f.ptr.push_back(f.col.size());
  }
  return f;
}

std::optional<Vector> dense_cholesky(const SparseSymmetricMatrix& a) {
  const std::size_t n = a.n();
  Vector l = a.to_dense();
  for (std::size_t j = 0; j < n; ++j) {
    double d = l[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    d = std::sqrt(d);
    l[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = l[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / d;
    }
    for (std::size_t i = 0; i < j; ++i) l[i * n + j] = 0.0;
  }
  return l;
}

}  // namespace

std::string to_string(AuxKind kind) {
  switch (kind) {
    case AuxKind::identity:
      return "identity";
    case AuxKind::jacobi:
      return "jacobi";
    case AuxKind::incomplete_cholesky:
      return "ic";
    case AuxKind::exact_dense:
      return "exact";
  }
  return "?";
}

AuxKind parse_aux_kind(const std::string& name) {
  if (name == "identity") return AuxKind::identity;
  if (name == "jacobi") return AuxKind::jacobi;
  if (name == "ic" || name == "incomplete-cholesky") return AuxKind::incomplete_cholesky;
  if (name == "exact" || name == "exact-dense") return AuxKind::exact_dense;
  throw std::invalid_argument("unknown auxiliary preconditioner '" + name + "'");
}

AuxPrecond build_aux(const SparseSymmetricMatrix& m, AuxKind kind, std::optional<double> drop_tol) {
  AuxPrecond p;
  p.kind_ = kind;
  p.n_ = m.n();
  p.id_ = next_id.fetch_add(1);
  p.drop_tol_ = drop_tol.value_or(0.0);
  if (p.drop_tol_ < 0.0) throw std::invalid_argument("build_aux: drop_tol must be >= 0");

  switch (kind) {
    case AuxKind::identity:
      p.nnz_ = 0;
      return p;
    case AuxKind::jacobi: {
      const Vector d = m.diag();
      p.inv_diag_.resize(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(d[i] > 0.0))
          throw NotFactorizableError("jacobi: nonpositive diagonal entry at " + std::to_string(i));
        p.inv_diag_[i] = 1.0 / d[i];
      }
      p.nnz_ = d.size();
      return p;
    }
    case AuxKind::incomplete_cholesky:
    case AuxKind::exact_dense:
      break;
  }

  const double beta = 1e-3 * norm_inf(m.diag());
  for (int attempt = 0; attempt < 2; ++attempt) {
    const double shift = attempt == 0 ? 0.0 : beta;
    if (attempt == 1 && !(beta > 0.0)) break;
    const SparseSymmetricMatrix target = attempt == 0 ? m : m.shifted(shift);
    if (kind == AuxKind::incomplete_cholesky) {
      if (auto f = incomplete_cholesky(target, p.drop_tol_)) {
        p.l_ptr_ = std::move(f->ptr);
        p.l_col_ = std::move(f->col);
        p.l_val_ = std::move(f->val);
        p.nnz_ = p.l_val_.size();
        p.shift_ = shift;
        return p;
      }
    } else {
      if (auto l = dense_cholesky(target)) {
        p.dense_l_ = std::move(*l);
        p.nnz_ = p.n_ * (p.n_ + 1) / 2;
        p.shift_ = shift;
        return p;
      }
    }
  }
  throw NotFactorizableError(to_string(kind) + ": not factorizable");
}

Vector AuxPrecond::apply(const Vector& r) const {
  require_same_size(r.size(), n_, "apply_aux");
  switch (kind_) {
    case AuxKind::identity:
      return r;
    case AuxKind::jacobi: {
      Vector h(n_);
      for (std::size_t i = 0; i < n_; ++i) h[i] = r[i] * inv_diag_[i];
      return h;
    }
    case AuxKind::incomplete_cholesky: {
      Vector y = r;
      for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t last = l_ptr_[i + 1] - 1;
        double s = y[i];
        for (std::size_t k = l_ptr_[i]; k < last; ++k) s -= l_val_[k] * y[l_col_[k]];
        y[i] = s / l_val_[last];
      }
      for (std::size_t i = n_; i-- > 0;) {
        const std::size_t last = l_ptr_[i + 1] - 1;
        y[i] /= l_val_[last];
        for (std::size_t k = l_ptr_[i]; k < last; ++k) y[l_col_[k]] -= l_val_[k] * y[i];
      }
      return y;
    }
    case AuxKind::exact_dense: {
      Vector y = r;
      for (std::size_t i = 0; i < n_; ++i) {
        double s = y[i];
        for (std::size_t k = 0; k < i; ++k) s -= dense_l_[i * n_ + k] * y[k];
        y[i] = s / dense_l_[i * n_ + i];
      }
      for (std::size_t i = n_; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n_; ++k) s -= dense_l_[k * n_ + i] * y[k];
        y[i] = s / dense_l_[i * n_ + i];
      }
      return y;
    }
  }
  return r;
}

}  // namespace almprec
