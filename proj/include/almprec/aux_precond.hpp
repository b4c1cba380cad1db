#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "almprec/linalg.hpp"
#include "almprec/sparse.hpp"

namespace almprec {

enum class AuxKind { identity, jacobi, incomplete_cholesky, exact_dense };

std::string to_string(AuxKind kind);
AuxKind parse_aux_kind(const std::string& name);

class NotFactorizableError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Auxiliary preconditioner P_M ~ M^{-1} for the Lagrangian-Hessian block.
///
/// Factored kinds (incomplete Cholesky, dense Cholesky) first try M itself and,
/// on a nonpositive pivot, retry once with M + beta I where
/// beta = 1e-3 * ||diag(M)||_inf. The shift used is reported by shift().
class AuxPrecond {
public:
  AuxKind kind() const { return kind_; }
  std::size_t n() const { return n_; }
  /// Stored nonzeros of the preconditioner data (factor entries or diagonal).
  std::size_t nnz() const { return nnz_; }
  double drop_tol() const { return drop_tol_; }
  double shift() const { return shift_; }
  /// Distinct per build; lets dependents detect that P_M was rebuilt.
  std::uint64_t id() const { return id_; }

  Vector apply(const Vector& r) const;

  friend AuxPrecond build_aux(const SparseSymmetricMatrix& m, AuxKind kind, std::optional<double> drop_tol);

private:
  AuxKind kind_ = AuxKind::identity;
  std::size_t n_ = 0;
  std::size_t nnz_ = 0;
  double drop_tol_ = 0.0;
  double shift_ = 0.0;
  std::uint64_t id_ = 0;

  Vector inv_diag_;
  // Lower factor, row-compressed, diagonal last in each row.
  std::vector<std::size_t> l_ptr_;
  std::vector<std::size_t> l_col_;
  std::vector<double> l_val_;
  // Dense lower Cholesky factor, row-major.
  Vector dense_l_;
};

AuxPrecond build_aux(const SparseSymmetricMatrix& m, AuxKind kind, std::optional<double> drop_tol = std::nullopt);

inline Vector apply_aux(const AuxPrecond& p, const Vector& r) { return p.apply(r); }

}  // namespace almprec
