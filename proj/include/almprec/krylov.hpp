#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "almprec/linalg.hpp"

namespace almprec {

/// A symmetric linear map given only through its action.
struct LinearOperator {
  std::size_t n = 0;
  std::function<Vector(const Vector&)> apply;

  Vector operator()(const Vector& x) const { return apply(x); }
};

/// Approximation of an inverse, r -> h ~ P^{-1} r.
using PrecondOperator = LinearOperator;

struct KrylovReport {
  Vector solution;
  std::size_t iterations = 0;
  /// True residual 2-norms ||b - A x_k||, starting with k = 0.
  std::vector<double> residual_history;
  bool converged = false;
};

struct KrylovOptions {
  double tol = 1e-8;
  /// 0 selects 10 * n.
  std::size_t maxit = 0;
};

/// Preconditioned conjugate gradients from x0 = 0.
///
/// Convergence is declared on the true relative residual ||b - Ax|| / ||b||,
/// recomputed every iteration. Throws BreakdownError("indefinite operator")
/// when p^T A p <= 0 and BreakdownError("indefinite preconditioner") when
/// r^T P^{-1} r < 0.
KrylovReport pcg(const LinearOperator& op, const std::optional<PrecondOperator>& precond, const Vector& b,
                 const KrylovOptions& opts = {});

/// Preconditioned MINRES (Paige-Saunders) for symmetric, possibly indefinite
/// operators. The preconditioner must be SPD; a negative preconditioned norm
/// raises BreakdownError("indefinite preconditioner").
KrylovReport pminres(const LinearOperator& op, const std::optional<PrecondOperator>& precond, const Vector& b,
                     const KrylovOptions& opts = {});

}  // namespace almprec
