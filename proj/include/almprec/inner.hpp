#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "almprec/krylov.hpp"
#include "almprec/linalg.hpp"

namespace almprec {

struct InnerConfig {
  /// Stop when ||P(x - g) - x||_inf <= grad_tol.
  double grad_tol = 1e-8;
  std::size_t max_iter = 2000;
  KrylovOptions krylov{};
  /// Nonmonotone memory; 1 gives a monotone line search.
  std::size_t memory = 10;
  double alpha_min = 1e-10;
  double alpha_max = 1e10;
  /// Sufficient-decrease constant.
  double gamma = 1e-4;
  double backtrack = 0.5;
  std::size_t max_backtracks = 50;

  void validate() const;
};

enum class InnerStatus { converged, max_iterations, line_search_failure };

std::string to_string(InnerStatus status);

struct InnerResult {
  Vector x;
  double f = 0.0;
  Vector grad;
  std::size_t iterations = 0;
  InnerStatus status = InnerStatus::max_iterations;
  /// Krylov iterations of each step (truncated Newton only).
  std::vector<std::size_t> krylov_per_iteration;
  std::size_t krylov_iterations = 0;
  /// Iterations of the unpreconditioned shadow solves, when requested.
  std::size_t shadow_iterations = 0;
  /// Steps where the preconditioned or Newton direction was not a descent direction.
  std::size_t fallbacks = 0;
};

using ObjectiveFn = std::function<double(const Vector&)>;
using GradientFn = std::function<Vector(const Vector&)>;

/// Called once per iteration at the accepted iterate; returns the operator D
/// of the preconditioned direction, or nothing for plain SPG.
using PrecondProvider = std::function<std::optional<PrecondOperator>(const Vector& x, const Vector& g)>;

Vector project_box(const Vector& x, const Vector& lower, const Vector& upper);

/// s^T s / s^T y clamped to [alpha_min, alpha_max]; alpha_max when s^T y <= 0.
double spectral_steplength(const Vector& s, const Vector& y, double alpha_min, double alpha_max);

/// ||P(x - g) - x||_inf
double projected_gradient_norm(const Vector& x, const Vector& g, const Vector& lower, const Vector& upper);

/// Spectral projected gradient with a nonmonotone (max over `memory` values)
/// Armijo search. With a provider the direction is P(x - a D g) - x with
/// a = s^T y / y^T D y from the previous step (1 on the first step), replaced
/// by the spectral direction P(x - alpha g) - x when it is not a descent direction.
InnerResult spg_solve(const ObjectiveFn& f, const GradientFn& grad, const Vector& lower, const Vector& upper,
                      const Vector& x0, const InnerConfig& cfg, const PrecondProvider& provider = {});

struct NewtonStep {
  Vector d;
  std::size_t krylov_iterations = 0;
  std::size_t shadow_iterations = 0;
  bool krylov_converged = false;
  bool used_minres = false;
  /// d was replaced by -grad.
  bool fell_back = false;
};

/// Approximately solves H d = -grad: PCG first, MINRES if PCG reports an
/// indefinite operator, unpreconditioned if the preconditioner breaks down.
/// Returns -grad when the result is not a descent direction.
NewtonStep truncated_newton_step(const LinearOperator& hessian, const Vector& grad,
                                 const std::optional<PrecondOperator>& precond, const InnerConfig& cfg,
                                 bool shadow = false);

struct StepModel {
  LinearOperator hessian;
  std::optional<PrecondOperator> precond;
};

using ModelProvider = std::function<StepModel(const Vector& x, const Vector& g)>;

/// Truncated Newton with a monotone Armijo backtracking search (no bounds).
InnerResult newton_solve(const ObjectiveFn& f, const GradientFn& grad, const Vector& x0, const InnerConfig& cfg,
                         const ModelProvider& model, bool shadow = false);

}  // namespace almprec
