#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "almprec/aux_precond.hpp"
#include "almprec/column_set.hpp"
#include "almprec/inner.hpp"
#include "almprec/krylov.hpp"
#include "almprec/precond_manager.hpp"
#include "almprec/problem.hpp"
#include "almprec/sparse.hpp"
#include "almprec/structured_precond.hpp"

namespace almprec {

/// PHR augmented Lagrangian
///   f + rho/2 sum_E (c_i + l_i/rho)^2 + rho/2 sum_I max(0, c_i + l_i/rho)^2.
double eval_al(const NlpProblem& p, const Vector& x, const Vector& lambda, double rho);

/// Gradient of eval_al: grad f + sum_i lhat_i grad c_i.
Vector eval_al_grad(const NlpProblem& p, const Vector& x, const Vector& lambda, double rho);

/// lhat = lambda + rho c, clipped at zero for inequalities.
Vector shifted_multipliers(const std::vector<ConstraintKind>& kinds, const Vector& c_vals, const Vector& lambda,
                           double rho);

enum class HessianMode { newton, quasi_newton };

std::string to_string(HessianMode mode);
HessianMode parse_hessian_mode(const std::string& name);

/// H = M_part + sum_i s_i v_i v_i^T.
struct HessianModel {
  SparseSymmetricMatrix m_part;
  double sigma = 0.0;
  /// Columns of the model operator.
  ColumnSet cols;
  /// Relaxed, ordered columns handed to the structured preconditioner.
  ColumnSet precond_cols;
  Vector lambda_hat;
  bool correction_applied = false;
  bool correction_skipped = false;

  Vector apply(const Vector& x) const;
  LinearOperator op() const;
};

struct Secant {
  Vector s;
  Vector y;
};

/// NW: M_part = hess f + sum_A lhat_i hess c_i, cols = sqrt(rho) grad c_i over the active set.
/// QN: M_part = hess f + sigma I with sigma = (y - H s)^T s / s^T s >= sigma_min, H the
/// unshifted model hess f + relaxed constraint block; cols add the BFGS pair.
HessianModel hessian_model(const NlpProblem& p, const Vector& x, const Vector& lambda, double rho, HessianMode mode,
                           const std::optional<Secant>& secant, const UpdateThresholds& th,
                           double sigma_min = 1e-8);

struct MultiplierUpdate {
  Vector lambda;
  Vector mu;
};

/// lambda = lbar + rho h, mu = max(0, mubar + rho g).
MultiplierUpdate update_multipliers(const Vector& lambda_bar, const Vector& mu_bar, double rho, const Vector& h_vals,
                                    const Vector& g_vals);

/// Same rule on the unified constraint vector.
Vector update_multipliers(const std::vector<ConstraintKind>& kinds, const Vector& lambda_bar, double rho,
                          const Vector& c_vals);

struct PenaltyUpdate {
  double rho = 0.0;
  double measure = 0.0;
  bool increased = false;
};

/// V_i = min(-g_i, mubar_i / rho); measure = max(||h||_inf, ||V||_inf). Keeps rho on the
/// first call or when measure <= tau * prev_measure, otherwise multiplies it by gamma.
PenaltyUpdate update_penalty(double rho, std::optional<double> prev_measure, const Vector& h_vals,
                             const Vector& g_vals, const Vector& mu_bar, double tau, double gamma);

/// Unified form: equalities feed h, inequalities feed g with multipliers lambda_bar.
PenaltyUpdate update_penalty(double rho, std::optional<double> prev_measure, const std::vector<ConstraintKind>& kinds,
                             const Vector& c_vals, const Vector& lambda_bar, double tau, double gamma);

struct Safeguard {
  double lambda_min = -1e20;
  double lambda_max = 1e20;
  double mu_max = 1e20;
};

MultiplierUpdate safeguard(const Vector& lambda, const Vector& mu, const Safeguard& sg);
Vector safeguard(const std::vector<ConstraintKind>& kinds, const Vector& lambda, const Safeguard& sg);

struct KktResiduals {
  double opt = 0.0;
  double comp = 0.0;
  double feas = 0.0;
};

/// opt = ||P(x - grad_x L(x, lambda)) - x||_inf, compl and feas as max-norms over E and I.
KktResiduals kkt_residuals(const NlpProblem& p, const Vector& x, const Vector& lambda);

enum class InnerSolver { truncated_newton, spg, pspg };

std::string to_string(InnerSolver solver);
InnerSolver parse_inner_solver(const std::string& name);

struct AlmConfig {
  double rho1 = 10.0;
  double gamma = 10.0;
  double tau = 0.5;
  Safeguard safeguard{};
  double eps_opt = 1e-6;
  double eps_feas = 1e-6;
  std::size_t max_outer = 50;
  InnerSolver solver = InnerSolver::spg;
  HessianMode mode = HessianMode::newton;
  UpdateThresholds thresholds{};
  AuxKind aux = AuxKind::incomplete_cholesky;
  double drop_tol = 1e-3;
  UpdatePolicy policy = UpdatePolicy::automatic;
  double sigma_min = 1e-8;
  InnerConfig inner{};
  /// Truncated Newton only: run an unpreconditioned solve next to each step and count it.
  bool shadow_unpreconditioned = false;

  void validate() const;
};

enum class AlmStatus { converged, no_convergence, inner_failure, invalid_problem };

std::string to_string(AlmStatus status);

struct InnerEvent {
  std::size_t outer = 0;
  std::size_t inner = 0;
  std::size_t krylov = 0;
  UpdateReason reason = UpdateReason::none;
  bool refreshed_aux = false;
  bool refreshed_b = false;
  std::size_t columns = 0;
  double rho = 0.0;
  double m_change = 0.0;
  double v_change = 0.0;
};

struct AlmReport {
  AlmStatus status = AlmStatus::no_convergence;
  std::string message;
  Vector x;
  Vector multipliers;
  double f = 0.0;
  KktResiduals kkt{};
  std::size_t outer_iterations = 0;
  std::size_t inner_iterations = 0;
  std::size_t krylov_precond = 0;
  std::size_t krylov_unprecond = 0;
  std::size_t aux_updates = 0;
  std::size_t b_updates = 0;
  std::size_t aux_fallbacks = 0;
  std::size_t direction_fallbacks = 0;
  std::vector<Vector> path;
  std::vector<double> rho_history;
  std::vector<InnerEvent> events;

  bool converged() const { return status == AlmStatus::converged; }
};

AlmReport alm_solve(const NlpProblem& p, const AlmConfig& cfg);

}  // namespace almprec
