#include "almprec/alm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <utility>

namespace almprec {

namespace {

void check_multipliers(const NlpProblem& p, const Vector& lambda, double rho) {
  require_same_size(lambda.size(), p.m(), "multipliers");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
}

// sum_k w_k A_k, all of order n.
SparseSymmetricMatrix weighted_sum(std::size_t n, const std::vector<std::pair<double, SparseSymmetricMatrix>>& terms) {
  std::map<std::pair<std::size_t, std::size_t>, double> acc;
  for (const auto& [w, a] : terms) {
    require_same_size(a.n(), n, "hessian term");
    if (w == 0.0) continue;
    for (const Triplet& t : a.triplets()) acc[{t.row, t.col}] += w * t.value;
  }
  std::vector<Triplet> out;
  out.reserve(acc.size());
  for (const auto& [rc, v] : acc)
    if (v != 0.0) out.push_back({rc.first, rc.second, v});
  return SparseSymmetricMatrix(n, std::move(out));
}

bool active(ConstraintKind kind, double lambda, double rho, double c) {
  return kind == ConstraintKind::equality || lambda + rho * c > 0.0;
}

// Variables within eps of a bound with the gradient pushing outward, where
// eps = min(1e-3, ||P(x - g) - x||_inf).
std::vector<bool> binding_set(const NlpProblem& p, const Vector& x, const Vector& g) {
  const double eps = std::min(1e-3, projected_gradient_norm(x, g, p.lower, p.upper));
  std::vector<bool> b(p.n, false);
  for (std::size_t i = 0; i < p.n; ++i)
    b[i] = (x[i] <= p.lower[i] + eps && g[i] > 0.0) || (x[i] >= p.upper[i] - eps && g[i] < 0.0);
  return b;
}

// Decouples the binding variables: unit rows/columns in M, zero entries in V.
void restrict_to_free(HessianModel& h, const std::vector<bool>& binding) {
  if (std::none_of(binding.begin(), binding.end(), [](bool b) { return b; })) return;
  const std::size_t n = h.m_part.n();
  std::vector<Triplet> t;
  for (const Triplet& e : h.m_part.triplets())
    if (!binding[e.row] && !binding[e.col]) t.push_back(e);
  for (std::size_t i = 0; i < n; ++i)
    if (binding[i]) t.push_back({i, i, 1.0});
  h.m_part = SparseSymmetricMatrix(n, std::move(t));
  ColumnSet cols(n);
  for (std::size_t j = 0; j < h.precond_cols.size(); ++j) {
    Vector v = h.precond_cols.column(j);
    for (std::size_t i = 0; i < n; ++i)
      if (binding[i]) v[i] = 0.0;
    if (norm_inf(v) > 0.0) cols.push_back(std::move(v), h.precond_cols.sign(j), h.precond_cols.label(j));
  }
  h.precond_cols = std::move(cols);
}

}  // namespace

double eval_al(const NlpProblem& p, const Vector& x, const Vector& lambda, double rho) {
  check_multipliers(p, lambda, rho);
  const Vector c = p.c(x);
  require_same_size(c.size(), p.m(), "constraint values");
  double penalty = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double t = c[i] + lambda[i] / rho;
    if (p.kinds[i] == ConstraintKind::inequality) t = std::max(0.0, t);
    penalty += t * t;
  }
  return p.f(x) + 0.5 * rho * penalty;
}

Vector shifted_multipliers(const std::vector<ConstraintKind>& kinds, const Vector& c_vals, const Vector& lambda,
                           double rho) {
  require_same_size(c_vals.size(), kinds.size(), "shifted_multipliers");
  require_same_size(lambda.size(), kinds.size(), "shifted_multipliers");
  Vector lhat(kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    lhat[i] = lambda[i] + rho * c_vals[i];
    if (kinds[i] == ConstraintKind::inequality) lhat[i] = std::max(0.0, lhat[i]);
  }
  return lhat;
}

Vector eval_al_grad(const NlpProblem& p, const Vector& x, const Vector& lambda, double rho) {
  check_multipliers(p, lambda, rho);
  Vector g = p.grad_f(x);
  require_same_size(g.size(), p.n, "objective gradient");
  if (p.m() == 0) return g;
  const Vector lhat = shifted_multipliers(p.kinds, p.c(x), lambda, rho);
  const std::vector<Vector> jac = p.jacobian(x);
  require_same_size(jac.size(), p.m(), "jacobian");
  for (std::size_t i = 0; i < jac.size(); ++i)
    if (lhat[i] != 0.0) axpy(lhat[i], jac[i], g);
  return g;
}

std::string to_string(HessianMode mode) { return mode == HessianMode::newton ? "nw" : "qn"; }

HessianMode parse_hessian_mode(const std::string& name) {
  if (name == "nw" || name == "NW" || name == "newton") return HessianMode::newton;
  if (name == "qn" || name == "QN" || name == "quasi-newton") return HessianMode::quasi_newton;
  throw std::invalid_argument("unknown hessian mode '" + name + "'");
}

Vector HessianModel::apply(const Vector& x) const {
  Vector y = matvec(m_part, x);
  if (!cols.empty()) y = add(y, cols.apply(x));
  return y;
}

LinearOperator HessianModel::op() const {
  auto self = std::make_shared<const HessianModel>(*this);
  return LinearOperator{m_part.n(), [self](const Vector& x) { return self->apply(x); }};
}

HessianModel hessian_model(const NlpProblem& p, const Vector& x, const Vector& lambda, double rho, HessianMode mode,
                           const std::optional<Secant>& secant, const UpdateThresholds& th, double sigma_min) {
  check_multipliers(p, lambda, rho);
  const std::size_t n = p.n;
  const Vector c = p.c(x);
  const std::vector<Vector> jac = p.jacobian(x);
  require_same_size(c.size(), p.m(), "constraint values");
  require_same_size(jac.size(), p.m(), "jacobian");

  HessianModel h{SparseSymmetricMatrix::identity(n), 0.0, ColumnSet(n), ColumnSet(n), {}, false, false};
  h.lambda_hat = shifted_multipliers(p.kinds, c, lambda, rho);
  const SparseSymmetricMatrix hf = p.hess_f(x);
  ColumnSetBuild relaxed = build_column_set(n, jac, p.kinds, c, lambda, rho, th, std::nullopt);

  if (mode == HessianMode::newton) {
    std::vector<std::pair<double, SparseSymmetricMatrix>> terms{{1.0, hf}};
    const double sr = std::sqrt(rho);
    for (std::size_t i = 0; i < p.m(); ++i) {
      if (!active(p.kinds[i], lambda[i], rho, c[i])) continue;
      if (h.lambda_hat[i] != 0.0) terms.emplace_back(h.lambda_hat[i], p.hess_c(i, x));
      if (norm_inf(jac[i]) > 0.0) h.cols.push_back(scaled(sr, jac[i]), +1, {ColumnKind::constraint, i});
    }
    h.m_part = weighted_sum(n, terms);
    h.precond_cols = std::move(relaxed.cols);
    return h;
  }

  h.sigma = sigma_min;
  const bool usable = secant && dot(secant->s, secant->s) > 0.0;
  if (usable) {
    require_same_size(secant->s.size(), n, "secant s");
    require_same_size(secant->y.size(), n, "secant y");
    const Vector hs = add(matvec(hf, secant->s), relaxed.cols.apply(secant->s));
    const double sigma = dot(sub(secant->y, hs), secant->s) / dot(secant->s, secant->s);
    h.sigma = std::max(sigma, sigma_min);
  }
  h.m_part = hf.shifted(h.sigma);
  if (usable) {
    const ColumnSet base = relaxed.cols;
    const SparseSymmetricMatrix m_part = h.m_part;
    SecantPair pair{secant->s, secant->y,
                    [base, m_part](const Vector& v) { return add(matvec(m_part, v), base.apply(v)); }};
    relaxed = build_column_set(n, jac, p.kinds, c, lambda, rho, th, pair);
  }
  h.correction_applied = relaxed.correction_applied;
  h.correction_skipped = relaxed.correction_skipped;
  h.cols = relaxed.cols;
  h.precond_cols = std::move(relaxed.cols);
  return h;
}

MultiplierUpdate update_multipliers(const Vector& lambda_bar, const Vector& mu_bar, double rho, const Vector& h_vals,
                                    const Vector& g_vals) {
  require_same_size(lambda_bar.size(), h_vals.size(), "update_multipliers");
  require_same_size(mu_bar.size(), g_vals.size(), "update_multipliers");
  MultiplierUpdate u{Vector(h_vals.size()), Vector(g_vals.size())};
  for (std::size_t i = 0; i < h_vals.size(); ++i) u.lambda[i] = lambda_bar[i] + rho * h_vals[i];
  for (std::size_t i = 0; i < g_vals.size(); ++i) u.mu[i] = std::max(0.0, mu_bar[i] + rho * g_vals[i]);
  return u;
}

Vector update_multipliers(const std::vector<ConstraintKind>& kinds, const Vector& lambda_bar, double rho,
                          const Vector& c_vals) {
  return shifted_multipliers(kinds, c_vals, lambda_bar, rho);
}

PenaltyUpdate update_penalty(double rho, std::optional<double> prev_measure, const Vector& h_vals,
                             const Vector& g_vals, const Vector& mu_bar, double tau, double gamma) {
  require_same_size(mu_bar.size(), g_vals.size(), "update_penalty");
  if (!(rho > 0.0)) throw std::invalid_argument("update_penalty: rho must be positive");
  double v = 0.0;
  for (std::size_t i = 0; i < g_vals.size(); ++i) v = std::max(v, std::abs(std::min(-g_vals[i], mu_bar[i] / rho)));
  PenaltyUpdate u{rho, std::max(norm_inf(h_vals), v), false};
  if (prev_measure && u.measure > tau * *prev_measure) {
    u.rho = rho * gamma;
    u.increased = true;
  }
  return u;
}

PenaltyUpdate update_penalty(double rho, std::optional<double> prev_measure, const std::vector<ConstraintKind>& kinds,
                             const Vector& c_vals, const Vector& lambda_bar, double tau, double gamma) {
  require_same_size(c_vals.size(), kinds.size(), "update_penalty");
  require_same_size(lambda_bar.size(), kinds.size(), "update_penalty");
  Vector h, g, mu;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] == ConstraintKind::equality) {
      h.push_back(c_vals[i]);
    } else {
      g.push_back(c_vals[i]);
      mu.push_back(lambda_bar[i]);
    }
  }
  return update_penalty(rho, prev_measure, h, g, mu, tau, gamma);
}

MultiplierUpdate safeguard(const Vector& lambda, const Vector& mu, const Safeguard& sg) {
  MultiplierUpdate u{lambda, mu};
  for (double& l : u.lambda) l = std::clamp(l, sg.lambda_min, sg.lambda_max);
  for (double& m : u.mu) m = std::clamp(m, 0.0, sg.mu_max);
  return u;
}

Vector safeguard(const std::vector<ConstraintKind>& kinds, const Vector& lambda, const Safeguard& sg) {
  require_same_size(lambda.size(), kinds.size(), "safeguard");
  Vector out(lambda.size());
  for (std::size_t i = 0; i < kinds.size(); ++i)
    out[i] = kinds[i] == ConstraintKind::equality ? std::clamp(lambda[i], sg.lambda_min, sg.lambda_max)
                                                   : std::clamp(lambda[i], 0.0, sg.mu_max);
  return out;
}

KktResiduals kkt_residuals(const NlpProblem& p, const Vector& x, const Vector& lambda) {
  require_same_size(lambda.size(), p.m(), "kkt_residuals");
  Vector g = p.grad_f(x);
  KktResiduals r;
  if (p.m() > 0) {
    const Vector c = p.c(x);
    const std::vector<Vector> jac = p.jacobian(x);
    for (std::size_t j = 0; j < p.m(); ++j) {
      axpy(lambda[j], jac[j], g);
      if (p.kinds[j] == ConstraintKind::equality) {
        r.comp = std::max(r.comp, std::abs(c[j]));
        r.feas = std::max(r.feas, std::abs(c[j]));
      } else {
        r.comp = std::max(r.comp, std::abs(std::min(-c[j], lambda[j])));
        r.feas = std::max(r.feas, std::max(0.0, c[j]));
      }
    }
  }
  r.opt = projected_gradient_norm(x, g, p.lower, p.upper);
  return r;
}

std::string to_string(InnerSolver solver) {
  switch (solver) {
    case InnerSolver::truncated_newton:
      return "truncated-newton";
    case InnerSolver::spg:
      return "spg";
    case InnerSolver::pspg:
      return "pspg";
  }
  return "?";
}

InnerSolver parse_inner_solver(const std::string& name) {
  if (name == "truncated-newton" || name == "tn") return InnerSolver::truncated_newton;
  if (name == "spg") return InnerSolver::spg;
  if (name == "pspg") return InnerSolver::pspg;
  throw std::invalid_argument("unknown inner solver '" + name + "'");
}

void AlmConfig::validate() const {
  if (!(rho1 > 0.0)) throw std::invalid_argument("rho1 must be positive");
  if (!(gamma > 1.0)) throw std::invalid_argument("gamma must exceed 1");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
  if (!(safeguard.lambda_min < safeguard.lambda_max)) throw std::invalid_argument("need lambda_min < lambda_max");
  if (!(safeguard.mu_max > 0.0)) throw std::invalid_argument("mu_max must be positive");
  if (!(eps_opt > 0.0 && eps_feas > 0.0)) throw std::invalid_argument("KKT tolerances must be positive");
  if (max_outer == 0) throw std::invalid_argument("max_outer must be >= 1");
  if (!(drop_tol >= 0.0)) throw std::invalid_argument("drop_tol must be nonnegative");
  if (!(sigma_min > 0.0)) throw std::invalid_argument("sigma_min must be positive");
  thresholds.validate();
  inner.validate();
}

std::string to_string(AlmStatus status) {
  switch (status) {
    case AlmStatus::converged:
      return "converged";
    case AlmStatus::no_convergence:
      return "no-convergence";
    case AlmStatus::inner_failure:
      return "inner-failure";
    case AlmStatus::invalid_problem:
      return "invalid-problem";
  }
  return "?";
}

AlmReport alm_solve(const NlpProblem& p, const AlmConfig& cfg) {
  cfg.validate();
  p.validate();
  AlmReport rep;
  rep.x = project_box(p.x0, p.lower, p.upper);
  rep.multipliers.assign(p.m(), 0.0);
  if (cfg.solver == InnerSolver::truncated_newton && p.has_bounds()) {
    rep.status = AlmStatus::invalid_problem;
    rep.message = "truncated-newton requires an unbounded domain";
    return rep;
  }

  Vector lambda_bar(p.m(), 0.0);
  double rho = cfg.rho1;
  std::optional<double> prev_measure;
  StructuredPreconditioner pre(cfg.aux, cfg.drop_tol, cfg.thresholds, cfg.policy);

  for (std::size_t k = 1; k <= cfg.max_outer; ++k) {
    rep.outer_iterations = k;
    rep.rho_history.push_back(rho);
    auto F = [&](const Vector& x) { return eval_al(p, x, lambda_bar, rho); };
    auto G = [&](const Vector& x) { return eval_al_grad(p, x, lambda_bar, rho); };

    bool new_outer = true;
    std::optional<Vector> prev_x, prev_g;
    const std::size_t first_event = rep.events.size();
    auto model_at = [&](const Vector& x, const Vector& g) {
      std::optional<Secant> secant;
      if (cfg.mode == HessianMode::quasi_newton && prev_x) secant = Secant{sub(x, *prev_x), sub(g, *prev_g)};
      HessianModel model = hessian_model(p, x, lambda_bar, rho, cfg.mode, secant, cfg.thresholds, cfg.sigma_min);
      if (cfg.solver == InnerSolver::pspg && p.has_bounds()) restrict_to_free(model, binding_set(p, x, g));
      const PrecondEvent ev = pre.offer(model.m_part, model.precond_cols, new_outer);
      new_outer = false;
      prev_x = x;
      prev_g = g;
      InnerEvent ie;
      ie.outer = k;
      ie.inner = rep.events.size() - first_event + 1;
      ie.reason = ev.reason;
      ie.refreshed_aux = ev.refreshed_aux;
      ie.refreshed_b = ev.refreshed_b;
      ie.columns = ev.columns;
      ie.rho = rho;
      ie.m_change = ev.m_change;
      ie.v_change = ev.v_change;
      rep.events.push_back(ie);
      return model;
    };

    InnerResult inner;
    try {
      switch (cfg.solver) {
        case InnerSolver::truncated_newton:
          inner = newton_solve(
              F, G, rep.x, cfg.inner,
              [&](const Vector& x, const Vector& g) {
                const HessianModel model = model_at(x, g);
                return StepModel{model.op(), pre.as_operator()};
              },
              cfg.shadow_unpreconditioned);
          break;
        case InnerSolver::spg:
          inner = spg_solve(F, G, p.lower, p.upper, rep.x, cfg.inner);
          break;
        case InnerSolver::pspg:
          inner = spg_solve(F, G, p.lower, p.upper, rep.x, cfg.inner,
                            [&](const Vector& x, const Vector& g) -> std::optional<PrecondOperator> {
                              model_at(x, g);
                              return pre.as_operator();
                            });
          break;
      }
    } catch (const std::exception& e) {
      rep.status = AlmStatus::inner_failure;
      rep.message = std::string("outer iteration ") + std::to_string(k) + ": " + e.what();
      break;
    }

    for (std::size_t i = 0; i < inner.krylov_per_iteration.size() && first_event + i < rep.events.size(); ++i)
      rep.events[first_event + i].krylov = inner.krylov_per_iteration[i];
    rep.inner_iterations += inner.iterations;
    rep.krylov_precond += inner.krylov_iterations;
    rep.krylov_unprecond += inner.shadow_iterations;
    rep.direction_fallbacks += inner.fallbacks;
    rep.x = inner.x;
    rep.path.push_back(rep.x);

    const Vector c = p.c(rep.x);
    const Vector lambda = update_multipliers(p.kinds, lambda_bar, rho, c);
    rep.multipliers = lambda;
    rep.kkt = kkt_residuals(p, rep.x, lambda);
    if (rep.kkt.opt <= cfg.eps_opt && rep.kkt.comp <= cfg.eps_feas && rep.kkt.feas <= cfg.eps_feas) {
      rep.status = AlmStatus::converged;
      break;
    }

    const PenaltyUpdate pu = update_penalty(rho, prev_measure, p.kinds, c, lambda_bar, cfg.tau, cfg.gamma);
    rho = pu.rho;
    prev_measure = pu.measure;
    lambda_bar = safeguard(p.kinds, lambda, cfg.safeguard);
  }

  rep.f = p.f(rep.x);
  rep.aux_updates = pre.aux_updates();
  rep.b_updates = pre.b_updates();
  rep.aux_fallbacks = pre.aux_fallbacks();
  return rep;
}

}  // namespace almprec
