#include "almprec/inner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace almprec {

void InnerConfig::validate() const {
  if (!(grad_tol > 0.0)) throw std::invalid_argument("inner grad_tol must be positive");
  if (max_iter == 0) throw std::invalid_argument("inner max_iter must be >= 1");
  if (memory == 0) throw std::invalid_argument("inner memory must be >= 1");
  if (!(alpha_min > 0.0 && alpha_min < alpha_max)) throw std::invalid_argument("need 0 < alpha_min < alpha_max");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("inner gamma must lie in (0,1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("inner backtrack must lie in (0,1)");
}

std::string to_string(InnerStatus status) {
  switch (status) {
    case InnerStatus::converged:
      return "converged";
    case InnerStatus::max_iterations:
      return "max-iterations";
    case InnerStatus::line_search_failure:
      return "line-search-failure";
  }
  return "?";
}

Vector project_box(const Vector& x, const Vector& lower, const Vector& upper) {
  require_same_size(x.size(), lower.size(), "project_box");
  require_same_size(x.size(), upper.size(), "project_box");
  Vector p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (lower[i] > upper[i]) throw std::invalid_argument("project_box: lower > upper");
    p[i] = std::clamp(x[i], lower[i], upper[i]);
  }
  return p;
}

double spectral_steplength(const Vector& s, const Vector& y, double alpha_min, double alpha_max) {
  const double sy = dot(s, y);
  if (!(sy > 0.0)) return alpha_max;
  return std::clamp(dot(s, s) / sy, alpha_min, alpha_max);
}

double projected_gradient_norm(const Vector& x, const Vector& g, const Vector& lower, const Vector& upper) {
  return norm_inf(sub(project_box(sub(x, g), lower, upper), x));
}

namespace {

// Armijo test, also passing steps whose predicted and actual changes are both
// below the roundoff level of f.
bool sufficient_decrease(double f_new, double f_ref, double f_cur, double gamma, double t, double gd) {
  if (!std::isfinite(f_new)) return false;
  if (f_new <= f_ref + gamma * t * gd) return true;
  const double noise = 1e-14 * (1.0 + std::abs(f_cur));
  return -t * gd <= noise && f_new <= f_cur + noise;
}

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + ": non-finite objective value");
  return v;
}

}  // namespace

InnerResult spg_solve(const ObjectiveFn& f, const GradientFn& grad, const Vector& lower, const Vector& upper,
                      const Vector& x0, const InnerConfig& cfg, const PrecondProvider& provider) {
  cfg.validate();
  InnerResult res;
  res.x = project_box(x0, lower, upper);
  res.f = finite_or_throw(f(res.x), "spg");
  res.grad = grad(res.x);
  std::deque<double> history{res.f};

  double pg = projected_gradient_norm(res.x, res.grad, lower, upper);
  double alpha = std::clamp(pg > 0.0 ? 1.0 / pg : cfg.alpha_max, cfg.alpha_min, cfg.alpha_max);
  Vector last_s, last_y;
  double last_sds = 0.0;
  double alpha_d = 1.0;

  while (true) {
    if (pg <= cfg.grad_tol) {
      res.status = InnerStatus::converged;
      return res;
    }
    if (res.iterations >= cfg.max_iter) {
      res.status = InnerStatus::max_iterations;
      return res;
    }

    Vector d;
    double gd = 0.0;
    bool preconditioned = false;
    if (provider) {
      if (auto dop = provider(res.x, res.grad)) {
        if (!last_s.empty()) {
          const double sy = dot(last_s, last_y);
          double num = last_sds;
          if (!(num > 0.0)) {
            num = sy;
            const double ydy = dot(last_y, (*dop)(last_y));
            if (ydy > 0.0) num = sy * sy / ydy;
          }
          alpha_d = sy > 0.0 && num > 0.0 ? std::clamp(num / sy, cfg.alpha_min, cfg.alpha_max) : 1.0;
        }
        d = sub(project_box(sub(res.x, scaled(alpha_d, (*dop)(res.grad))), lower, upper), res.x);
        gd = dot(res.grad, d);
        if (!(gd < 0.0) || !all_finite(d)) {
          d.clear();
          ++res.fallbacks;
        } else {
          preconditioned = true;
        }
      }
    }
    if (d.empty()) {
      d = sub(project_box(sub(res.x, scaled(alpha, res.grad)), lower, upper), res.x);
      gd = dot(res.grad, d);
    }

    const double f_ref = *std::max_element(history.begin(), history.end());
    double t = 1.0;
    Vector x_new;
    double f_new = 0.0;
    bool accepted = false;
    for (std::size_t bt = 0; bt <= cfg.max_backtracks; ++bt) {
      x_new = res.x;
      axpy(t, d, x_new);
      f_new = f(x_new);
      if (sufficient_decrease(f_new, f_ref, res.f, cfg.gamma, t, gd)) {
        accepted = true;
        break;
      }
      t *= cfg.backtrack;
    }
    ++res.iterations;
    if (!accepted) {
      res.status = InnerStatus::line_search_failure;
      return res;
    }

    Vector g_new = grad(x_new);
    last_s = sub(x_new, res.x);
    last_y = sub(g_new, res.grad);
    // s^T D^{-1} s for an unclipped step s = -t a D g.
    last_sds = preconditioned ? -t * alpha_d * dot(last_s, res.grad) : 0.0;
    alpha = spectral_steplength(last_s, last_y, cfg.alpha_min, cfg.alpha_max);
    res.x = std::move(x_new);
    res.f = f_new;
    res.grad = std::move(g_new);
    history.push_back(res.f);
    if (history.size() > cfg.memory) history.pop_front();
    pg = projected_gradient_norm(res.x, res.grad, lower, upper);
  }
}

NewtonStep truncated_newton_step(const LinearOperator& hessian, const Vector& grad,
                                 const std::optional<PrecondOperator>& precond, const InnerConfig& cfg,
                                 bool shadow) {
  require_same_size(hessian.n, grad.size(), "truncated_newton_step");
  NewtonStep step;
  const Vector rhs = scaled(-1.0, grad);

  auto solve = [&](const std::optional<PrecondOperator>& p, bool& minres) {
    try {
      return pcg(hessian, p, rhs, cfg.krylov);
    } catch (const BreakdownError& e) {
      if (std::string(e.what()) != "indefinite operator") throw;
      minres = true;
      return pminres(hessian, p, rhs, cfg.krylov);
    }
  };

  KrylovReport rep;
  try {
    rep = solve(precond, step.used_minres);
  } catch (const BreakdownError&) {
    step.used_minres = false;
    rep = solve(std::nullopt, step.used_minres);
  }
  step.d = std::move(rep.solution);
  step.krylov_iterations = rep.iterations;
  step.krylov_converged = rep.converged;

  if (shadow) {
    bool unused = false;
    try {
      step.shadow_iterations = solve(std::nullopt, unused).iterations;
    } catch (const BreakdownError&) {
      step.shadow_iterations = 0;
    }
  }

  if (!(dot(step.d, grad) < 0.0) || !all_finite(step.d)) {
    step.d = rhs;
    step.fell_back = true;
  }
  return step;
}

InnerResult newton_solve(const ObjectiveFn& f, const GradientFn& grad, const Vector& x0, const InnerConfig& cfg,
                         const ModelProvider& model, bool shadow) {
  cfg.validate();
  InnerResult res;
  res.x = x0;
  res.f = finite_or_throw(f(res.x), "truncated newton");
  res.grad = grad(res.x);

  while (true) {
    if (norm_inf(res.grad) <= cfg.grad_tol) {
      res.status = InnerStatus::converged;
      return res;
    }
    if (res.iterations >= cfg.max_iter) {
      res.status = InnerStatus::max_iterations;
      return res;
    }

    const StepModel sm = model(res.x, res.grad);
    const NewtonStep step = truncated_newton_step(sm.hessian, res.grad, sm.precond, cfg, shadow);
    res.krylov_per_iteration.push_back(step.krylov_iterations);
    res.krylov_iterations += step.krylov_iterations;
    res.shadow_iterations += step.shadow_iterations;
    if (step.fell_back) ++res.fallbacks;

    const double gd = dot(res.grad, step.d);
    double t = 1.0;
    Vector x_new;
    double f_new = 0.0;
    bool accepted = false;
    for (std::size_t bt = 0; bt <= cfg.max_backtracks; ++bt) {
      x_new = res.x;
      axpy(t, step.d, x_new);
      f_new = f(x_new);
      if (sufficient_decrease(f_new, res.f, res.f, cfg.gamma, t, gd)) {
        accepted = true;
        break;
      }
      t *= cfg.backtrack;
    }
    ++res.iterations;
    if (!accepted) {
      res.status = InnerStatus::line_search_failure;
      return res;
    }
    res.x = std::move(x_new);
    res.f = f_new;
    res.grad = grad(res.x);
  }
}

}  // namespace almprec
