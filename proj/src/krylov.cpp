#include "almprec/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace almprec {

namespace {

std::size_t resolve_maxit(const KrylovOptions& opts, std::size_t n) {
  if (opts.tol <= 0.0) throw std::invalid_argument("krylov: tol must be positive");
  return opts.maxit == 0 ? 10 * n : opts.maxit;
}

double true_residual(const LinearOperator& op, const Vector& b, const Vector& x) {
  return norm2(sub(b, op(x)));
}

}  // namespace

KrylovReport pcg(const LinearOperator& op, const std::optional<PrecondOperator>& precond, const Vector& b,
                 const KrylovOptions& opts) {
  require_same_size(b.size(), op.n, "pcg");
  const std::size_t maxit = resolve_maxit(opts, op.n);

  KrylovReport rep;
  rep.solution.assign(op.n, 0.0);
  const double bnorm = norm2(b);
  rep.residual_history.push_back(bnorm);
  if (bnorm == 0.0) {
    rep.converged = true;
    return rep;
  }
  const double target = opts.tol * bnorm;

  Vector r = b;
  Vector z = precond ? (*precond)(r) : r;
  double rz = dot(r, z);
  if (rz < 0.0) throw BreakdownError("indefinite preconditioner");
  Vector p = z;

  for (std::size_t it = 1; it <= maxit; ++it) {
    const Vector ap = op(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) throw BreakdownError("indefinite operator");
    const double alpha = rz / pap;
    axpy(alpha, p, rep.solution);
    axpy(-alpha, ap, r);

    const double res = true_residual(op, b, rep.solution);
    rep.residual_history.push_back(res);
    rep.iterations = it;
    if (res <= target) {
      rep.converged = true;
      break;
    }

    z = precond ? (*precond)(r) : r;
    const double rz_next = dot(r, z);
    if (rz_next < 0.0) throw BreakdownError("indefinite preconditioner");
    if (rz_next == 0.0) break;
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  return rep;
}

KrylovReport pminres(const LinearOperator& op, const std::optional<PrecondOperator>& precond, const Vector& b,
                     const KrylovOptions& opts) {
  require_same_size(b.size(), op.n, "pminres");
  const std::size_t n = op.n;
  const std::size_t maxit = resolve_maxit(opts, n);
  const double eps = std::numeric_limits<double>::epsilon();

  KrylovReport rep;
  rep.solution.assign(n, 0.0);
  const double bnorm = norm2(b);
  rep.residual_history.push_back(bnorm);
  if (bnorm == 0.0) {
    rep.converged = true;
    return rep;
  }
  const double target = opts.tol * bnorm;
  auto apply_precond = [&](const Vector& v) { return precond ? (*precond)(v) : v; };

  Vector r1 = b;
  Vector y = apply_precond(r1);
  double beta1 = dot(r1, y);
  if (beta1 < 0.0) throw BreakdownError("indefinite preconditioner");
  if (beta1 == 0.0) {
    rep.converged = true;
    return rep;
  }
  beta1 = std::sqrt(beta1);

  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  Vector w(n, 0.0), w1(n, 0.0), w2(n, 0.0);
  Vector r2 = r1;
  Vector& x = rep.solution;

  for (std::size_t it = 1; it <= maxit; ++it) {
    const double s = 1.0 / beta;
    const Vector v = scaled(s, y);
    y = op(v);
    if (it >= 2) axpy(-beta / oldb, r1, y);
    const double alfa = dot(v, y);
    axpy(-alfa / beta, r2, y);
    r1 = r2;
    r2 = y;
    y = apply_precond(r2);
    oldb = beta;
    beta = dot(r2, y);
    if (beta < 0.0) throw BreakdownError("indefinite preconditioner");
    beta = std::sqrt(beta);

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;

    double gamma = std::hypot(gbar, beta);
    gamma = std::max(gamma, eps);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
      x[i] += phi * w[i];
    }

    const double res = true_residual(op, b, x);
    rep.residual_history.push_back(res);
    rep.iterations = it;
    if (res <= target) {
      rep.converged = true;
      break;
    }
    // Krylov space exhausted; further steps cannot improve the residual.
    if (beta <= eps * beta1) break;
  }
  return rep;
}

}  // namespace almprec
