#include "doctest.h"

#include <cmath>

#include "almprec/alm.hpp"
#include "almprec/bench.hpp"
#include "almprec/problem.hpp"
#include "oracle.hpp"

using namespace almprec;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// f = x^2 with one constraint c = a x + b of the given kind.
NlpProblem scalar_problem(ConstraintKind kind, double a, double b) {
  NlpProblem p;
  p.name = "scalar";
  p.n = 1;
  p.kinds = {kind};
  p.lower = {-inf};
  p.upper = {inf};
  p.x0 = {0.0};
  p.f = [](const Vector& x) { return x[0] * x[0]; };
  p.grad_f = [](const Vector& x) { return Vector{2 * x[0]}; };
  p.hess_f = [](const Vector&) { return SparseSymmetricMatrix::diagonal(Vector{2.0}); };
  p.c = [a, b](const Vector& x) { return Vector{a * x[0] + b}; };
  p.jacobian = [a](const Vector&) { return std::vector<Vector>{{a}}; };
  p.hess_c = [](std::size_t, const Vector&) { return SparseSymmetricMatrix(1, {}); };
  return p;
}

// Random convex QP with m linear equality constraints.
NlpProblem random_eq_qp(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  const auto q = random_spd(n, 0.3, seed);
  const Vector lin = oracle::random_vector(rng, n);
  std::vector<Vector> a;
  for (std::size_t i = 0; i < m; ++i) a.push_back(oracle::random_vector(rng, n));
  const Vector b = oracle::random_vector(rng, m);
  NlpProblem p;
  p.name = "random-qp";
  p.n = n;
  p.kinds.assign(m, ConstraintKind::equality);
  p.lower.assign(n, -inf);
  p.upper.assign(n, inf);
  p.x0.assign(n, 0.0);
  p.f = [q, lin](const Vector& x) { return 0.5 * dot(x, matvec(q, x)) + dot(lin, x); };
  p.grad_f = [q, lin](const Vector& x) { return add(matvec(q, x), lin); };
  p.hess_f = [q](const Vector&) { return q; };
  p.c = [a, b](const Vector& x) {
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = dot(a[i], x) + b[i];
    return c;
  };
  p.jacobian = [a](const Vector&) { return a; };
  p.hess_c = [n](std::size_t, const Vector&) { return SparseSymmetricMatrix(n, {}); };
  return p;
}

}  // namespace

TEST_CASE("eval_al examples") {
  const auto eq = scalar_problem(ConstraintKind::equality, 1.0, -1.0);
  CHECK(eval_al(eq, Vector{0.0}, Vector{0.0}, 2.0) == 1.0);
  CHECK(eval_al_grad(eq, Vector{0.0}, Vector{0.0}, 2.0) == Vector{-2.0});

  const auto in = scalar_problem(ConstraintKind::inequality, 1.0, 0.0);
  CHECK(eval_al(in, Vector{-1.0}, Vector{0.0}, 1.0) == 1.0);
  CHECK(eval_al_grad(in, Vector{-1.0}, Vector{0.0}, 1.0) == Vector{-2.0});
}

TEST_CASE("eval_al matches the symbolic expansion for equalities") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = random_eq_qp(6, 3, seed);
    Rng rng(seed + 7);
    const Vector x = oracle::random_vector(rng, 6), lam = oracle::random_vector(rng, 3);
    const double rho = 3.5;
    const Vector c = p.c(x);
    const double expect = p.f(x) + dot(c, lam) + 0.5 * rho * dot(c, c) + dot(lam, lam) / (2.0 * rho);
    CHECK(eval_al(p, x, lam, rho) == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("gradient matches central differences") {
  for (const auto& name : problem_names()) {
    const auto p = make_problem(name);
    Rng rng(13);
    for (int k = 0; k < 5; ++k) {
      Vector x = p.x0;
      for (double& v : x) v += rng.normal();
      Vector lam(p.m());
      for (std::size_t i = 0; i < p.m(); ++i)
        lam[i] = p.kinds[i] == ConstraintKind::inequality ? std::abs(rng.normal()) : rng.normal();
      const Vector g = eval_al_grad(p, x, lam, 10.0);
      Vector fd(p.n);
      for (std::size_t j = 0; j < p.n; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        fd[j] = (eval_al(p, xp, lam, 10.0) - eval_al(p, xm, lam, 10.0)) / (2 * h);
      }
      CHECK(norm2(sub(g, fd)) <= 1e-6 * std::max(1.0, norm2(g)));
    }
  }
}

TEST_CASE("newton model of a quadratic with a linear constraint") {
  const auto p = make_problem("EQ-QP");
  const auto model = hessian_model(p, Vector{0.3, 0.2}, Vector{1.0}, 5.0, HessianMode::newton, std::nullopt, {});
  CHECK(model.m_part == SparseSymmetricMatrix::diagonal(Vector{2.0, 2.0}));
  REQUIRE(model.cols.size() == 1);
  CHECK(model.cols.column(0)[0] == doctest::Approx(std::sqrt(5.0)));
  const Vector d{1.0, -2.0};
  const Vector expect{2.0 + 5.0 * (-1.0), -4.0 + 5.0 * (-1.0)};
  CHECK(oracle::rel_err(model.apply(d), expect) <= 1e-15);
}

TEST_CASE("quasi-newton cold start uses sigma_min and constraint columns only") {
  const auto p = make_problem("HS48");
  const auto model = hessian_model(p, p.x0, Vector(p.m(), 0.0), 10.0, HessianMode::quasi_newton, std::nullopt, {});
  CHECK(model.sigma == 1e-8);
  CHECK_FALSE(model.cols.has_bfgs());
  CHECK_FALSE(model.correction_applied);
}

TEST_CASE("quasi-newton model with a secant pair") {
  const auto p = make_problem("C4-SYN");
  const Vector x = p.x0, lam(p.m(), 0.0);
  Vector x2 = x;
  x2[0] += 0.1;
  x2[2] -= 0.05;
  const Secant sec{sub(x2, x), sub(eval_al_grad(p, x2, lam, 10.0), eval_al_grad(p, x, lam, 10.0))};
  const auto model = hessian_model(p, x2, lam, 10.0, HessianMode::quasi_newton, sec, {});
  CHECK(model.sigma >= 1e-8);
  CHECK(model.correction_applied);
  CHECK(model.cols.has_bfgs());
  // M_part = hess f + sigma I
  const auto hf = p.hess_f(x2);
  CHECK(norm1_diff(model.m_part, hf.shifted(model.sigma)) <= 1e-12);

  const Secant zero{Vector(p.n, 0.0), Vector(p.n, 0.0)};
  const auto z = hessian_model(p, x2, lam, 10.0, HessianMode::quasi_newton, zero, {});
  CHECK(z.sigma == 1e-8);
  CHECK_FALSE(z.cols.has_bfgs());
}

TEST_CASE("shifted multipliers agree between gradient and model") {
  const auto p = make_problem("C4-SYN");
  Rng rng(3);
  Vector x = p.x0;
  for (double& v : x) v += 0.5 * rng.normal();
  Vector lam(p.m());
  for (double& v : lam) v = std::abs(rng.normal());
  const double rho = 7.0;
  const auto model = hessian_model(p, x, lam, rho, HessianMode::newton, std::nullopt, {});
  Vector g = p.grad_f(x);
  const auto jac = p.jacobian(x);
  for (std::size_t i = 0; i < p.m(); ++i) axpy(model.lambda_hat[i], jac[i], g);
  CHECK(oracle::rel_err(g, eval_al_grad(p, x, lam, rho)) <= 1e-14);
  for (std::size_t i = 0; i < p.m(); ++i)
    if (p.kinds[i] == ConstraintKind::inequality) CHECK(model.lambda_hat[i] >= 0.0);
}

TEST_CASE("multiplier update examples") {
  const auto a = update_multipliers(Vector{1.0}, Vector{1.0}, 10.0, Vector{0.2}, Vector{-0.5});
  CHECK(a.lambda[0] == doctest::Approx(3.0));
  CHECK(a.mu[0] == 0.0);
  const auto b = update_multipliers(Vector{}, Vector{0.0}, 10.0, Vector{}, Vector{0.0});
  CHECK(b.mu[0] == 0.0);
  const auto u = update_multipliers({ConstraintKind::equality, ConstraintKind::inequality}, Vector{1.0, 1.0}, 10.0,
                                    Vector{0.2, -0.5});
  CHECK(u[0] == doctest::Approx(3.0));
  CHECK(u[1] == 0.0);
}

TEST_CASE("penalty update examples") {
  const auto v = update_penalty(10.0, std::nullopt, Vector{}, Vector{-0.5}, Vector{1.0}, 0.5, 10.0);
  CHECK(v.measure == doctest::Approx(0.1));
  CHECK(v.rho == 10.0);
  CHECK_FALSE(v.increased);
  const auto keep = update_penalty(10.0, 1.0, Vector{0.4}, Vector{}, Vector{}, 0.5, 10.0);
  CHECK(keep.rho == 10.0);
  const auto grow = update_penalty(10.0, 1.0, Vector{0.6}, Vector{}, Vector{}, 0.5, 10.0);
  CHECK(grow.rho == 100.0);
  CHECK(grow.increased);
}

TEST_CASE("safeguard examples") {
  Safeguard sg;
  sg.lambda_max = 1e8;
  const auto a = safeguard(Vector{1e9}, Vector{-0.1}, sg);
  CHECK(a.lambda[0] == 1e8);
  CHECK(a.mu[0] == 0.0);
  const auto b = safeguard(Vector{-3.0, 4.0}, Vector{0.5}, sg);
  CHECK(b.lambda == Vector{-3.0, 4.0});
  CHECK(b.mu == Vector{0.5});
}

TEST_CASE("KKT residuals examples") {
  const auto p = make_problem("EQ-QP");
  const auto k = kkt_residuals(p, Vector{0.0, 1.0}, Vector{2.0});
  CHECK(k.opt <= 1e-12);
  CHECK(k.comp <= 1e-12);
  CHECK(k.feas <= 1e-12);
  const auto eq = scalar_problem(ConstraintKind::equality, 1.0, -1.0);
  CHECK(kkt_residuals(eq, Vector{0.0}, Vector{0.0}).feas == 1.0);
}

TEST_CASE("KKT complementarity and feasibility match a direct re-evaluation") {
  for (const auto& name : problem_names()) {
    const auto p = make_problem(name);
    Rng rng(19);
    Vector x = p.x0;
    for (double& v : x) v += rng.normal();
    Vector lam(p.m());
    for (double& v : lam) v = std::abs(rng.normal());
    const Vector c = p.c(x);
    double comp = 0.0, feas = 0.0;
    for (std::size_t i = 0; i < p.m(); ++i) {
      if (p.kinds[i] == ConstraintKind::equality) {
        comp = std::max(comp, std::abs(c[i]));
        feas = std::max(feas, std::abs(c[i]));
      } else {
        comp = std::max(comp, std::abs(std::min(-c[i], lam[i])));
        feas = std::max(feas, std::max(0.0, c[i]));
      }
    }
    const auto k = kkt_residuals(p, x, lam);
    CHECK(k.comp == comp);
    CHECK(k.feas == feas);
  }
}

TEST_CASE("alm solves the analytic examples") {
  AlmConfig cfg;
  {
    const auto r = alm_solve(make_problem("EQ-QP"), cfg);
    REQUIRE(r.converged());
    CHECK(std::abs(r.x[0]) <= 1e-5);
    CHECK(std::abs(r.x[1] - 1.0) <= 1e-5);
    CHECK(std::abs(r.multipliers[0] - 2.0) <= 1e-5);
    CHECK(std::abs(r.f - 2.0) <= 1e-5);
  }
  {
    const auto r = alm_solve(make_problem("INEQ-QP"), cfg);
    REQUIRE(r.converged());
    CHECK(std::abs(r.x[0] - 1.0) <= 1e-5);
    CHECK(std::abs(r.x[1]) <= 1e-5);
    CHECK(std::abs(r.multipliers[0] - 2.0) <= 1e-5);
  }
  {
    const auto r = alm_solve(make_problem("BOX-QP"), cfg);
    REQUIRE(r.converged());
    CHECK(r.x == Vector{1.0, 1.0});
  }
}

TEST_CASE("alm invariants hold on every built-in problem") {
  for (const auto& name : problem_names()) {
    const auto p = make_problem(name);
    for (auto solver : {InnerSolver::spg, InnerSolver::pspg}) {
      AlmConfig cfg;
      cfg.solver = solver;
      const auto r = alm_solve(p, cfg);
      INFO(name << " " << to_string(solver));
      CHECK(r.converged());
      CHECK(r.kkt.feas <= cfg.eps_feas);
      for (std::size_t k = 1; k < r.rho_history.size(); ++k) CHECK(r.rho_history[k] >= r.rho_history[k - 1]);
      for (std::size_t i = 0; i < p.m(); ++i)
        if (p.kinds[i] == ConstraintKind::inequality) CHECK(r.multipliers[i] >= 0.0);
      if (p.f_star) CHECK(std::abs(r.f - *p.f_star) <= 1e-5 * std::max(1.0, std::abs(*p.f_star)));
    }
  }
}

TEST_CASE("alm is deterministic") {
  AlmConfig cfg;
  cfg.solver = InnerSolver::truncated_newton;
  cfg.mode = HessianMode::quasi_newton;
  const auto p = make_problem("C4-SYN");
  const auto a = alm_solve(p, cfg);
  const auto b = alm_solve(p, cfg);
  CHECK(a.path == b.path);
  CHECK(a.x == b.x);
  CHECK(a.inner_iterations == b.inner_iterations);
}

TEST_CASE("truncated newton is rejected on bounded problems") {
  AlmConfig cfg;
  cfg.solver = InnerSolver::truncated_newton;
  const auto r = alm_solve(make_problem("BOX-QP"), cfg);
  CHECK(r.status == AlmStatus::invalid_problem);
}

TEST_CASE("outer iteration limit reports no convergence") {
  AlmConfig cfg;
  cfg.max_outer = 1;
  const auto r = alm_solve(make_problem("HS63"), cfg);
  CHECK(r.status == AlmStatus::no_convergence);
}

TEST_CASE("invalid configurations are rejected") {
  AlmConfig cfg;
  cfg.gamma = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg = AlmConfig{};
  cfg.tau = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg = AlmConfig{};
  cfg.safeguard.lambda_min = 1.0;
  cfg.safeguard.lambda_max = 0.0;
  CHECK_THROWS(cfg.validate());
  CHECK_THROWS(make_problem("HS999"));
  CHECK_THROWS(parse_inner_solver("newton-cg"));
  CHECK(parse_hessian_mode("QN") == HessianMode::quasi_newton);
}
