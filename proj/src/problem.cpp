#include "almprec/problem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace almprec {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

SparseSymmetricMatrix dense_hessian(std::size_t n, const Vector& dense) {
  return SparseSymmetricMatrix::from_dense(n, dense);
}

SparseSymmetricMatrix zero_hessian(std::size_t n) { return SparseSymmetricMatrix(n, {}); }

NlpProblem skeleton(std::string name, std::size_t n, std::vector<ConstraintKind> kinds, Vector x0) {
  NlpProblem p;
  p.name = std::move(name);
  p.n = n;
  p.kinds = std::move(kinds);
  p.lower.assign(n, -inf);
  p.upper.assign(n, inf);
  p.x0 = std::move(x0);
  return p;
}

// min (x1-1)^2 + (x2-2)^2  s.t.  x1 + x2 - 1 = 0
NlpProblem eq_qp() {
  NlpProblem p = skeleton("EQ-QP", 2, {ConstraintKind::equality}, {0.0, 0.0});
  p.f = [](const Vector& x) { return (x[0] - 1) * (x[0] - 1) + (x[1] - 2) * (x[1] - 2); };
  p.grad_f = [](const Vector& x) { return Vector{2 * (x[0] - 1), 2 * (x[1] - 2)}; };
  p.hess_f = [](const Vector&) { return SparseSymmetricMatrix::diagonal(Vector{2.0, 2.0}); };
  p.c = [](const Vector& x) { return Vector{x[0] + x[1] - 1}; };
  p.jacobian = [](const Vector&) { return std::vector<Vector>{{1.0, 1.0}}; };
  p.hess_c = [](std::size_t, const Vector&) { return zero_hessian(2); };
  p.x_star = Vector{0.0, 1.0};
  p.multipliers_star = Vector{2.0};
  p.f_star = 2.0;
  return p;
}

// min x1^2 + x2^2  s.t.  1 - x1 <= 0
NlpProblem ineq_qp() {
  NlpProblem p = skeleton("INEQ-QP", 2, {ConstraintKind::inequality}, {3.0, 1.0});
  p.f = [](const Vector& x) { return x[0] * x[0] + x[1] * x[1]; };
  p.grad_f = [](const Vector& x) { return Vector{2 * x[0], 2 * x[1]}; };
  p.hess_f = [](const Vector&) { return SparseSymmetricMatrix::diagonal(Vector{2.0, 2.0}); };
  p.c = [](const Vector& x) { return Vector{1 - x[0]}; };
  p.jacobian = [](const Vector&) { return std::vector<Vector>{{-1.0, 0.0}}; };
  p.hess_c = [](std::size_t, const Vector&) { return zero_hessian(2); };
  p.x_star = Vector{1.0, 0.0};
  p.multipliers_star = Vector{2.0};
  p.f_star = 1.0;
  return p;
}

// min ||x - (2,2)||^2  s.t.  x in [0,1]^2
NlpProblem box_qp() {
  NlpProblem p = skeleton("BOX-QP", 2, {}, {0.5, 0.5});
  p.lower = {0.0, 0.0};
  p.upper = {1.0, 1.0};
  p.f = [](const Vector& x) { return (x[0] - 2) * (x[0] - 2) + (x[1] - 2) * (x[1] - 2); };
  p.grad_f = [](const Vector& x) { return Vector{2 * (x[0] - 2), 2 * (x[1] - 2)}; };
  p.hess_f = [](const Vector&) { return SparseSymmetricMatrix::diagonal(Vector{2.0, 2.0}); };
  p.c = [](const Vector&) { return Vector{}; };
  p.jacobian = [](const Vector&) { return std::vector<Vector>{}; };
  p.hess_c = [](std::size_t, const Vector&) -> SparseSymmetricMatrix {
    throw std::out_of_range("BOX-QP has no constraints");
  };
  p.x_star = Vector{1.0, 1.0};
  p.multipliers_star = Vector{};
  p.f_star = 2.0;
  return p;
}

// Hock-Schittkowski 41.
NlpProblem hs41() {
  NlpProblem p = skeleton("HS41", 4, {ConstraintKind::equality}, {2.0, 2.0, 2.0, 2.0});
  p.lower = {0.0, 0.0, 0.0, 0.0};
  p.upper = {1.0, 1.0, 1.0, 2.0};
  p.f = [](const Vector& x) { return 2.0 - x[0] * x[1] * x[2]; };
  p.grad_f = [](const Vector& x) { return Vector{-x[1] * x[2], -x[0] * x[2], -x[0] * x[1], 0.0}; };
  p.hess_f = [](const Vector& x) {
    Vector h(16, 0.0);
    h[0 * 4 + 1] = h[1 * 4 + 0] = -x[2];
    h[0 * 4 + 2] = h[2 * 4 + 0] = -x[1];
    h[1 * 4 + 2] = h[2 * 4 + 1] = -x[0];
    return dense_hessian(4, h);
  };
  p.c = [](const Vector& x) { return Vector{x[0] + 2 * x[1] + 2 * x[2] - x[3]}; };
  p.jacobian = [](const Vector&) { return std::vector<Vector>{{1.0, 2.0, 2.0, -1.0}}; };
  p.hess_c = [](std::size_t, const Vector&) { return zero_hessian(4); };
  p.x_star = Vector{2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0};
  p.f_star = 52.0 / 27.0;
  return p;
}

// Hock-Schittkowski 48.
NlpProblem hs48() {
  NlpProblem p = skeleton("HS48", 5, {ConstraintKind::equality, ConstraintKind::equality},
                          {3.0, 5.0, -3.0, 2.0, -2.0});
  p.f = [](const Vector& x) {
    return (x[0] - 1) * (x[0] - 1) + (x[1] - x[2]) * (x[1] - x[2]) + (x[3] - x[4]) * (x[3] - x[4]);
  };
  p.grad_f = [](const Vector& x) {
    return Vector{2 * (x[0] - 1), 2 * (x[1] - x[2]), -2 * (x[1] - x[2]), 2 * (x[3] - x[4]), -2 * (x[3] - x[4])};
  };
  p.hess_f = [](const Vector&) {
    return SparseSymmetricMatrix(5, {{0, 0, 2.0}, {1, 1, 2.0}, {2, 1, -2.0}, {2, 2, 2.0}, {3, 3, 2.0},
                                     {4, 3, -2.0}, {4, 4, 2.0}});
  };
  p.c = [](const Vector& x) {
    return Vector{x[0] + x[1] + x[2] + x[3] + x[4] - 5, x[2] - 2 * (x[3] + x[4]) + 3};
  };
  p.jacobian = [](const Vector&) {
    return std::vector<Vector>{{1.0, 1.0, 1.0, 1.0, 1.0}, {0.0, 0.0, 1.0, -2.0, -2.0}};
  };
  p.hess_c = [](std::size_t, const Vector&) { return zero_hessian(5); };
  p.x_star = Vector{1.0, 1.0, 1.0, 1.0, 1.0};
  p.f_star = 0.0;
  return p;
}

// Hock-Schittkowski 63.
NlpProblem hs63() {
  NlpProblem p = skeleton("HS63", 3, {ConstraintKind::equality, ConstraintKind::equality}, {2.0, 2.0, 2.0});
  p.lower = {0.0, 0.0, 0.0};
  p.f = [](const Vector& x) {
    return 1000 - x[0] * x[0] - 2 * x[1] * x[1] - x[2] * x[2] - x[0] * x[1] - x[0] * x[2];
  };
  p.grad_f = [](const Vector& x) {
    return Vector{-2 * x[0] - x[1] - x[2], -4 * x[1] - x[0], -2 * x[2] - x[0]};
  };
  p.hess_f = [](const Vector&) {
    return SparseSymmetricMatrix(3, {{0, 0, -2.0}, {1, 0, -1.0}, {1, 1, -4.0}, {2, 0, -1.0}, {2, 2, -2.0}});
  };
  p.c = [](const Vector& x) {
    return Vector{8 * x[0] + 14 * x[1] + 7 * x[2] - 56, x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - 25};
  };
  p.jacobian = [](const Vector& x) {
    return std::vector<Vector>{{8.0, 14.0, 7.0}, {2 * x[0], 2 * x[1], 2 * x[2]}};
  };
  p.hess_c = [](std::size_t i, const Vector&) {
    return i == 0 ? zero_hessian(3) : SparseSymmetricMatrix::diagonal(Vector{2.0, 2.0, 2.0});
  };
  p.x_star = Vector{3.512118414, 0.2169881741, 3.552174034};
  p.f_star = 961.7151721;
  return p;
}

// Synthetic stand-in with ten variables, nine inequalities and one equality:
//   f(x) = 1/2 sum d_i (x_i - t_i)^2 + 1/4 sum (x_i - x_{i+1})^2 + 1/20 sum x_i^4
//   g_i(x) = x_i^2 + x_{i+1}^2 - 4 <= 0,  i = 0..8
//   h(x) = sum x_i - 12 = 0
// with d_i = 1 + i and targets alternating 2.5 / 0.5, so part of the
// inequalities are active at the solution.
NlpProblem c4_synthetic() {
  constexpr std::size_t n = 10;
  std::vector<ConstraintKind> kinds(9, ConstraintKind::inequality);
  kinds.push_back(ConstraintKind::equality);
  NlpProblem p = skeleton("C4-SYN", n, kinds, Vector(n, 0.5));
  auto weight = [](std::size_t i) { return 1.0 + static_cast<double>(i); };
  auto target = [](std::size_t i) { return i % 2 == 0 ? 2.5 : 0.5; };
  p.f = [=](const Vector& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += 0.5 * weight(i) * (x[i] - target(i)) * (x[i] - target(i)) + 0.05 * std::pow(x[i], 4);
      if (i + 1 < n) s += 0.25 * (x[i] - x[i + 1]) * (x[i] - x[i + 1]);
    }
    return s;
  };
  p.grad_f = [=](const Vector& x) {
    Vector g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] += weight(i) * (x[i] - target(i)) + 0.2 * x[i] * x[i] * x[i];
      if (i + 1 < n) {
        g[i] += 0.5 * (x[i] - x[i + 1]);
        g[i + 1] -= 0.5 * (x[i] - x[i + 1]);
      }
    }
    return g;
  };
  p.hess_f = [=](const Vector& x) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
      double d = weight(i) + 0.6 * x[i] * x[i];
      if (i + 1 < n) d += 0.5;
      if (i > 0) d += 0.5;
      t.push_back({i, i, d});
      if (i > 0) t.push_back({i, i - 1, -0.5});
    }
    return SparseSymmetricMatrix(n, std::move(t));
  };
  p.c = [=](const Vector& x) {
    Vector c(10, 0.0);
    for (std::size_t i = 0; i < 9; ++i) c[i] = x[i] * x[i] + x[i + 1] * x[i + 1] - 4.0;
    double s = 0.0;
    for (double v : x) s += v;
    c[9] = s - 12.0;
    return c;
  };
  p.jacobian = [=](const Vector& x) {
    std::vector<Vector> cols(10, Vector(n, 0.0));
    for (std::size_t i = 0; i < 9; ++i) {
      cols[i][i] = 2 * x[i];
      cols[i][i + 1] = 2 * x[i + 1];
    }
    cols[9].assign(n, 1.0);
    return cols;
  };
  p.hess_c = [=](std::size_t i, const Vector&) {
    if (i >= 9) return zero_hessian(n);
    return SparseSymmetricMatrix(n, {{i, i, 2.0}, {i + 1, i + 1, 2.0}});
  };
  return p;
}

}  // namespace

bool NlpProblem::has_bounds() const {
  for (std::size_t i = 0; i < n; ++i)
    if (std::isfinite(lower[i]) || std::isfinite(upper[i])) return true;
  return false;
}

void NlpProblem::validate() const {
  if (n == 0) throw std::invalid_argument(name + ": n must be >= 1");
  require_same_size(lower.size(), n, "NlpProblem lower");
  require_same_size(upper.size(), n, "NlpProblem upper");
  require_same_size(x0.size(), n, "NlpProblem x0");
  for (std::size_t i = 0; i < n; ++i)
    if (lower[i] > upper[i]) throw std::invalid_argument(name + ": lower > upper at " + std::to_string(i));
  if (!f || !grad_f || !hess_f || !c || !jacobian || !hess_c)
    throw std::invalid_argument(name + ": missing evaluation callback");
}

std::vector<std::string> problem_names() {
  return {"EQ-QP", "INEQ-QP", "BOX-QP", "HS41", "HS48", "HS63", "C4-SYN"};
}

NlpProblem make_problem(const std::string& name) {
  if (name == "EQ-QP") return eq_qp();
  if (name == "INEQ-QP") return ineq_qp();
  if (name == "BOX-QP") return box_qp();
  if (name == "HS41") return hs41();
  if (name == "HS48") return hs48();
  if (name == "HS63") return hs63();
  if (name == "C4-SYN") return c4_synthetic();
  throw std::invalid_argument("unknown problem '" + name + "'");
}

}  // namespace almprec
