#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "almprec/linalg.hpp"
#include "almprec/sparse.hpp"
#include "almprec/structured_precond.hpp"

namespace almprec {

/// minimize f(x) s.t. c_i(x) = 0 (i in E), c_i(x) <= 0 (i in I), lower <= x <= upper.
///
/// Evaluation callbacks must be pure. Constraint gradients are returned as a
/// list of dense columns, one per constraint.
struct NlpProblem {
  std::string name;
  std::size_t n = 0;
  std::vector<ConstraintKind> kinds;
  Vector lower;
  Vector upper;
  Vector x0;

  std::function<double(const Vector&)> f;
  std::function<Vector(const Vector&)> grad_f;
  std::function<SparseSymmetricMatrix(const Vector&)> hess_f;
  std::function<Vector(const Vector&)> c;
  std::function<std::vector<Vector>(const Vector&)> jacobian;
  std::function<SparseSymmetricMatrix(std::size_t, const Vector&)> hess_c;

  /// Reference optimum when known.
  std::optional<Vector> x_star;
  std::optional<Vector> multipliers_star;
  std::optional<double> f_star;

  std::size_t m() const { return kinds.size(); }
  bool has_bounds() const;
  void validate() const;
};

/// Names accepted by make_problem, in library order.
std::vector<std::string> problem_names();

/// EQ-QP, INEQ-QP, BOX-QP, HS41, HS48, HS63, C4-SYN.
NlpProblem make_problem(const std::string& name);

}  // namespace almprec
