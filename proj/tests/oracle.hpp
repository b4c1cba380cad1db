#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>

#include "almprec/bench.hpp"
#include "almprec/column_set.hpp"
#include "almprec/krylov.hpp"
#include "almprec/linalg.hpp"
#include "almprec/sparse.hpp"

// Dense reference computations shared by the unit and acceptance tests.
namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat dense(const almprec::SparseSymmetricMatrix& a) {
  const std::size_t n = a.n();
  Mat m = Mat::Zero(n, n);
  for (const auto& t : a.triplets()) {
    m(t.row, t.col) = t.value;
    m(t.col, t.row) = t.value;
  }
  return m;
}

inline Vec vec(const almprec::Vector& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

inline almprec::Vector to_std(const Vec& v) { return almprec::Vector(v.data(), v.data() + v.size()); }

inline Mat with_columns(const Mat& m, const almprec::ColumnSet& cols) {
  Mat h = m;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const Vec v = vec(cols.column(i));
    h += cols.sign(i) * v * v.transpose();
  }
  return h;
}

inline almprec::LinearOperator op(const Mat& a) {
  return almprec::LinearOperator{static_cast<std::size_t>(a.rows()),
                                 [a](const almprec::Vector& x) { return to_std(a * vec(x)); }};
}

inline almprec::Vector random_vector(almprec::Rng& rng, std::size_t n) {
  almprec::Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

inline double rel_err(const almprec::Vector& a, const almprec::Vector& b) {
  return (vec(a) - vec(b)).norm() / std::max(vec(b).norm(), 1e-300);
}

// Dense SPD matrix with eigenvalues in [1, 1 + spread].
inline Mat random_dense_spd(almprec::Rng& rng, std::size_t n, double spread = 10.0) {
  Mat g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(g);
  const Mat q = qr.householderQ();
  Vec d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = 1.0 + spread * rng.uniform();
  return q * d.asDiagonal() * q.transpose();
}

}  // namespace oracle
