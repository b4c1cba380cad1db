#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "almprec/aux_precond.hpp"
#include "almprec/column_set.hpp"
#include "almprec/linalg.hpp"
#include "almprec/sparse.hpp"

namespace almprec {

/// Raised when a B store is applied with columns or P_M it was not built from.
class StaleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Miller-recursion breakdown: 1 + s_i v_i^T P_{i-1}^{-1} v_i is (near) zero.
class DenominatorBreakdown : public BreakdownError {
public:
  DenominatorBreakdown(const std::string& msg, std::size_t position, ColumnLabel label)
      : BreakdownError(msg), position_(position), label_(label) {}
  std::size_t position() const { return position_; }
  const ColumnLabel& label() const { return label_; }

private:
  std::size_t position_;
  ColumnLabel label_;
};

/// Guard used for every Sherman-Morrison denominator: eps_d = 1e-12 (1 + ||v||^2).
inline double denominator_guard(double v_norm_sq) { return 1e-12 * (1.0 + v_norm_sq); }

/// (M + rho v v^T)^{-1} r through one Sherman-Morrison step on top of P_M.
Vector apply_rank1(const AuxPrecond& aux, const Vector& v, double rho, const Vector& r);

/// Storage matrix of the double recursion. Column i holds P_{i-1}^{-1} v_i with
/// P_0 = P_M and P_i = P_{i-1} + s_i v_i v_i^T.
class BStore {
public:
  std::size_t n() const { return n_; }
  std::size_t m() const { return b_.size(); }
  const Vector& column(std::size_t i) const { return b_[i]; }
  const std::vector<double>& denominators() const { return denoms_; }
  const std::vector<int>& signs() const { return signs_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  /// Columns recomputed by the build that produced this store.
  std::size_t recomputed_columns() const { return recomputed_; }

  friend BStore assemble_B(const AuxPrecond& aux, const ColumnSet& cols);
  friend BStore reassemble_B(const BStore& previous, const ColumnSet& previous_cols, const AuxPrecond& aux,
                             const ColumnSet& cols);

private:
  std::size_t n_ = 0;
  std::vector<Vector> b_;
  std::vector<double> denoms_;
  std::vector<int> signs_;
  std::vector<std::uint64_t> column_hashes_;
  std::uint64_t fingerprint_ = 0;
  std::size_t recomputed_ = 0;
};

std::uint64_t structured_fingerprint(const AuxPrecond& aux, const ColumnSet& cols);

/// First pass: builds B for P = P_M^{-1}-approximated M + sum_i s_i v_i v_i^T.
BStore assemble_B(const AuxPrecond& aux, const ColumnSet& cols);

/// Rebuilds only the suffix of B after the longest prefix of columns shared
/// with `previous_cols`. Falls back to a full build when P_M changed.
BStore reassemble_B(const BStore& previous, const ColumnSet& previous_cols, const AuxPrecond& aux,
                    const ColumnSet& cols);

/// Second pass: h_0 = P_M r, h_i = h_{i-1} - s_i (v_i^T h_{i-1} / d_i) B_i.
Vector apply_structured(const BStore& bs, const AuxPrecond& aux, const ColumnSet& cols, const Vector& r);

struct UpdateThresholds {
  double delta_m = 0.1;
  double delta_v = 0.01;
  double eps_v = 1e-3;
  double eps_c = 1e-3;

  void validate() const;
};

enum class UpdateReason { none, m_changed, v_changed, forced_bfgs };

std::string to_string(UpdateReason reason);

struct UpdateDecision {
  bool refresh_aux = false;
  bool refresh_b = false;
  UpdateReason reason = UpdateReason::none;
  double m_change = 0.0;
  double v_change = 0.0;
};

/// Max over shared labels of the column 1-norm change.
double column_set_change(const ColumnSet& prev, const ColumnSet& next);

UpdateDecision decide_update(const SparseSymmetricMatrix& prev_m, const SparseSymmetricMatrix& new_m,
                             const ColumnSet& prev_v, const ColumnSet& new_v, const UpdateThresholds& th);

enum class ConstraintKind { equality, inequality };

/// Secant data for the BFGS augmentation. `hplus` applies the spectrally
/// corrected model (H-hat + sigma I) to a vector.
struct SecantPair {
  Vector s;
  Vector y;
  std::function<Vector(const Vector&)> hplus;
};

struct ColumnSetBuild {
  ColumnSet cols;
  bool correction_applied = false;
  bool correction_skipped = false;
};

/// Infeasibility measure |c| (equality) or max(0, c) (inequality).
double infeasibility(ConstraintKind kind, double c);

/// Active-set filter, relaxation, sqrt(rho) scaling, ordering and BFGS augmentation.
ColumnSetBuild build_column_set(std::size_t n, const std::vector<Vector>& jacobian_cols, const std::vector<ConstraintKind>& kinds,
                                const Vector& c_vals, const Vector& multipliers, double rho,
                                const UpdateThresholds& th, const std::optional<SecantPair>& secant);

}  // namespace almprec
