#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "almprec/aux_precond.hpp"
#include "almprec/column_set.hpp"
#include "almprec/krylov.hpp"
#include "almprec/sparse.hpp"
#include "almprec/structured_precond.hpp"

namespace almprec {

/// When the structured preconditioner is rebuilt.
///  - automatic: thresholds on ||dM||_1 and ||dV||_1 (decide_update)
///  - every_outer: full rebuild at the first inner iteration of each outer one
///  - once: assemble at the first request, never again
///  - always: full rebuild on every request
enum class UpdatePolicy { automatic, every_outer, once, always };

std::string to_string(UpdatePolicy policy);
UpdatePolicy parse_update_policy(const std::string& name);

struct PrecondEvent {
  bool refreshed_aux = false;
  bool refreshed_b = false;
  UpdateReason reason = UpdateReason::none;
  double m_change = 0.0;
  double v_change = 0.0;
  std::size_t columns = 0;
  std::size_t recomputed_columns = 0;
  std::size_t dropped_columns = 0;
};

/// Owns the snapshot (M, P_M, V, B) the current preconditioner was built from
/// and applies the update policy whenever a new Hessian model is offered.
class StructuredPreconditioner {
public:
  StructuredPreconditioner(AuxKind kind, double drop_tol, UpdateThresholds thresholds, UpdatePolicy policy);

  /// Offers the model at the current inner iterate. `new_outer` marks the first
  /// offer of an outer iteration.
  PrecondEvent offer(const SparseSymmetricMatrix& m, const ColumnSet& cols, bool new_outer);

  bool ready() const { return state_.has_value(); }
  Vector apply(const Vector& r) const;
  /// Operator view; references *this, which must outlive it.
  PrecondOperator as_operator() const;

  std::size_t aux_updates() const { return aux_updates_; }
  std::size_t b_updates() const { return b_updates_; }
  std::size_t aux_fallbacks() const { return aux_fallbacks_; }
  const ColumnSet* columns() const { return state_ ? &state_->cols : nullptr; }
  const AuxPrecond* aux() const { return state_ ? &state_->aux : nullptr; }

private:
  struct State {
    SparseSymmetricMatrix m;
    AuxPrecond aux;
    ColumnSet cols;
    BStore b;
  };

  AuxPrecond make_aux(const SparseSymmetricMatrix& m);
  // Assembles B, dropping columns that hit a denominator breakdown.
  BStore assemble_robust(const AuxPrecond& aux, ColumnSet& cols, const BStore* previous,
                         const ColumnSet* previous_cols, std::size_t& dropped);

  AuxKind kind_;
  double drop_tol_;
  UpdateThresholds thresholds_;
  UpdatePolicy policy_;
  std::optional<State> state_;
  std::size_t aux_updates_ = 0;
  std::size_t b_updates_ = 0;
  std::size_t aux_fallbacks_ = 0;
};

}  // namespace almprec
