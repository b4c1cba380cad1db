#include "almprec/precond_manager.hpp"

#include <stdexcept>

namespace almprec {

std::string to_string(UpdatePolicy policy) {
  switch (policy) {
    case UpdatePolicy::automatic:
      return "auto";
    case UpdatePolicy::every_outer:
      return "every-outer";
    case UpdatePolicy::once:
      return "once";
    case UpdatePolicy::always:
      return "always";
  }
  return "?";
}

UpdatePolicy parse_update_policy(const std::string& name) {
  if (name == "auto") return UpdatePolicy::automatic;
  if (name == "every-outer") return UpdatePolicy::every_outer;
  if (name == "once") return UpdatePolicy::once;
  if (name == "always") return UpdatePolicy::always;
  throw std::invalid_argument("unknown update policy '" + name + "'");
}

StructuredPreconditioner::StructuredPreconditioner(AuxKind kind, double drop_tol, UpdateThresholds thresholds,
                                                   UpdatePolicy policy)
    : kind_(kind), drop_tol_(drop_tol), thresholds_(thresholds), policy_(policy) {
  thresholds_.validate();
}

AuxPrecond StructuredPreconditioner::make_aux(const SparseSymmetricMatrix& m) {
  try {
    return build_aux(m, kind_, drop_tol_);
  } catch (const NotFactorizableError&) {
    // M is not definite enough for the configured P_M; identity keeps P SPD.
    ++aux_fallbacks_;
    return build_aux(m, AuxKind::identity);
  }
}

BStore StructuredPreconditioner::assemble_robust(const AuxPrecond& aux, ColumnSet& cols, const BStore* previous,
                                                 const ColumnSet* previous_cols, std::size_t& dropped) {
  for (;;) {
    try {
      if (previous && previous_cols) return reassemble_B(*previous, *previous_cols, aux, cols);
      return assemble_B(aux, cols);
    } catch (const DenominatorBreakdown& e) {
      ColumnSet kept(cols.n());
      for (std::size_t i = 0; i < cols.size(); ++i)
        if (i != e.position()) kept.push_back(cols.column(i), cols.sign(i), cols.label(i));
      cols = std::move(kept);
      ++dropped;
    }
  }
}

PrecondEvent StructuredPreconditioner::offer(const SparseSymmetricMatrix& m, const ColumnSet& cols, bool new_outer) {
  PrecondEvent ev;
  auto full_rebuild = [&](UpdateReason reason) {
    AuxPrecond aux = make_aux(m);
    ColumnSet c = cols;
    BStore b = assemble_robust(aux, c, nullptr, nullptr, ev.dropped_columns);
    ev.refreshed_aux = ev.refreshed_b = true;
    ev.reason = reason;
    ev.recomputed_columns = b.recomputed_columns();
    state_.emplace(State{m, std::move(aux), std::move(c), std::move(b)});
    ++aux_updates_;
  };

  if (!state_) {
    full_rebuild(UpdateReason::m_changed);
  } else {
    switch (policy_) {
      case UpdatePolicy::once:
        break;
      case UpdatePolicy::always:
        full_rebuild(UpdateReason::m_changed);
        break;
      case UpdatePolicy::every_outer:
        if (new_outer) full_rebuild(UpdateReason::m_changed);
        break;
      case UpdatePolicy::automatic: {
        const UpdateDecision d = decide_update(state_->m, m, state_->cols, cols, thresholds_);
        ev.m_change = d.m_change;
        ev.v_change = d.v_change;
        if (d.refresh_aux) {
          full_rebuild(d.reason);
        } else if (d.refresh_b) {
          ColumnSet c = cols;
          BStore b = assemble_robust(state_->aux, c, &state_->b, &state_->cols, ev.dropped_columns);
          ev.refreshed_b = true;
          ev.reason = d.reason;
          ev.recomputed_columns = b.recomputed_columns();
          state_->cols = std::move(c);
          state_->b = std::move(b);
          ++b_updates_;
        }
        break;
      }
    }
  }
  ev.columns = state_->cols.size();
  return ev;
}

Vector StructuredPreconditioner::apply(const Vector& r) const {
  if (!state_) throw std::logic_error("structured preconditioner used before assembly");
  return apply_structured(state_->b, state_->aux, state_->cols, r);
}

PrecondOperator StructuredPreconditioner::as_operator() const {
  if (!state_) throw std::logic_error("structured preconditioner used before assembly");
  return PrecondOperator{state_->aux.n(), [this](const Vector& r) { return apply(r); }};
}

}  // namespace almprec
