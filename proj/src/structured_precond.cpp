#include "almprec/structured_precond.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace almprec {

Vector apply_rank1(const AuxPrecond& aux, const Vector& v, double rho, const Vector& r) {
  require_same_size(v.size(), aux.n(), "apply_rank1");
  if (!(rho > 0.0)) throw std::invalid_argument("apply_rank1: rho must be positive");
  const double vv = dot(v, v);
  if (vv == 0.0) throw std::invalid_argument("apply_rank1: v must be non-null");
  const Vector a = aux.apply(r);
  const Vector b = aux.apply(v);
  const double denom = 1.0 + rho * dot(v, b);
  if (std::abs(denom) < denominator_guard(rho * vv)) throw BreakdownError("denominator breakdown");
  Vector h = a;
  axpy(-rho * dot(v, a) / denom, b, h);
  return h;
}

std::uint64_t structured_fingerprint(const AuxPrecond& aux, const ColumnSet& cols) {
  const std::uint64_t id = aux.id();
  std::uint64_t h = fnv1a(&id, sizeof id);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const std::uint64_t ch = cols.column_hash(i);
    h = fnv1a(&ch, sizeof ch, h);
  }
  return h;
}

namespace {

// Runs steps [first, m) of the first pass. Columns [0, first) of `b` are
// final; columns [first, m) must hold P_M^{-1} v_j on entry.
void run_first_pass(std::vector<Vector>& b, std::vector<double>& denoms, const ColumnSet& cols,
                    std::size_t first) {
  const std::size_t m = cols.size();
  // Bring the new columns up to state B_{first-1;j} using the frozen prefix.
  for (std::size_t i = 0; i < first; ++i) {
    const Vector& vi = cols.column(i);
    const double si = cols.sign(i);
    for (std::size_t j = first; j < m; ++j) axpy(-si * dot(vi, b[j]) / denoms[i], b[i], b[j]);
  }
  for (std::size_t i = first; i < m; ++i) {
    const Vector& vi = cols.column(i);
    const double si = cols.sign(i);
    const double d = 1.0 + si * dot(vi, b[i]);
    if (std::abs(d) < denominator_guard(dot(vi, vi)))
      throw DenominatorBreakdown("denominator breakdown at column " + to_string(cols.label(i)), i, cols.label(i));
    denoms[i] = d;
    // Column i stays frozen at B_{i-1;i}; only later columns are updated.
    for (std::size_t j = i + 1; j < m; ++j) axpy(-si * dot(vi, b[j]) / d, b[i], b[j]);
  }
}

}  // namespace

BStore assemble_B(const AuxPrecond& aux, const ColumnSet& cols) {
  require_same_size(cols.n(), aux.n(), "assemble_B");
  BStore bs;
  bs.n_ = cols.n();
  const std::size_t m = cols.size();
  bs.b_.resize(m);
  bs.denoms_.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) bs.b_[j] = aux.apply(cols.column(j));
  run_first_pass(bs.b_, bs.denoms_, cols, 0);
  bs.signs_ = cols.signs();
  bs.column_hashes_.resize(m);
  for (std::size_t j = 0; j < m; ++j) bs.column_hashes_[j] = cols.column_hash(j);
  bs.fingerprint_ = structured_fingerprint(aux, cols);
  bs.recomputed_ = m;
  return bs;
}

BStore reassemble_B(const BStore& previous, const ColumnSet& previous_cols, const AuxPrecond& aux,
                    const ColumnSet& cols) {
  require_same_size(cols.n(), aux.n(), "reassemble_B");
  if (previous.fingerprint() != structured_fingerprint(aux, previous_cols)) return assemble_B(aux, cols);

  std::size_t prefix = 0;
  const std::size_t limit = std::min(previous.m(), cols.size());
  while (prefix < limit && previous.column_hashes_[prefix] == cols.column_hash(prefix)) ++prefix;

  BStore bs;
  bs.n_ = cols.n();
  const std::size_t m = cols.size();
  bs.b_.resize(m);
  bs.denoms_.assign(m, 0.0);
  for (std::size_t j = 0; j < prefix; ++j) {
    bs.b_[j] = previous.b_[j];
    bs.denoms_[j] = previous.denoms_[j];
  }
  for (std::size_t j = prefix; j < m; ++j) bs.b_[j] = aux.apply(cols.column(j));
  run_first_pass(bs.b_, bs.denoms_, cols, prefix);
  bs.signs_ = cols.signs();
  bs.column_hashes_.resize(m);
  for (std::size_t j = 0; j < m; ++j) bs.column_hashes_[j] = cols.column_hash(j);
  bs.fingerprint_ = structured_fingerprint(aux, cols);
  bs.recomputed_ = m - prefix;
  return bs;
}

Vector apply_structured(const BStore& bs, const AuxPrecond& aux, const ColumnSet& cols, const Vector& r) {
  require_same_size(r.size(), aux.n(), "apply_structured");
  if (bs.fingerprint() != structured_fingerprint(aux, cols)) throw StaleError("stale B");
  Vector h = aux.apply(r);
  for (std::size_t i = 0; i < bs.m(); ++i)
    axpy(-bs.signs()[i] * dot(cols.column(i), h) / bs.denominators()[i], bs.column(i), h);
  return h;
}

void UpdateThresholds::validate() const {
  if (delta_m < 0 || delta_v < 0 || eps_v < 0 || eps_c < 0)
    throw std::invalid_argument("update thresholds must be non-negative");
}

std::string to_string(UpdateReason reason) {
  switch (reason) {
    case UpdateReason::none:
      return "none";
    case UpdateReason::m_changed:
      return "M-changed";
    case UpdateReason::v_changed:
      return "V-changed";
    case UpdateReason::forced_bfgs:
      return "forced-bfgs";
  }
  return "?";
}

double column_set_change(const ColumnSet& prev, const ColumnSet& next) {
  std::map<ColumnLabel, std::size_t> index;
  for (std::size_t i = 0; i < prev.size(); ++i) index[prev.label(i)] = i;
  double change = 0.0;
  for (std::size_t j = 0; j < next.size(); ++j) {
    auto it = index.find(next.label(j));
    if (it == index.end()) continue;
    change = std::max(change, norm1(sub(next.column(j), prev.column(it->second))));
  }
  return change;
}

UpdateDecision decide_update(const SparseSymmetricMatrix& prev_m, const SparseSymmetricMatrix& new_m,
                             const ColumnSet& prev_v, const ColumnSet& new_v, const UpdateThresholds& th) {
  require_same_size(prev_m.n(), new_m.n(), "decide_update");
  require_same_size(prev_v.n(), new_v.n(), "decide_update");
  UpdateDecision d;
  d.m_change = norm1_diff(new_m, prev_m);
  d.v_change = column_set_change(prev_v, new_v);

  auto sorted_labels = [](const ColumnSet& c) {
    auto l = c.labels();
    std::sort(l.begin(), l.end());
    return l;
  };
  const bool structure_changed = sorted_labels(prev_v) != sorted_labels(new_v);

  d.refresh_aux = d.m_change > th.delta_m;
  d.refresh_b = d.refresh_aux || d.v_change > th.delta_v || structure_changed;
  if (d.refresh_aux) {
    d.reason = UpdateReason::m_changed;
  } else if (structure_changed && prev_v.has_bfgs() != new_v.has_bfgs()) {
    d.reason = UpdateReason::forced_bfgs;
  } else if (d.refresh_b) {
    d.reason = UpdateReason::v_changed;
  }
  return d;
}

double infeasibility(ConstraintKind kind, double c) {
  return kind == ConstraintKind::equality ? std::abs(c) : std::max(0.0, c);
}

ColumnSetBuild build_column_set(std::size_t n, const std::vector<Vector>& jacobian_cols, const std::vector<ConstraintKind>& kinds,
                                const Vector& c_vals, const Vector& multipliers, double rho,
                                const UpdateThresholds& th, const std::optional<SecantPair>& secant) {
  const std::size_t m = jacobian_cols.size();
  require_same_size(kinds.size(), m, "build_column_set");
  require_same_size(c_vals.size(), m, "build_column_set");
  require_same_size(multipliers.size(), m, "build_column_set");
  if (!(rho > 0.0)) throw std::invalid_argument("build_column_set: rho must be positive");
  th.validate();

  struct Candidate {
    std::size_t index;
    double infeas;
    double norm;
  };
  std::vector<Candidate> kept;
  for (std::size_t i = 0; i < m; ++i) {
    require_same_size(jacobian_cols[i].size(), n, "build_column_set");
    if (kinds[i] == ConstraintKind::inequality && !(multipliers[i] + rho * c_vals[i] > 0.0)) continue;
    const double infeas = infeasibility(kinds[i], c_vals[i]);
    const double norm = norm2(jacobian_cols[i]);
    if (norm <= th.eps_v && infeas <= th.eps_c) continue;
    kept.push_back({i, infeas, norm});
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
    if (a.infeas != b.infeas) return a.infeas > b.infeas;
    if (a.norm != b.norm) return a.norm > b.norm;
    return a.index < b.index;
  });

  ColumnSetBuild out{ColumnSet(n)};
  const double sr = std::sqrt(rho);
  for (const auto& c : kept)
    out.cols.push_back(scaled(sr, jacobian_cols[c.index]), +1, {ColumnKind::constraint, c.index});

  if (secant) {
    require_same_size(secant->s.size(), n, "build_column_set");
    require_same_size(secant->y.size(), n, "build_column_set");
    const double sy = dot(secant->s, secant->y);
    if (sy >= 1e-8 * norm2(secant->s) * norm2(secant->y) && sy > 0.0) {
      const Vector w = secant->hplus(secant->s);
      const double sw = dot(secant->s, w);
      if (sw > 0.0) {
        out.cols.push_back(scaled(std::sqrt(1.0 / sy), secant->y), +1, {ColumnKind::bfgs_y, 0});
        out.cols.push_back(scaled(std::sqrt(1.0 / sw), w), -1, {ColumnKind::bfgs_w, 0});
        out.correction_applied = true;
      } else {
        out.correction_skipped = true;
      }
    }
  }
  return out;
}

}  // namespace almprec
