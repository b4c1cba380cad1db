#include "almprec/bench.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "almprec/structured_precond.hpp"

namespace almprec {

namespace {

using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

DenseMatrix to_eigen(const Vector& rowmajor, std::size_t n) {
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = rowmajor[i * n + j];
  return a;
}

double matrix_norm1(const DenseMatrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for '" + key + "': '" + text + "'");
  }
}

// Loads the M block of a matrix experiment and forces it SPD when asked.
struct LoadedMatrix {
  std::string name;
  SparseSymmetricMatrix m;
  double shift = 0.0;
};

LoadedMatrix load_matrix(const ExperimentConfig& cfg) {
  LoadedMatrix out{"random", SparseSymmetricMatrix::identity(1), 0.0};
  if (cfg.matrix == "random") {
    out.m = random_spd(cfg.n, cfg.density, cfg.seed);
  } else {
    out.name = cfg.matrix;
    const auto slash = out.name.find_last_of('/');
    if (slash != std::string::npos) out.name = out.name.substr(slash + 1);
    try {
      out.m = read_matrix_market_file(cfg.matrix);
    } catch (const std::exception& e) {
      throw ConfigError("cannot load matrix '" + cfg.matrix + "': " + e.what());
    }
  }
  if (cfg.force_spd && out.m.n() <= cfg.dense_threshold) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(to_eigen(out.m.to_dense(), out.m.n()), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin <= 0.0) {
      out.shift = std::abs(lmin) + 1e-6;
      out.m = out.m.shifted(out.shift);
    }
  }
  return out;
}

ColumnSet scaled_columns(std::size_t n, const std::vector<Vector>& v, double rho) {
  ColumnSet cols(n);
  for (std::size_t i = 0; i < v.size(); ++i)
    cols.push_back(scaled(std::sqrt(rho), v[i]), +1, {ColumnKind::constraint, i});
  return cols;
}

LinearOperator preconditioned_operator(const LinearOperator& h, const BStore& b, const AuxPrecond& aux,
                                       const ColumnSet& cols) {
  return LinearOperator{h.n, [h, &b, &aux, &cols](const Vector& x) { return apply_structured(b, aux, cols, h(x)); }};
}

std::string iterations_cell(const KrylovReport& r) {
  return r.converged ? std::to_string(r.iterations) : std::string("n/c");
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() {
  // 53 random bits in [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = 0.0;
  while (u1 == 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

Vector materialize(const LinearOperator& op) {
  const std::size_t n = op.n;
  Vector a(n * n, 0.0);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector col = op(e);
    require_same_size(col.size(), n, "materialize");
    for (std::size_t i = 0; i < n; ++i) a[i * n + j] = col[i];
    e[j] = 0.0;
  }
  return a;
}

double condition_estimate(const LinearOperator& op, std::size_t dense_threshold) {
  if (op.n == 0) throw std::invalid_argument("condition_estimate: empty operator");
  if (op.n > dense_threshold)
    throw std::invalid_argument("condition_estimate: n = " + std::to_string(op.n) + " exceeds dense threshold " +
                                std::to_string(dense_threshold));
  const DenseMatrix a = to_eigen(materialize(op), op.n);
  Eigen::FullPivLU<DenseMatrix> lu(a);
  if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
  const DenseMatrix inv = lu.inverse();
  if (!inv.allFinite()) return std::numeric_limits<double>::infinity();
  return matrix_norm1(a) * matrix_norm1(inv);
}

std::vector<std::complex<double>> eigenvalues(const LinearOperator& op) {
  const DenseMatrix a = to_eigen(materialize(op), op.n);
  Eigen::EigenSolver<DenseMatrix> es(a, false);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalue computation failed");
  std::vector<std::complex<double>> ev(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return ev;
}

double spectrum_distance(const std::vector<std::complex<double>>& a, const std::vector<std::complex<double>>& b) {
  require_same_size(a.size(), b.size(), "spectrum_distance");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  return d;
}

SparseSymmetricMatrix random_spd(std::size_t n, double density, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("random_spd: n must be >= 1");
  if (!(density >= 0.0 && density <= 1.0)) throw std::invalid_argument("random_spd: density must lie in [0,1]");
  Rng rng(seed);
  std::vector<Triplet> t;
  Vector rowsum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      if (rng.uniform() >= density) continue;
      const double v = rng.normal();
      t.push_back({i, j, v});
      rowsum[i] += std::abs(v);
      rowsum[j] += std::abs(v);
    }
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0 + rowsum[i]});
  Vector s(n);
  for (double& v : s) v = std::pow(10.0, 2.0 * rng.uniform() - 1.0);
  for (Triplet& e : t) e.value *= s[e.row] * s[e.col];
  return SparseSymmetricMatrix(n, std::move(t));
}

std::vector<Vector> random_columns(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> v(m, Vector(n));
  for (auto& col : v)
    for (double& x : col) x = rng.normal();
  return v;
}

namespace {

// P_M^{-1} as a dense matrix, E_M = P_M^{-1} M - I, and P_M^{-1} v.
struct TheoremParts {
  DenseMatrix e;
  Eigen::VectorXd pv;
  Eigen::VectorXd v;
  double upsilon;
};

TheoremParts theorem_parts(const SparseSymmetricMatrix& m, const AuxPrecond& aux, const Vector& v, double rho) {
  const std::size_t n = m.n();
  require_same_size(v.size(), n, "theorem");
  require_same_size(aux.n(), n, "theorem");
  const DenseMatrix pinv = to_eigen(materialize(LinearOperator{n, [&aux](const Vector& x) { return aux.apply(x); }}), n);
  const DenseMatrix md = to_eigen(m.to_dense(), n);
  TheoremParts t;
  t.e = pinv * md - DenseMatrix::Identity(n, n);
  t.v = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
  t.pv = pinv * t.v;
  t.upsilon = rho / (1.0 + rho * t.v.dot(t.pv));
  return t;
}

Vector to_rowmajor(const DenseMatrix& a) { return Vector(a.data(), a.data() + a.size()); }

}  // namespace

Vector theorem_matrix_printed(const SparseSymmetricMatrix& m, const AuxPrecond& aux, const Vector& v, double rho) {
  const TheoremParts t = theorem_parts(m, aux, v, rho);
  const std::size_t n = m.n();
  const DenseMatrix r = DenseMatrix::Identity(n, n) + (1.0 - t.upsilon) * (t.pv * t.v.transpose()) * t.e;
  return to_rowmajor(r);
}

Vector theorem_matrix_corrected(const SparseSymmetricMatrix& m, const AuxPrecond& aux, const Vector& v, double rho) {
  const TheoremParts t = theorem_parts(m, aux, v, rho);
  const std::size_t n = m.n();
  const DenseMatrix r =
      DenseMatrix::Identity(n, n) + (DenseMatrix::Identity(n, n) - t.upsilon * t.pv * t.v.transpose()) * t.e;
  return to_rowmajor(r);
}

LinearOperator hessian_operator(const SparseSymmetricMatrix& m, const ColumnSet& cols) {
  return LinearOperator{m.n(), [m, cols](const Vector& x) {
                          Vector y = matvec(m, x);
                          if (!cols.empty()) y = add(y, cols.apply(x));
                          return y;
                        }};
}

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (kv.has(key)) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv.set(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in);
}

void KeyValueConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_double(key, get(key, "")) : fallback;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string text = get(key, "");
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("invalid unsigned integer for '" + key + "': '" + text + "'");
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw ConfigError("invalid unsigned integer for '" + key + "': '" + text + "'");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string text = get(key, "");
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + text + "'");
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key,
                                                  const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::string> out = split(get(key, ""), ',');
  if (out.empty() || std::any_of(out.begin(), out.end(), [](const std::string& s) { return s.empty(); }))
    throw ConfigError("invalid list for '" + key + "'");
  return out;
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& s : get_list(key, {})) out.push_back(parse_double(key, s));
  return out;
}

void KeyValueConfig::require_known(const std::vector<std::string>& known) const {
  for (const auto& [k, v] : values_)
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown config key '" + k + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::spectral:
      return "spectral";
    case ExperimentKind::linsys:
      return "linsys";
    case ExperimentKind::solve:
      return "solve";
  }
  return "?";
}

ExperimentConfig ExperimentConfig::from(const KeyValueConfig& kv, ExperimentKind kind) {
  kv.require_known({"matrix",    "n",          "density",   "m",          "rho",       "drop_tol",   "aux",
                    "seed",      "force_spd",  "dense_threshold",         "kappa",     "timing",     "krylov_tol",
                    "krylov_maxit",            "problem",   "solver",     "mode",      "policy",     "rho1",
                    "gamma",     "tau",        "lambda_min", "lambda_max", "mu_max",   "eps_opt",    "eps_feas",
                    "max_outer", "max_inner",  "inner_tol", "memory",     "alpha_min", "alpha_max",  "ls_gamma",
                    "delta_m",   "delta_v",    "eps_v",     "eps_c",      "sigma_min", "shadow"});
  ExperimentConfig c;
  c.kind = kind;
  try {
    c.matrix = kv.get("matrix", c.matrix);
    c.n = kv.get_uint("n", c.n);
    c.density = kv.get_double("density", c.density);
    c.m = kv.get_uint("m", c.m);
    c.rhos = kv.get_double_list("rho", c.rhos);
    c.drop_tols = kv.get_double_list("drop_tol", c.drop_tols);
    c.aux = parse_aux_kind(kv.get("aux", to_string(c.aux)));
    c.seed = kv.get_uint("seed", c.seed);
    c.force_spd = kv.get_bool("force_spd", c.force_spd);
    c.dense_threshold = kv.get_uint("dense_threshold", c.dense_threshold);
    c.with_kappa = kv.get_bool("kappa", c.with_kappa);
    c.timing = kv.get_bool("timing", c.timing);
    c.krylov.tol = kv.get_double("krylov_tol", c.krylov.tol);
    c.krylov.maxit = kv.get_uint("krylov_maxit", c.krylov.maxit);

    c.problems = kv.get_list("problem", c.problems);
    for (const auto& p : c.problems) make_problem(p);
    c.solvers.clear();
    for (const auto& s : kv.get_list("solver", {"spg"})) c.solvers.push_back(parse_inner_solver(s));
    c.modes.clear();
    for (const auto& s : kv.get_list("mode", {"nw"})) c.modes.push_back(parse_hessian_mode(s));
    c.policies.clear();
    for (const auto& s : kv.get_list("policy", {"auto"})) c.policies.push_back(parse_update_policy(s));

    AlmConfig& a = c.alm;
    a.rho1 = kv.get_double("rho1", a.rho1);
    a.gamma = kv.get_double("gamma", a.gamma);
    a.tau = kv.get_double("tau", a.tau);
    a.safeguard.lambda_min = kv.get_double("lambda_min", a.safeguard.lambda_min);
    a.safeguard.lambda_max = kv.get_double("lambda_max", a.safeguard.lambda_max);
    a.safeguard.mu_max = kv.get_double("mu_max", a.safeguard.mu_max);
    a.eps_opt = kv.get_double("eps_opt", a.eps_opt);
    a.eps_feas = kv.get_double("eps_feas", a.eps_feas);
    a.max_outer = kv.get_uint("max_outer", a.max_outer);
    a.inner.max_iter = kv.get_uint("max_inner", a.inner.max_iter);
    a.inner.grad_tol = kv.get_double("inner_tol", a.inner.grad_tol);
    a.inner.memory = kv.get_uint("memory", a.inner.memory);
    a.inner.alpha_min = kv.get_double("alpha_min", a.inner.alpha_min);
    a.inner.alpha_max = kv.get_double("alpha_max", a.inner.alpha_max);
    a.inner.gamma = kv.get_double("ls_gamma", a.inner.gamma);
    a.inner.krylov = c.krylov;
    a.thresholds.delta_m = kv.get_double("delta_m", a.thresholds.delta_m);
    a.thresholds.delta_v = kv.get_double("delta_v", a.thresholds.delta_v);
    a.thresholds.eps_v = kv.get_double("eps_v", a.thresholds.eps_v);
    a.thresholds.eps_c = kv.get_double("eps_c", a.thresholds.eps_c);
    a.sigma_min = kv.get_double("sigma_min", a.sigma_min);
    a.shadow_unpreconditioned = kv.get_bool("shadow", true);
    if (kv.has("aux")) a.aux = c.aux;
    if (kv.has("drop_tol")) a.drop_tol = c.drop_tols.front();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  if (c.matrix == "random" && c.n == 0) throw ConfigError("n must be >= 1");
  if (!(c.density >= 0.0 && c.density <= 1.0)) throw ConfigError("density must lie in [0,1]");
  if (c.rhos.empty() || std::any_of(c.rhos.begin(), c.rhos.end(), [](double r) { return !(r > 0.0); }))
    throw ConfigError("rho values must be positive");
  if (c.drop_tols.empty() ||
      std::any_of(c.drop_tols.begin(), c.drop_tols.end(), [](double d) { return !(d >= 0.0); }))
    throw ConfigError("drop_tol values must be nonnegative");
  if (!(c.krylov.tol > 0.0)) throw ConfigError("krylov_tol must be positive");
  try {
    c.alm.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void ResultRow::add(const std::string& name, const std::string& value) { cells.emplace_back(name, value); }
void ResultRow::add(const std::string& name, double value) { cells.emplace_back(name, format_double(value)); }
void ResultRow::add(const std::string& name, std::size_t value) { cells.emplace_back(name, std::to_string(value)); }

const std::string& ResultRow::at(const std::string& name) const {
  for (const auto& [k, v] : cells)
    if (k == name) return v;
  throw std::out_of_range("no column '" + name + "'");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SpectralOutput run_spectral_experiment(const ExperimentConfig& cfg) {
  const LoadedMatrix lm = load_matrix(cfg);
  const std::size_t n = lm.m.n();
  const std::vector<Vector> v = random_columns(n, cfg.m, cfg.seed + 1);
  SpectralOutput out;
  for (double drop_tol : cfg.drop_tols) {
    const AuxPrecond aux = build_aux(lm.m, cfg.aux, drop_tol);
    for (double rho : cfg.rhos) {
      const auto t0 = std::chrono::steady_clock::now();
      const ColumnSet cols = scaled_columns(n, v, rho);
      const BStore b = assemble_B(aux, cols);
      const LinearOperator h = hessian_operator(lm.m, cols);
      const LinearOperator ph = preconditioned_operator(h, b, aux, cols);

      ResultRow row;
      row.add("matrix", lm.name);
      row.add("n", n);
      row.add("m", cfg.m);
      row.add("seed", static_cast<std::size_t>(cfg.seed));
      row.add("aux", to_string(cfg.aux));
      row.add("drop_tol", drop_tol);
      row.add("rho", rho);
      row.add("spd_shift", lm.shift);
      row.add("aux_nnz", aux.nnz());
      row.add("aux_shift", aux.shift());
      row.add("kappa_H", condition_estimate(h, cfg.dense_threshold));
      row.add("kappa_PinvH", condition_estimate(ph, cfg.dense_threshold));

      const auto eh = eigenvalues(h);
      const auto eph = eigenvalues(ph);
      for (const auto& [label, list] : {std::pair{"H", &eh}, std::pair{"PinvH", &eph}})
        for (std::size_t i = 0; i < list->size(); ++i) {
          ResultRow er;
          er.add("drop_tol", drop_tol);
          er.add("rho", rho);
          er.add("operator", std::string(label));
          er.add("index", i);
          er.add("real", (*list)[i].real());
          er.add("imag", (*list)[i].imag());
          out.eigen_rows.push_back(std::move(er));
        }

      double printed = std::numeric_limits<double>::quiet_NaN();
      double corrected = printed;
      if (!v.empty()) {
        ColumnSet one(n);
        one.push_back(scaled(std::sqrt(rho), v.front()), +1, {ColumnKind::constraint, 0});
        const BStore b1 = assemble_B(aux, one);
        const auto e1 = eigenvalues(preconditioned_operator(hessian_operator(lm.m, one), b1, aux, one));
        const auto dense_op = [n](Vector a) {
          return LinearOperator{n, [a = std::move(a), n](const Vector& x) {
                                  Vector y(n, 0.0);
                                  for (std::size_t i = 0; i < n; ++i)
                                    for (std::size_t j = 0; j < n; ++j) y[i] += a[i * n + j] * x[j];
                                  return y;
                                }};
        };
        printed = spectrum_distance(e1, eigenvalues(dense_op(theorem_matrix_printed(lm.m, aux, v.front(), rho))));
        corrected =
            spectrum_distance(e1, eigenvalues(dense_op(theorem_matrix_corrected(lm.m, aux, v.front(), rho))));
      }
      row.add("theorem_residual_printed", printed);
      row.add("theorem_residual_corrected", corrected);
      if (cfg.timing)
        row.add("wall_ms", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<ResultRow> run_linsys_experiment(const ExperimentConfig& cfg) {
  const LoadedMatrix lm = load_matrix(cfg);
  const std::size_t n = lm.m.n();
  const std::vector<Vector> v = random_columns(n, cfg.m, cfg.seed + 1);
  const Vector ones(n, 1.0);
  std::vector<ResultRow> rows;
  for (double drop_tol : cfg.drop_tols) {
    const AuxPrecond aux = build_aux(lm.m, cfg.aux, drop_tol);
    for (double rho : cfg.rhos) {
      const auto t0 = std::chrono::steady_clock::now();
      const ColumnSet cols = scaled_columns(n, v, rho);
      const BStore b = assemble_B(aux, cols);
      const LinearOperator h = hessian_operator(lm.m, cols);
      const Vector y = h(ones);
      const PrecondOperator p{n, [&](const Vector& r) { return apply_structured(b, aux, cols, r); }};
      const KrylovReport cg = pcg(h, std::nullopt, y, cfg.krylov);
      const KrylovReport pc = pcg(h, p, y, cfg.krylov);

      ResultRow row;
      row.add("matrix", lm.name);
      row.add("n", n);
      row.add("m", cfg.m);
      row.add("seed", static_cast<std::size_t>(cfg.seed));
      row.add("aux", to_string(cfg.aux));
      row.add("drop_tol", drop_tol);
      row.add("rho", rho);
      row.add("spd_shift", lm.shift);
      row.add("nnz_M", lm.m.stored_nnz());
      row.add("nnz_Z", aux.nnz());
      row.add("nnz_Z_over_n2", static_cast<double>(aux.nnz()) / (static_cast<double>(n) * static_cast<double>(n)));
      row.add("nnz_Z_over_nnz_M", static_cast<double>(aux.nnz()) / static_cast<double>(lm.m.stored_nnz()));
      if (cfg.with_kappa && n <= cfg.dense_threshold) {
        row.add("kappa_H", condition_estimate(h, cfg.dense_threshold));
        row.add("kappa_PinvH", condition_estimate(preconditioned_operator(h, b, aux, cols), cfg.dense_threshold));
      } else {
        row.add("kappa_H", std::string("-"));
        row.add("kappa_PinvH", std::string("-"));
      }
      row.add("CG", iterations_cell(cg));
      row.add("PCG", iterations_cell(pc));
      row.add("CG_error", norm_inf(sub(cg.solution, ones)));
      row.add("PCG_error", norm_inf(sub(pc.solution, ones)));
      if (cfg.timing)
        row.add("wall_ms", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ResultRow> run_alm_experiment(const ExperimentConfig& cfg) {
  std::vector<ResultRow> rows;
  for (const auto& name : cfg.problems) {
    const NlpProblem p = make_problem(name);
    for (InnerSolver solver : cfg.solvers)
      for (HessianMode mode : cfg.modes)
        for (UpdatePolicy policy : cfg.policies) {
          AlmConfig a = cfg.alm;
          a.solver = solver;
          a.mode = mode;
          a.policy = policy;
          ResultRow row;
          row.add("problem", name);
          row.add("n", p.n);
          row.add("m", p.m());
          row.add("solver", to_string(solver));
          row.add("mode", to_string(mode));
          row.add("policy", to_string(policy));
          const auto t0 = std::chrono::steady_clock::now();
          AlmReport r;
          try {
            r = alm_solve(p, a);
          } catch (const std::exception& e) {
            r.status = AlmStatus::inner_failure;
            r.message = e.what();
          }
          row.add("status", r.converged() ? std::string("converged") : std::string("n/c"));
          row.add("detail", r.message.empty() ? to_string(r.status) : to_string(r.status) + ": " + r.message);
          row.add("ItL", r.outer_iterations);
          row.add("Itin", r.inner_iterations);
          row.add("Itpd", r.krylov_precond);
          row.add("Itd", r.krylov_unprecond);
          row.add("AcM", r.aux_updates);
          row.add("AcV", r.b_updates);
          row.add("f", r.f);
          row.add("opt", r.kkt.opt);
          row.add("compl", r.kkt.comp);
          row.add("feas", r.kkt.feas);
          if (cfg.timing)
            row.add("wall_ms",
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
          rows.push_back(std::move(row));
        }
  }
  return rows;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string to_csv(const std::vector<ResultRow>& rows) {
  if (rows.empty()) return "";
  std::string s;
  const auto& head = rows.front().cells;
  for (std::size_t j = 0; j < head.size(); ++j) s += (j ? "," : "") + csv_escape(head[j].first);
  s += '\n';
  for (const auto& r : rows) {
    if (r.cells.size() != head.size()) throw std::logic_error("to_csv: rows with different columns");
    for (std::size_t j = 0; j < r.cells.size(); ++j) {
      if (r.cells[j].first != head[j].first) throw std::logic_error("to_csv: rows with different columns");
      s += (j ? "," : "") + csv_escape(r.cells[j].second);
    }
    s += '\n';
  }
  return s;
}

std::string csv_to_table(const std::string& csv) {
  std::vector<std::vector<std::string>> cells;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) cells.push_back(csv_fields(line));
  std::vector<std::size_t> width;
  for (const auto& r : cells) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
  }
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string text;
    for (std::size_t j = 0; j < cells[i].size(); ++j) {
      if (j) text += "  ";
      text += cells[i][j];
      if (j + 1 < cells[i].size()) text += std::string(width[j] - cells[i][j].size(), ' ');
    }
    out += text + '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t j = 0; j < width.size(); ++j) total += width[j] + (j ? 2 : 0);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

}  // namespace almprec
