// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "almprec/alm.hpp"
#include "almprec/bench.hpp"
#include "almprec/structured_precond.hpp"
#include "oracle.hpp"

using namespace almprec;

namespace {

// Tolerances and limits.
constexpr double kOracleTol = 1e-9;
constexpr double kOracleSeconds = 10.0;
constexpr std::size_t kOracleInstances = 100;
constexpr double kTheoremTol = 1e-8;
constexpr double kTheoremSeconds = 5.0;
constexpr double kExactSeconds = 1.0;
constexpr double kStabilityBand = 2.0;
constexpr double kGrowthMin = 100.0;
constexpr double kStabilitySeconds = 30.0;
constexpr double kKktPointTol = 1e-5;
constexpr std::size_t kMaxOuter = 50;
constexpr double kAlmSeconds = 10.0;
constexpr double kFdTol = 1e-5;
constexpr std::size_t kFdPoints = 20;
constexpr double kFdSeconds = 5.0;
constexpr double kAccountingSeconds = 30.0;
constexpr double kPspgSeconds = 60.0;
constexpr double kPspgSpeedup = 2.0;

struct Outcome {
  bool pass = false;
  std::string detail;
  std::string csv;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ExperimentConfig config(const std::string& text, ExperimentKind kind) {
  std::istringstream in(text);
  return ExperimentConfig::from(KeyValueConfig::parse(in), kind);
}

const ResultRow& find_row(const std::vector<ResultRow>& rows,
                          const std::vector<std::pair<std::string, std::string>>& keys) {
  for (const auto& r : rows)
    if (std::all_of(keys.begin(), keys.end(), [&](const auto& k) { return r.at(k.first) == k.second; })) return r;
  throw std::runtime_error("row not found");
}

Outcome oracle_equivalence() {
  std::vector<ResultRow> rows;
  double worst = 0.0;
  for (std::size_t k = 0; k < kOracleInstances; ++k) {
    Rng rng(1000 + k);
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 29);
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * std::min<std::size_t>(8, n));
    const auto mm = random_spd(n, 0.3, 2000 + k);
    const auto aux = build_aux(mm, AuxKind::exact_dense);
    const oracle::Mat md = oracle::dense(mm);
    const double rho = std::pow(10.0, -1.0 + 3.0 * rng.uniform());

    ColumnSet cols(n);
    for (std::size_t i = 0; i < m; ++i)
      cols.push_back(scaled(std::sqrt(rho), oracle::random_vector(rng, n)), +1, {ColumnKind::constraint, i});
    if (k % 2 == 1) {
      // negative-sign column small enough to keep the sum definite
      Vector w = oracle::random_vector(rng, n);
      const double lmin = Eigen::SelfAdjointEigenSolver<oracle::Mat>(md).eigenvalues().minCoeff();
      w = scaled(std::sqrt(0.5 * lmin) / norm2(w), w);
      cols.push_back(w, -1, {ColumnKind::bfgs_w, 0});
    }
    const Vector r = oracle::random_vector(rng, n);

    const Vector ref = oracle::to_std(oracle::with_columns(md, cols).partialPivLu().solve(oracle::vec(r)));
    const double e_struct = oracle::rel_err(apply_structured(assemble_B(aux, cols), aux, cols, r), ref);

    const Vector& v1 = cols.column(0);
    const Vector ref1 = oracle::to_std(
        (md + oracle::vec(v1) * oracle::vec(v1).transpose()).partialPivLu().solve(oracle::vec(r)));
    const double e_rank1 = oracle::rel_err(apply_rank1(aux, v1, 1.0, r), ref1);

    worst = std::max({worst, e_struct, e_rank1});
    ResultRow row;
    row.add("instance", k);
    row.add("n", n);
    row.add("m", cols.size());
    row.add("rho", rho);
    row.add("rel_err_structured", e_struct);
    row.add("rel_err_rank1", e_rank1);
    rows.push_back(row);
  }
  return {worst <= kOracleTol, "max relative error " + fmt("%.2e", worst) + " over " +
                                   std::to_string(kOracleInstances) + " instances",
          to_csv(rows)};
}

Outcome spectrum_theorem() {
  std::vector<ResultRow> rows;
  double worst = 0.0, worst_corrected = 0.0;
  const std::size_t n = 20;
  const double rho = 10.0;
  for (std::size_t k = 0; k < 20; ++k) {
    const auto mm = random_spd(n, 0.3, 3000 + k);
    Rng rng(4000 + k);
    const Vector v = oracle::random_vector(rng, n);
    ColumnSet cols(n);
    cols.push_back(scaled(std::sqrt(rho), v), +1, {ColumnKind::constraint, 0});
    for (AuxKind kind : {AuxKind::jacobi, AuxKind::incomplete_cholesky}) {
      const auto aux = build_aux(mm, kind, 0.1);
      const auto b = assemble_B(aux, cols);
      const auto h = hessian_operator(mm, cols);
      const auto e = eigenvalues(LinearOperator{n, [&](const Vector& x) { return apply_structured(b, aux, cols, h(x)); }});
      const auto printed = eigenvalues(oracle::op(Eigen::Map<const oracle::Mat>(
          theorem_matrix_printed(mm, aux, v, rho).data(), n, n).transpose()));
      const auto corrected = eigenvalues(oracle::op(Eigen::Map<const oracle::Mat>(
          theorem_matrix_corrected(mm, aux, v, rho).data(), n, n).transpose()));
      const double d = spectrum_distance(e, printed);
      const double dc = spectrum_distance(e, corrected);
      worst = std::max(worst, d);
      worst_corrected = std::max(worst_corrected, dc);
      ResultRow row;
      row.add("instance", k);
      row.add("aux", to_string(kind));
      row.add("residual_printed", d);
      row.add("residual_corrected", dc);
      rows.push_back(row);
    }
  }
  return {worst <= kTheoremTol,
          "max eigenvalue mismatch " + fmt("%.2e", worst) + " (with (I - u P_M^-1 v v^T) E_M in place of (1-u) P_M^-1 v v^T E_M: " +
              fmt("%.2e", worst_corrected) + ")",
          to_csv(rows)};
}

Outcome exact_case() {
  Rng rng(5);
  Vector d(112);
  for (double& x : d) x = std::pow(10.0, 4.0 * rng.uniform());
  const std::string path = (std::filesystem::temp_directory_path() / "almprec_acceptance_diag112.mtx").string();
  {
    std::ofstream out(path);
    write_matrix_market(out, SparseSymmetricMatrix::diagonal(d));
  }
  const auto rows = run_linsys_experiment(
      config("matrix = " + path + "\nm = 1\naux = jacobi\nrho = 1, 1e6, 1e7\nkrylov_tol = 1e-8\nseed = 1\n",
             ExperimentKind::linsys));
  bool pass = rows.size() == 3;
  std::string pcg;
  for (const auto& r : rows) {
    pass = pass && r.at("PCG") == "1";
    pcg += (pcg.empty() ? "" : ", ") + r.at("PCG");
  }
  return {pass, "PCG iterations at rho = 1, 1e6, 1e7: " + pcg, to_csv(rows)};
}

Outcome rho_stability() {
  const auto out = run_spectral_experiment(
      config("n = 100\nm = 10\ndensity = 0.05\naux = ic\ndrop_tol = 0.01\nseed = 1\n"
             "rho = 1.5, 15.5, 154.8, 1548.3, 15483\n",
             ExperimentKind::spectral));
  std::vector<double> kp, kh;
  for (const auto& r : out.rows) {
    kp.push_back(std::stod(r.at("kappa_PinvH")));
    kh.push_back(std::stod(r.at("kappa_H")));
  }
  std::vector<double> sorted = kp;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double band = std::max(sorted.back() / median, median / sorted.front());
  const double growth = kh.back() / kh.front();
  return {band <= kStabilityBand && growth >= kGrowthMin,
          "kappa(P^-1 H) within x" + fmt("%.3f", band) + " of median " + fmt("%.4g", median) + ", kappa(H) grows x" +
              fmt("%.4g", growth) + " (" + fmt("%.3g", kh.front()) + " to " + fmt("%.3g", kh.back()) + ")",
          to_csv(out.rows)};
}

Outcome alm_correctness() {
  std::vector<ResultRow> rows;
  bool pass = true;
  std::size_t runs = 0, ok = 0;
  for (const char* name : {"EQ-QP", "INEQ-QP"}) {
    const auto p = make_problem(name);
    for (auto solver : {InnerSolver::truncated_newton, InnerSolver::spg, InnerSolver::pspg})
      for (auto mode : {HessianMode::newton, HessianMode::quasi_newton}) {
        AlmConfig cfg;
        cfg.eps_opt = cfg.eps_feas = 1e-6;
        cfg.max_outer = kMaxOuter;
        cfg.solver = solver;
        cfg.mode = mode;
        const auto r = alm_solve(p, cfg);
        const double dx = norm_inf(sub(r.x, *p.x_star));
        const double dl = norm_inf(sub(r.multipliers, *p.multipliers_star));
        const double df = std::abs(r.f - *p.f_star);
        const bool good = r.converged() && r.outer_iterations <= kMaxOuter && dx <= kKktPointTol &&
                          dl <= kKktPointTol && df <= kKktPointTol;
        ++runs;
        ok += good;
        pass = pass && good;
        ResultRow row;
        row.add("problem", std::string(name));
        row.add("solver", to_string(solver));
        row.add("mode", to_string(mode));
        row.add("status", to_string(r.status));
        row.add("ItL", r.outer_iterations);
        row.add("x_err", dx);
        row.add("multiplier_err", dl);
        row.add("f_err", df);
        row.add("opt", r.kkt.opt);
        row.add("feas", r.kkt.feas);
        rows.push_back(row);
      }
  }
  return {pass, std::to_string(ok) + "/" + std::to_string(runs) + " solver/mode runs reach the KKT point", to_csv(rows)};
}

Outcome derivative_consistency() {
  std::vector<ResultRow> rows;
  double worst_g = 0.0, worst_h = 0.0;
  const double rho = 10.0;
  for (const auto& name : problem_names()) {
    const auto p = make_problem(name);
    Rng rng(6000 + name.size());
    for (std::size_t k = 0; k < kFdPoints; ++k) {
      Vector x = p.x0;
      for (double& v : x) v += rng.normal();
      Vector lam(p.m());
      for (std::size_t i = 0; i < p.m(); ++i)
        lam[i] = p.kinds[i] == ConstraintKind::inequality ? std::abs(rng.normal()) : rng.normal();

      const Vector g = eval_al_grad(p, x, lam, rho);
      Vector fd(p.n);
      for (std::size_t j = 0; j < p.n; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        fd[j] = (eval_al(p, xp, lam, rho) - eval_al(p, xm, lam, rho)) / (2.0 * h);
      }
      const double eg = oracle::rel_err(fd, g);

      Vector d = oracle::random_vector(rng, p.n);
      d = scaled(1.0 / norm2(d), d);
      const double h = 1e-5 * std::max(1.0, norm2(x));
      Vector xp = x, xm = x;
      axpy(h, d, xp);
      axpy(-h, d, xm);
      const Vector hd_fd = scaled(0.5 / h, sub(eval_al_grad(p, xp, lam, rho), eval_al_grad(p, xm, lam, rho)));
      const auto model = hessian_model(p, x, lam, rho, HessianMode::newton, std::nullopt, UpdateThresholds{});
      const double eh = oracle::rel_err(hd_fd, model.apply(d));

      worst_g = std::max(worst_g, eg);
      worst_h = std::max(worst_h, eh);
      ResultRow row;
      row.add("problem", name);
      row.add("point", k);
      row.add("grad_rel_err", eg);
      row.add("hess_rel_err", eh);
      rows.push_back(row);
    }
  }
  return {worst_g <= kFdTol && worst_h <= kFdTol,
          "max relative error gradient " + fmt("%.2e", worst_g) + ", Hessian " + fmt("%.2e", worst_h) + " over " +
              std::to_string(rows.size()) + " points",
          to_csv(rows)};
}

Outcome accounting_trend() {
  const auto rows = run_alm_experiment(
      config("problem = C4-SYN\nsolver = truncated-newton\nmode = nw, qn\npolicy = auto, once\n", ExperimentKind::solve));
  bool pass = true;
  std::string detail;
  for (const char* mode : {"nw", "qn"}) {
    const auto& a = find_row(rows, {{"mode", mode}, {"policy", "auto"}});
    const auto& o = find_row(rows, {{"mode", mode}, {"policy", "once"}});
    const bool good = a.at("status") == "converged" && o.at("status") == "converged" &&
                      std::stoul(o.at("Itpd")) >= std::stoul(a.at("Itpd"));
    pass = pass && good;
    detail += std::string(detail.empty() ? "" : "; ") + mode + ": Krylov once " + o.at("Itpd") + " vs auto " +
              a.at("Itpd") + " (auto AcM " + a.at("AcM") + ", AcV " + a.at("AcV") + ")";
  }
  return {pass, detail, to_csv(rows)};
}

Outcome pspg_trend() {
  const std::vector<std::string> problems{"EQ-QP", "INEQ-QP", "BOX-QP", "HS41", "HS48", "HS63"};
  std::string list;
  for (const auto& p : problems) list += (list.empty() ? "" : ",") + p;
  const auto rows =
      run_alm_experiment(config("problem = " + list + "\nsolver = spg, pspg\nmode = nw\n", ExperimentKind::solve));
  bool pass = true;
  double best = 0.0;
  std::string best_name, detail;
  for (const auto& p : problems) {
    const auto& s = find_row(rows, {{"problem", p}, {"solver", "spg"}});
    const auto& q = find_row(rows, {{"problem", p}, {"solver", "pspg"}});
    const double is = std::stod(s.at("Itin")), iq = std::stod(q.at("Itin"));
    pass = pass && s.at("status") == "converged" && q.at("status") == "converged" && iq <= is;
    const double ratio = is / std::max(iq, 1.0);
    if (ratio > best) {
      best = ratio;
      best_name = p;
    }
    detail += (detail.empty() ? "" : ", ") + p + " " + s.at("Itin") + "/" + q.at("Itin");
  }
  pass = pass && best >= kPspgSpeedup;
  return {pass, "SPG/PSPG inner iterations " + detail + "; best reduction x" + fmt("%.1f", best) + " on " + best_name,
          to_csv(rows)};
}

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", kOracleSeconds, oracle_equivalence},
      {2, "spectrum theorem", kTheoremSeconds, spectrum_theorem},
      {3, "exact case", kExactSeconds, exact_case},
      {4, "rho stability", kStabilitySeconds, rho_stability},
      {5, "ALM correctness", kAlmSeconds, alm_correctness},
      {6, "gradient/Hessian consistency", kFdSeconds, derivative_consistency},
      {7, "preconditioner accounting", kAccountingSeconds, accounting_trend},
      {8, "PSPG acceleration", kPspgSeconds, pspg_trend},
  };

  int failures = 0;
  std::vector<std::string> first_csv;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what(), ""};
    }
    const double secs = seconds_since(t0);
    const bool pass = o.pass && secs < c.limit_seconds;
    failures += !pass;
    first_csv.push_back(o.csv);
    std::printf("%s %d %s: %s [%.2f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs,
                c.limit_seconds);
    std::fflush(stdout);
  }

  std::size_t identical = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string again;
    try {
      again = criteria[i].run().csv;
    } catch (const std::exception&) {
    }
    identical += !first_csv[i].empty() && again == first_csv[i];
  }
  const bool det = identical == criteria.size();
  failures += !det;
  std::printf("%s 9 determinism: %zu/%zu criterion runs reproduce byte-identical CSV\n", det ? "PASS" : "FAIL",
              identical, criteria.size());
  return failures == 0 ? 0 : 1;
}
