#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "almprec/alm.hpp"
#include "almprec/aux_precond.hpp"
#include "almprec/krylov.hpp"
#include "almprec/linalg.hpp"
#include "almprec/precond_manager.hpp"
#include "almprec/sparse.hpp"

namespace almprec {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Deterministic generator: mt19937_64 words mapped to uniforms and, through
/// Box-Muller, to standard normals, so streams are identical on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed);
  double uniform();
  double normal();

private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Dense row-major copy of an operator, built from n applications to unit vectors.
Vector materialize(const LinearOperator& op);

/// ||A||_1 ||A^{-1}||_1 from a dense LU factorization; +inf when A is singular
/// to working precision. Throws std::invalid_argument above dense_threshold.
double condition_estimate(const LinearOperator& op, std::size_t dense_threshold = 2000);

/// Eigenvalues of a dense operator, sorted by real part then imaginary part.
std::vector<std::complex<double>> eigenvalues(const LinearOperator& op);

/// Largest |a_i - b_i| / max(1, |b_i|) over two sorted eigenvalue lists.
double spectrum_distance(const std::vector<std::complex<double>>& a, const std::vector<std::complex<double>>& b);

/// Random SPD test matrix of order n. Each strictly-lower entry is present with
/// probability `density` and drawn from N(0,1); the diagonal is set to
/// 1 + (sum of |off-diagonal| in the row), which makes A strictly diagonally
/// dominant, and finally A <- S A S with S = diag(10^u_i), u_i ~ U(-1, 1),
/// which spreads the spectrum while keeping A SPD.
SparseSymmetricMatrix random_spd(std::size_t n, double density, std::uint64_t seed);

/// n x m matrix with N(0,1) entries, returned as m columns.
std::vector<Vector> random_columns(std::size_t n, std::size_t m, std::uint64_t seed);

/// Dense I + (1 - u) P_M^{-1} v v^T E_M, with E_M = P_M^{-1} M - I and
/// u = rho / (1 + rho v^T P_M^{-1} v).
Vector theorem_matrix_printed(const SparseSymmetricMatrix& m, const AuxPrecond& aux, const Vector& v, double rho);

/// Dense I + (I - u P_M^{-1} v v^T) E_M, which equals P^{-1} H for one column.
Vector theorem_matrix_corrected(const SparseSymmetricMatrix& m, const AuxPrecond& aux, const Vector& v, double rho);

/// H = M + sum_i s_i v_i v_i^T as an operator.
LinearOperator hessian_operator(const SparseSymmetricMatrix& m, const ColumnSet& cols);

/// Key = value settings. '#' starts a comment; lists are comma separated.
class KeyValueConfig {
public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig parse_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;
  std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const;
  /// Throws ConfigError naming any key outside `known`.
  void require_known(const std::vector<std::string>& known) const;

private:
  std::map<std::string, std::string> values_;
};

enum class ExperimentKind { spectral, linsys, solve };

std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::spectral;
  /// "random" or a Matrix Market path.
  std::string matrix = "random";
  std::size_t n = 100;
  double density = 0.05;
  std::size_t m = 10;
  std::vector<double> rhos{1.0};
  std::vector<double> drop_tols{1e-2};
  AuxKind aux = AuxKind::incomplete_cholesky;
  std::uint64_t seed = 1;
  bool force_spd = true;
  std::size_t dense_threshold = 2000;
  bool with_kappa = true;
  bool timing = false;
  KrylovOptions krylov{};

  std::vector<std::string> problems{"EQ-QP"};
  std::vector<InnerSolver> solvers{InnerSolver::spg};
  std::vector<HessianMode> modes{HessianMode::newton};
  std::vector<UpdatePolicy> policies{UpdatePolicy::automatic};
  AlmConfig alm{};

  static ExperimentConfig from(const KeyValueConfig& kv, ExperimentKind kind);
};

/// One output line: named cells in column order.
struct ResultRow {
  std::vector<std::pair<std::string, std::string>> cells;

  void add(const std::string& name, const std::string& value);
  void add(const std::string& name, double value);
  void add(const std::string& name, std::size_t value);
  const std::string& at(const std::string& name) const;
};

std::string format_double(double v);

struct SpectralOutput {
  std::vector<ResultRow> rows;
  /// rho, drop_tol, operator ("H" or "PinvH"), index, real, imag.
  std::vector<ResultRow> eigen_rows;
};

SpectralOutput run_spectral_experiment(const ExperimentConfig& cfg);
std::vector<ResultRow> run_linsys_experiment(const ExperimentConfig& cfg);
std::vector<ResultRow> run_alm_experiment(const ExperimentConfig& cfg);

/// CSV with a header row; all rows must share the header of the first.
std::string to_csv(const std::vector<ResultRow>& rows);

/// Aligned text rendering of a CSV document.
std::string csv_to_table(const std::string& csv);

}  // namespace almprec
