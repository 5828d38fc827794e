#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace phasorgraph::lp {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// min c^T x  s.t.  A x <= b,  lower <= x <= upper (each bound optional).
///
/// Construct through LpBuilder or directly and call validate(); A must not
/// store explicit zeros.
struct StandardFormLp {
  Eigen::VectorXd objective;
  SparseRowMatrix constraints;
  Eigen::VectorXd rhs;
  std::vector<std::optional<double>> lower;
  std::vector<std::optional<double>> upper;

  std::size_t num_variables() const noexcept { return static_cast<std::size_t>(objective.size()); }
  std::size_t num_constraints() const noexcept { return static_cast<std::size_t>(rhs.size()); }

  /// Throws ValidationError on inconsistent dimensions, non-finite data,
  /// explicit zeros in A, or crossed bounds.
  void validate() const;

  /// Largest violation of A x <= b and of the variable bounds at x (0 if feasible).
  double max_violation(const Eigen::VectorXd& x) const;
};

/// Accumulates triplets row by row, dropping exact zeros.
class LpBuilder {
 public:
  explicit LpBuilder(std::size_t num_variables);

  void set_objective(std::size_t var, double coefficient);
  void set_lower(std::size_t var, double bound);
  void set_upper(std::size_t var, double bound);

  /// Starts a new `<=` row and returns its index.
  std::size_t add_row(double rhs);
  void add_term(std::size_t row, std::size_t var, double coefficient);

  StandardFormLp build() const;

 private:
  std::size_t num_variables_;
  Eigen::VectorXd objective_;
  std::vector<std::optional<double>> lower_, upper_;
  std::vector<double> rhs_;
  std::vector<Eigen::Triplet<double>> triplets_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

const char* to_string(LpStatus s) noexcept;
LpStatus status_from_string(const std::string& s);

struct LpSolution {
  Eigen::VectorXd x;
  double objective_value = 0.0;
  LpStatus status = LpStatus::IterLimit;
  int iterations = 0;
  double max_violation = 0.0;
};

enum class LpAlgorithm { InteriorPoint, Simplex };

struct LpSettings {
  LpAlgorithm algorithm = LpAlgorithm::InteriorPoint;
  int max_iterations = 200;
  double feas_tol = 1e-8;
  double opt_tol = 1e-8;
  /// Optional starting point for the interior-point method (length v).
  std::optional<Eigen::VectorXd> initial_point;
};

/// Solves p with the configured algorithm. Deterministic for identical input.
/// Problem statuses are reported in LpSolution::status, never thrown.
LpSolution solve_lp(const StandardFormLp& p, const LpSettings& settings = {});

/// Homogeneous self-dual primal-dual interior-point method with Mehrotra
/// predictor-corrector steps.
LpSolution solve_interior_point(const StandardFormLp& p, const LpSettings& settings);

/// Dense two-phase tableau simplex with Bland's rule. Intended for small
/// problems and for cross-checking the interior-point method.
LpSolution solve_simplex(const StandardFormLp& p, const LpSettings& settings);

/// Plain-text dump, one constraint per line (grammar in docs/lp_format.md).
void write_lp(std::ostream& os, const StandardFormLp& p);

}  // namespace phasorgraph::lp
