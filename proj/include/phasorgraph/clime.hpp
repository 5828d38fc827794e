#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "phasorgraph/complex_core.hpp"
#include "phasorgraph/lp.hpp"

namespace phasorgraph {

struct ClimeConfig {
  /// Slack of the constraint ||C p_i - e_i||_inf <= rho (Manhattan per entry).
  double rho = 0.2;
  /// Entries whose real and imaginary magnitudes are both below
  /// sparsity_epsilon * max|p_i| are snapped to zero after the solve.
  double sparsity_epsilon = 1e-6;
  /// After an optimal solve, re-solve with the near-zero entries fixed at 0
  /// and keep that solution when it reaches the same objective. Removes the
  /// small residual entries an interior-point solve leaves behind.
  bool polish = true;
  /// Worker count for the column solves (0 = all cores).
  std::size_t column_parallelism = 1;
  lp::LpSettings lp;

  void validate() const;
};

/// The per-column LP. Variables, each a block of N:
///   p^R, p^I, pbar^R, pbar^I, sbar^R, sbar^I
/// Rows (all `<=`), in order:
///   4N  pbar^R >= +-p^R,  pbar^I >= +-p^I
///   4N  sbar^R >= +-(C^R p^R - C^I p^I - e_i),  sbar^I >= +-(C^R p^I + C^I p^R)
///   N   sbar^R + sbar^I <= rho
/// pbar and sbar carry a lower bound of 0.
struct ColumnLpProblem {
  enum Block : std::size_t { PRe = 0, PIm = 1, PBarRe = 2, PBarIm = 3, SBarRe = 4, SBarIm = 5 };

  std::size_t index = 0;
  std::size_t n = 0;
  double rho = 0.0;
  lp::StandardFormLp lp;

  std::size_t var(Block block, std::size_t k) const { return block * n + k; }
};

ColumnLpProblem build_column_lp(const CovarianceMatrix& C, std::size_t i, const ClimeConfig& cfg);

/// max_n |Re r_n| + |Im r_n| for r = C p - e_i.
double column_residual(const CovarianceMatrix& C, std::size_t i, const Eigen::VectorXd& p_re,
                       const Eigen::VectorXd& p_im);

struct ColumnSolution {
  Eigen::VectorXd p_re, p_im;
  lp::LpSolution lp;
  /// rho of the last attempt (doubled once after an infeasible first attempt).
  double rho_used = 0.0;
  /// column_residual before and after snapping.
  double raw_residual = 0.0;
  double snapped_residual = 0.0;
  /// False when snapping broke feasibility and the raw column was kept.
  bool snapped = false;
  /// Relative cutoff of the accepted support-restricted re-solve, 0 if none.
  double polish_threshold = 0.0;
};

ColumnSolution solve_column(const CovarianceMatrix& C, std::size_t i, const ClimeConfig& cfg);

/// P = P^R + j P^I. Raw from estimate_precision; symmetrize() makes P^R
/// symmetric and P^I anti-symmetric with an exactly-zero diagonal.
struct PrecisionEstimate {
  Eigen::MatrixXd real;
  Eigen::MatrixXd imag;
  double rho_used = 0.0;
  std::vector<lp::LpStatus> column_status;
  std::vector<double> column_rho;
  bool symmetrized = false;

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(real.rows()); }
  bool degraded() const;
};

PrecisionEstimate estimate_precision(const CovarianceMatrix& C, const ClimeConfig& cfg);

PrecisionEstimate symmetrize(const PrecisionEstimate& est);

/// {n, rho, format:"coo", symmetrized, real:[[i,j,v]..], imag:[[i,j,v]..], statuses:[..]}
nlohmann::json to_json(const PrecisionEstimate& est);
PrecisionEstimate precision_from_json(const nlohmann::json& j);

}  // namespace phasorgraph
