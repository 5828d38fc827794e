#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "phasorgraph/clime.hpp"
#include "phasorgraph/complex_core.hpp"

namespace phasorgraph {

/// Generalized graph Laplacian of a Hermitian graph.
///
/// Only the real diagonal and the strictly upper triangle are stored; the
/// lower triangle is the conjugate by construction, so L == L^H holds exactly.
class HermitianLaplacian {
 public:
  struct Entry {
    std::size_t col;
    Complex value;
  };
  using UpperRows = std::vector<std::vector<Entry>>;

  /// `upper[i]` lists (j, L_ij) for j > i, strictly increasing in j, no zeros.
  HermitianLaplacian(Eigen::VectorXd diagonal, UpperRows upper, double pd_floor = 0.0);

  /// Reads the upper triangle of `dense`. Throws unless the diagonal is real
  /// and the lower triangle matches the conjugate upper one within `tol`.
  static HermitianLaplacian from_dense(const Eigen::MatrixXcd& dense, double tol = 0.0);

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(diagonal_.size()); }
  const Eigen::VectorXd& diagonal() const noexcept { return diagonal_; }
  const UpperRows& upper() const noexcept { return upper_; }
  double pd_floor() const noexcept { return pd_floor_; }

  Complex operator()(std::size_t i, std::size_t j) const;
  /// Number of stored off-diagonal (upper) entries.
  std::size_t edge_count() const noexcept;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  Eigen::MatrixXcd to_dense() const;
  double infinity_norm() const;

  /// L + delta I, with delta added to pd_floor.
  HermitianLaplacian shifted(double delta) const;

 private:
  Eigen::VectorXd diagonal_;
  UpperRows upper_;
  double pd_floor_;
};

/// Re(x^H L x) with the same realness check as the dense overload.
double hermitian_quadratic_form(const HermitianLaplacian& L, const ComplexVector& x);

/// L = P* = P^R* + j P^I*. The estimate must already be symmetrized.
HermitianLaplacian from_precision(const PrecisionEstimate& est);

/// Formal inversion of L = D - W + diag(D) + diag(self_loop):
///   W_ij = -L_ij (i != j), D_ii = sum_j |W_ij|, self_loop_i = L_ii - 2 D_ii.
/// Degrees are magnitudes so they stay real for complex weights; negative
/// self-loop residuals are reported as-is.
struct AdjacencyView {
  HermitianLaplacian::UpperRows weights;  ///< W_ij for j > i; W_ji = conj(W_ij)
  Eigen::VectorXd degree;
  Eigen::VectorXd self_loop;

  Eigen::MatrixXcd dense_weights() const;
};

AdjacencyView adjacency_and_degree(const HermitianLaplacian& L);
HermitianLaplacian reassemble(const AdjacencyView& view, double pd_floor = 0.0);

struct SpectralSummary {
  double lambda_min_estimate = 0.0;
  double lambda_max_estimate = 0.0;
  int iterations_min = 0;
  int iterations_max = 0;
  double residual_min = 0.0;
  double residual_max = 0.0;
  /// Largest |Im(v^H L v)| / (||L||_inf ||v||^2) seen over all Rayleigh quotients.
  double max_imag_residual = 0.0;
  bool converged = false;
};

/// Extreme eigenvalues by power iteration on g I + L (largest) and g I - L
/// (smallest), with g the Gershgorin bound ||L||_inf. Stops when
/// ||L v - theta v|| <= tol * max(|theta|, 1e-3 g). Hitting max_iters leaves
/// converged == false with the best estimates so far.
SpectralSummary spectral_summary(const HermitianLaplacian& L, int max_iters = 50000, double tol = 1e-6);

/// Diagonal loading: when the smallest eigenvalue estimate is <= 0, returns
/// L + (floor - lambda_min) I; otherwise L unchanged. `floor` defaults to
/// 1e-8 * lambda_max.
HermitianLaplacian ensure_pd(const HermitianLaplacian& L, std::optional<double> floor = std::nullopt);
HermitianLaplacian ensure_pd(const HermitianLaplacian& L, const SpectralSummary& summary,
                             std::optional<double> floor = std::nullopt);

/// Same COO layout as the precision estimate, covering both triangles, plus
/// "kind":"laplacian" and "pd_floor".
nlohmann::json to_json(const HermitianLaplacian& L);
HermitianLaplacian laplacian_from_json(const nlohmann::json& j);

/// `i j amp phase` per undirected pair i < j of the W view, phase in [0, 2 pi).
void write_edge_list(std::ostream& os, const HermitianLaplacian& L);

}  // namespace phasorgraph
