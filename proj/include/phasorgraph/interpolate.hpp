#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "phasorgraph/complex_core.hpp"
#include "phasorgraph/hermitian_graph.hpp"

namespace phasorgraph {

/// The 0/1 selection operator B (M x N): row k picks node observed[k].
class SamplingPattern {
 public:
  /// `observed` must be strictly increasing, non-empty and inside [0, n).
  SamplingPattern(std::size_t n, std::vector<std::size_t> observed);

  /// Sorts and de-duplicates first; still rejects out-of-range indices.
  static SamplingPattern from_indices(std::size_t n, std::vector<std::size_t> indices);
  /// M distinct nodes drawn uniformly at random.
  static SamplingPattern random(std::size_t n, std::size_t m, std::uint64_t seed);
  static SamplingPattern all(std::size_t n);

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return observed_.size(); }
  const std::vector<std::size_t>& observed() const noexcept { return observed_; }
  std::vector<std::size_t> unobserved() const;
  bool is_observed(std::size_t i) const;

  /// B x (length M).
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  /// B^T y (length N, zeros on unobserved nodes).
  Eigen::VectorXcd adjoint_apply(const Eigen::VectorXcd& y) const;
  Eigen::MatrixXd dense() const;

 private:
  std::size_t n_;
  std::vector<std::size_t> observed_;
};

ComplexVector apply_sampling(const SamplingPattern& B, const ComplexVector& x);

struct InterpolateConfig {
  /// Weight of the regularizer x^H L x.
  double mu = 0.1;
  /// Target for ||A x - B^T y|| / ||B^T y||.
  double cg_tol = 1e-8;
  /// Defaults to 10 N.
  std::optional<int> cg_max_iters;
  /// Diagonal preconditioning of B^T B + mu L.
  bool jacobi = false;
  /// Floor handed to ensure_pd by callers that repair L before interpolating.
  std::optional<double> pd_floor;
  /// Record ||r_k|| / ||b|| for every iteration.
  bool keep_history = false;

  void validate() const;
};

struct InterpolationResult {
  ComplexVector x_star;
  int cg_iterations = 0;
  double final_relative_residual = 0.0;
  double objective_value = 0.0;
  /// False when cg_max_iters ran out; x_star is then the last iterate.
  bool converged = false;
  std::vector<double> residual_history;
};

/// Solves (B^T B + mu L) x = B^T y by complex conjugate gradient with the
/// inner product <u, v> = v^H u. L should already have gone through
/// ensure_pd; a non-positive curvature p^H A p <= 0 throws NumericalError.
InterpolationResult interpolate(const ComplexVector& y, const SamplingPattern& B, const HermitianLaplacian& L,
                                const InterpolateConfig& cfg);

/// ||y - B x||^2 + mu Re(x^H L x).
double objective_value(const ComplexVector& x, const ComplexVector& y, const SamplingPattern& B,
                       const HermitianLaplacian& L, double mu);

}  // namespace phasorgraph
