#pragma once

#include <complex>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

namespace phasorgraph {

using Complex = std::complex<double>;

/// Tolerances shared by every invariant check in the library.
struct Tolerances {
  double absolute = 1e-12;
  double relative = 1e-10;
};

inline constexpr Tolerances kTolerances{};

/// Non-empty complex vector with finite entries.
class ComplexVector {
 public:
  explicit ComplexVector(Eigen::VectorXcd values);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  Complex operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXcd& values() const noexcept { return values_; }

 private:
  Eigen::VectorXcd values_;
};

/// Dense complex matrix with positive dimensions and finite entries.
class ComplexDenseMatrix {
 public:
  explicit ComplexDenseMatrix(Eigen::MatrixXcd values);

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  Complex operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXcd& values() const noexcept { return values_; }

 private:
  Eigen::MatrixXcd values_;
};

/// Divisor used by empirical_covariance: N (number of nodes) or K (number of samples).
enum class Normalizer { ByNodes, BySamples };

const char* to_string(Normalizer n) noexcept;
Normalizer normalizer_from_string(const std::string& s);

/// Square Hermitian matrix with a real non-negative diagonal, plus the
/// bookkeeping of how it was estimated.
class CovarianceMatrix {
 public:
  CovarianceMatrix(ComplexDenseMatrix matrix, std::size_t sample_count, Normalizer normalizer);

  const ComplexDenseMatrix& matrix() const noexcept { return matrix_; }
  std::size_t dimension() const noexcept { return matrix_.rows(); }
  std::size_t sample_count() const noexcept { return sample_count_; }
  Normalizer normalizer() const noexcept { return normalizer_; }

  Eigen::MatrixXd real_part() const { return matrix_.values().real(); }
  Eigen::MatrixXd imag_part() const { return matrix_.values().imag(); }

 private:
  ComplexDenseMatrix matrix_;
  std::size_t sample_count_;
  Normalizer normalizer_;
};

/// Removes the per-node (row) mean across the K observations.
ComplexDenseMatrix center_columns(const ComplexDenseMatrix& X);

/// Per-node mean across observations (length N).
Eigen::VectorXcd row_means(const ComplexDenseMatrix& X);

/// C = (1/d) X X^H with d = N (ByNodes) or d = K (BySamples). X must already be centered.
/// The product is averaged with its conjugate transpose so the result is exactly Hermitian.
CovarianceMatrix empirical_covariance(const ComplexDenseMatrix& X, Normalizer normalizer);

/// Re(x^H L x). Throws NumericalError when the imaginary residual exceeds
/// relative * ||L||_inf * ||x||^2, which only happens when L is not Hermitian.
double hermitian_quadratic_form(const ComplexDenseMatrix& L, const ComplexVector& x);

/// Shared realness check: returns Re(value) or throws if |Im(value)| > relative * scale.
double checked_real(Complex value, double scale, const char* context);

/// max_ij |A_ij|.
double max_abs(const Eigen::MatrixXcd& A);

/// Induced infinity norm (max absolute row sum).
double infinity_norm(const Eigen::MatrixXcd& A);

}  // namespace phasorgraph
