#include "phasorgraph/complex_core.hpp"

#include <cmath>
#include <sstream>

#include "phasorgraph/error.hpp"

namespace phasorgraph {

namespace {

bool all_finite(const Eigen::MatrixXcd& A) {
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      if (!std::isfinite(A(i, j).real()) || !std::isfinite(A(i, j).imag())) return false;
  return true;
}

}  // namespace

ComplexVector::ComplexVector(Eigen::VectorXcd values) : values_(std::move(values)) {
  if (values_.size() == 0) throw ValidationError("ComplexVector: length must be positive");
  if (!all_finite(values_)) throw ValidationError("ComplexVector: non-finite entry");
}

ComplexDenseMatrix::ComplexDenseMatrix(Eigen::MatrixXcd values) : values_(std::move(values)) {
  if (values_.rows() == 0 || values_.cols() == 0)
    throw ValidationError("ComplexDenseMatrix: dimensions must be positive");
  if (!all_finite(values_)) throw ValidationError("ComplexDenseMatrix: non-finite entry");
}

const char* to_string(Normalizer n) noexcept {
  return n == Normalizer::ByNodes ? "by_nodes" : "by_samples";
}

Normalizer normalizer_from_string(const std::string& s) {
  if (s == "by_nodes" || s == "nodes") return Normalizer::ByNodes;
  if (s == "by_samples" || s == "samples") return Normalizer::BySamples;
  throw ValidationError("unknown covariance normalizer '" + s + "' (expected by_nodes or by_samples)");
}

CovarianceMatrix::CovarianceMatrix(ComplexDenseMatrix matrix, std::size_t sample_count,
                                   Normalizer normalizer)
    : matrix_(std::move(matrix)), sample_count_(sample_count), normalizer_(normalizer) {
  const auto& C = matrix_.values();
  if (C.rows() != C.cols()) throw ValidationError("CovarianceMatrix: matrix must be square");
  if (sample_count_ == 0) throw ValidationError("CovarianceMatrix: sample_count must be positive");
  const double tol = kTolerances.absolute * std::max(max_abs(C), 1.0);
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    if (std::abs(C(i, i).imag()) > tol || C(i, i).real() < -tol)
      throw ValidationError("CovarianceMatrix: diagonal must be real and non-negative");
    for (Eigen::Index j = i + 1; j < C.cols(); ++j)
      if (std::abs(C(i, j) - std::conj(C(j, i))) > tol)
        throw ValidationError("CovarianceMatrix: matrix is not Hermitian");
  }
}

Eigen::VectorXcd row_means(const ComplexDenseMatrix& X) {
  return X.values().rowwise().mean();
}

ComplexDenseMatrix center_columns(const ComplexDenseMatrix& X) {
  Eigen::MatrixXcd out = X.values();
  out.colwise() -= row_means(X);
  return ComplexDenseMatrix(std::move(out));
}

CovarianceMatrix empirical_covariance(const ComplexDenseMatrix& X, Normalizer normalizer) {
  const auto& V = X.values();
  const double divisor =
      normalizer == Normalizer::ByNodes ? static_cast<double>(V.rows()) : static_cast<double>(V.cols());
  Eigen::MatrixXcd C = (V * V.adjoint()) / divisor;
  Eigen::MatrixXcd H = (C + C.adjoint()) * 0.5;
  return CovarianceMatrix(ComplexDenseMatrix(std::move(H)), X.cols(), normalizer);
}

double checked_real(Complex value, double scale, const char* context) {
  if (std::abs(value.imag()) > kTolerances.relative * scale) {
    std::ostringstream os;
    os << context << ": imaginary residual " << value.imag() << " exceeds tolerance "
       << kTolerances.relative * scale << " (operator is not Hermitian)";
    throw NumericalError(os.str());
  }
  return value.real();
}

double hermitian_quadratic_form(const ComplexDenseMatrix& L, const ComplexVector& x) {
  const auto& A = L.values();
  if (A.rows() != A.cols() || static_cast<std::size_t>(A.cols()) != x.size())
    throw ValidationError("hermitian_quadratic_form: dimension mismatch");
  const Complex value = x.values().dot(A * x.values());  // dot() conjugates its left argument
  return checked_real(value, infinity_norm(A) * x.values().squaredNorm(), "hermitian_quadratic_form");
}

double max_abs(const Eigen::MatrixXcd& A) {
  return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

double infinity_norm(const Eigen::MatrixXcd& A) {
  return A.size() == 0 ? 0.0 : A.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace phasorgraph
