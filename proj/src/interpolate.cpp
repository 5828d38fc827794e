#include "phasorgraph/interpolate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "phasorgraph/error.hpp"

namespace phasorgraph {

SamplingPattern::SamplingPattern(std::size_t n, std::vector<std::size_t> observed)
    : n_(n), observed_(std::move(observed)) {
  if (n_ == 0) throw ValidationError("SamplingPattern: n must be positive");
  if (observed_.empty()) throw ValidationError("SamplingPattern: at least one node must be observed");
  for (std::size_t k = 0; k < observed_.size(); ++k) {
    if (observed_[k] >= n_)
      throw ValidationError("SamplingPattern: index " + std::to_string(observed_[k]) + " out of range [0, " +
                            std::to_string(n_) + ")");
    if (k > 0 && observed_[k] <= observed_[k - 1])
      throw ValidationError("SamplingPattern: indices must be strictly increasing");
  }
}

SamplingPattern SamplingPattern::from_indices(std::size_t n, std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return SamplingPattern(n, std::move(indices));
}

SamplingPattern SamplingPattern::random(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m == 0 || m > n) throw ValidationError("SamplingPattern::random: need 0 < M <= N");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  perm.resize(m);
  std::sort(perm.begin(), perm.end());
  return SamplingPattern(n, std::move(perm));
}

SamplingPattern SamplingPattern::all(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return SamplingPattern(n, std::move(idx));
}

std::vector<std::size_t> SamplingPattern::unobserved() const {
  std::vector<std::size_t> out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (k < observed_.size() && observed_[k] == i) ++k;
    else out.push_back(i);
  }
  return out;
}

bool SamplingPattern::is_observed(std::size_t i) const {
  return std::binary_search(observed_.begin(), observed_.end(), i);
}

Eigen::VectorXcd SamplingPattern::apply(const Eigen::VectorXcd& x) const {
  if (static_cast<std::size_t>(x.size()) != n_) throw ValidationError("SamplingPattern::apply: dimension mismatch");
  Eigen::VectorXcd out(static_cast<Eigen::Index>(observed_.size()));
  for (std::size_t k = 0; k < observed_.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = x[static_cast<Eigen::Index>(observed_[k])];
  return out;
}

Eigen::VectorXcd SamplingPattern::adjoint_apply(const Eigen::VectorXcd& y) const {
  if (static_cast<std::size_t>(y.size()) != observed_.size())
    throw ValidationError("SamplingPattern::adjoint_apply: dimension mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t k = 0; k < observed_.size(); ++k)
    out[static_cast<Eigen::Index>(observed_[k])] = y[static_cast<Eigen::Index>(k)];
  return out;
}

Eigen::MatrixXd SamplingPattern::dense() const {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(observed_.size()), static_cast<Eigen::Index>(n_));
  for (std::size_t k = 0; k < observed_.size(); ++k) B(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(observed_[k])) = 1.0;
  return B;
}

ComplexVector apply_sampling(const SamplingPattern& B, const ComplexVector& x) {
  return ComplexVector(B.apply(x.values()));
}

void InterpolateConfig::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("InterpolateConfig: mu must be positive");
  if (!(cg_tol > 0.0)) throw ValidationError("InterpolateConfig: cg_tol must be positive");
  if (cg_max_iters && *cg_max_iters <= 0) throw ValidationError("InterpolateConfig: cg_max_iters must be positive");
  if (pd_floor && !(*pd_floor > 0.0)) throw ValidationError("InterpolateConfig: pd_floor must be positive");
}

double objective_value(const ComplexVector& x, const ComplexVector& y, const SamplingPattern& B,
                       const HermitianLaplacian& L, double mu) {
  if (x.size() != B.n() || y.size() != B.size() || L.dimension() != B.n())
    throw ValidationError("objective_value: dimension mismatch");
  const double fidelity = (y.values() - B.apply(x.values())).squaredNorm();
  return fidelity + mu * hermitian_quadratic_form(L, x);
}

namespace {

class SystemOperator {
 public:
  SystemOperator(const SamplingPattern& B, const HermitianLaplacian& L, double mu) : B_(B), L_(L), mu_(mu) {}

  Eigen::VectorXcd operator()(const Eigen::VectorXcd& x) const {
    Eigen::VectorXcd y = mu_ * L_.apply(x);
    for (auto i : B_.observed()) y[static_cast<Eigen::Index>(i)] += x[static_cast<Eigen::Index>(i)];
    return y;
  }

  Eigen::VectorXd diagonal() const {
    Eigen::VectorXd d = mu_ * L_.diagonal();
    for (auto i : B_.observed()) d[static_cast<Eigen::Index>(i)] += 1.0;
    return d;
  }

 private:
  const SamplingPattern& B_;
  const HermitianLaplacian& L_;
  double mu_;
};

}  // namespace

InterpolationResult interpolate(const ComplexVector& y, const SamplingPattern& B, const HermitianLaplacian& L,
                                const InterpolateConfig& cfg) {
  cfg.validate();
  if (y.size() != B.size()) throw ValidationError("interpolate: y must have one entry per observed node");
  if (L.dimension() != B.n()) throw ValidationError("interpolate: Laplacian and sampling pattern disagree on N");

  const SystemOperator A(B, L, cfg.mu);
  const auto n = static_cast<Eigen::Index>(B.n());
  const int max_iters = cfg.cg_max_iters.value_or(static_cast<int>(10 * B.n()));
  const Eigen::VectorXcd b = B.adjoint_apply(y.values());
  const double b_norm = b.norm();

  Eigen::VectorXd inv_diag = Eigen::VectorXd::Ones(n);
  if (cfg.jacobi) {
    const Eigen::VectorXd d = A.diagonal();
    if ((d.array() <= 0.0).any())
      throw NumericalError("interpolate: non-positive diagonal in B^T B + mu L; run ensure_pd on the Laplacian first");
    inv_diag = d.cwiseInverse();
  }

  InterpolationResult out{ComplexVector(Eigen::VectorXcd::Zero(n)), 0, 0.0, 0.0, false, {}};
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
  if (b_norm == 0.0) {
    out.converged = true;
    out.objective_value = objective_value(out.x_star, y, B, L, cfg.mu);
    return out;
  }

  Eigen::VectorXcd r = b;
  int iterations = 0;
  double rel = 1.0;
  // Restart from the true residual whenever the recurrence claims convergence
  // that the true residual does not confirm.
  while (true) {
    Eigen::VectorXcd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXcd p = z;
    double rz = r.dot(z).real();
    rel = r.norm() / b_norm;
    while (rel > cfg.cg_tol && iterations < max_iters) {
      const Eigen::VectorXcd Ap = A(p);
      const double curvature = p.dot(Ap).real();
      if (!(curvature > 0.0)) {
        std::ostringstream os;
        os << "interpolate: non-positive curvature p^H A p = " << curvature << " at iteration " << iterations
           << "; B^T B + mu L is not positive definite, run ensure_pd on the Laplacian first";
        throw NumericalError(os.str());
      }
      const double alpha = rz / curvature;
      x += alpha * p;
      r -= alpha * Ap;
      ++iterations;
      rel = r.norm() / b_norm;
      if (cfg.keep_history) out.residual_history.push_back(rel);
      z = inv_diag.cwiseProduct(r);
      const double rz_next = r.dot(z).real();
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    r = b - A(x);
    rel = r.norm() / b_norm;
    if (rel <= cfg.cg_tol || iterations >= max_iters) break;
  }

  out.x_star = ComplexVector(x);
  out.cg_iterations = iterations;
  out.final_relative_residual = rel;
  out.converged = rel <= cfg.cg_tol;
  out.objective_value = objective_value(out.x_star, y, B, L, cfg.mu);
  return out;
}

}  // namespace phasorgraph
