#include "phasorgraph/hermitian_graph.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include "phasorgraph/error.hpp"

namespace phasorgraph {

HermitianLaplacian::HermitianLaplacian(Eigen::VectorXd diagonal, UpperRows upper, double pd_floor)
    : diagonal_(std::move(diagonal)), upper_(std::move(upper)), pd_floor_(pd_floor) {
  const auto n = dimension();
  if (n == 0) throw ValidationError("HermitianLaplacian: dimension must be positive");
  if (upper_.size() != n) throw ValidationError("HermitianLaplacian: need one upper row per node");
  if (!diagonal_.allFinite()) throw ValidationError("HermitianLaplacian: non-finite diagonal");
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t prev = i;
    for (const auto& e : upper_[i]) {
      if (e.col <= prev || e.col >= n) throw ValidationError("HermitianLaplacian: upper entries must have increasing column > row");
      if (e.value == Complex(0.0)) throw ValidationError("HermitianLaplacian: explicit zero stored");
      if (!std::isfinite(e.value.real()) || !std::isfinite(e.value.imag()))
        throw ValidationError("HermitianLaplacian: non-finite entry");
      prev = e.col;
    }
  }
}

HermitianLaplacian HermitianLaplacian::from_dense(const Eigen::MatrixXcd& dense, double tol) {
  if (dense.rows() != dense.cols() || dense.rows() == 0)
    throw ValidationError("HermitianLaplacian: matrix must be square and non-empty");
  const Eigen::Index n = dense.rows();
  Eigen::VectorXd diag(n);
  UpperRows upper(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(dense(i, i).imag()) > tol)
      throw ValidationError("HermitianLaplacian: diagonal entry " + std::to_string(i) + " is not real");
    diag[i] = dense(i, i).real();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(dense(i, j) - std::conj(dense(j, i))) > tol)
        throw ValidationError("HermitianLaplacian: matrix is not Hermitian");
      if (dense(i, j) != Complex(0.0)) upper[static_cast<std::size_t>(i)].push_back({static_cast<std::size_t>(j), dense(i, j)});
    }
  }
  return HermitianLaplacian(std::move(diag), std::move(upper));
}

Complex HermitianLaplacian::operator()(std::size_t i, std::size_t j) const {
  if (i == j) return diagonal_[static_cast<Eigen::Index>(i)];
  const bool swap = j < i;
  const std::size_t r = swap ? j : i, c = swap ? i : j;
  for (const auto& e : upper_.at(r))
    if (e.col == c) return swap ? std::conj(e.value) : e.value;
  return 0.0;
}

std::size_t HermitianLaplacian::edge_count() const noexcept {
  std::size_t count = 0;
  for (const auto& row : upper_) count += row.size();
  return count;
}

Eigen::VectorXcd HermitianLaplacian::apply(const Eigen::VectorXcd& x) const {
  if (static_cast<std::size_t>(x.size()) != dimension()) throw ValidationError("HermitianLaplacian::apply: dimension mismatch");
  Eigen::VectorXcd y = diagonal_.cast<Complex>().cwiseProduct(x);
  for (std::size_t i = 0; i < upper_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (const auto& e : upper_[i]) {
      const auto jj = static_cast<Eigen::Index>(e.col);
      y[ii] += e.value * x[jj];
      y[jj] += std::conj(e.value) * x[ii];
    }
  }
  return y;
}

Eigen::MatrixXcd HermitianLaplacian::to_dense() const {
  const auto n = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  M.diagonal() = diagonal_.cast<Complex>();
  for (std::size_t i = 0; i < upper_.size(); ++i)
    for (const auto& e : upper_[i]) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.col)) = e.value;
      M(static_cast<Eigen::Index>(e.col), static_cast<Eigen::Index>(i)) = std::conj(e.value);
    }
  return M;
}

double HermitianLaplacian::infinity_norm() const {
  Eigen::VectorXd rows = diagonal_.cwiseAbs();
  for (std::size_t i = 0; i < upper_.size(); ++i)
    for (const auto& e : upper_[i]) {
      rows[static_cast<Eigen::Index>(i)] += std::abs(e.value);
      rows[static_cast<Eigen::Index>(e.col)] += std::abs(e.value);
    }
  return rows.maxCoeff();
}

HermitianLaplacian HermitianLaplacian::shifted(double delta) const {
  Eigen::VectorXd d = diagonal_.array() + delta;
  return HermitianLaplacian(std::move(d), upper_, pd_floor_ + delta);
}

double hermitian_quadratic_form(const HermitianLaplacian& L, const ComplexVector& x) {
  const Complex value = x.values().dot(L.apply(x.values()));
  return checked_real(value, L.infinity_norm() * x.values().squaredNorm(), "hermitian_quadratic_form");
}

HermitianLaplacian from_precision(const PrecisionEstimate& est) {
  if (!est.symmetrized) throw ValidationError("from_precision: estimate must be symmetrized first");
  const Eigen::Index n = est.real.rows();
  if (n == 0 || est.real.cols() != n || est.imag.rows() != n || est.imag.cols() != n)
    throw ValidationError("from_precision: P^R and P^I must be square and of equal size");
  Eigen::VectorXd diag(n);
  HermitianLaplacian::UpperRows upper(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (est.imag(i, i) != 0.0) throw ValidationError("from_precision: diagonal of P^I must be zero");
    diag[i] = est.real(i, i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (est.real(i, j) != est.real(j, i) || est.imag(i, j) != -est.imag(j, i))
        throw ValidationError("from_precision: P^R must be symmetric and P^I anti-symmetric");
      const Complex v(est.real(i, j), est.imag(i, j));
      if (v != Complex(0.0)) upper[static_cast<std::size_t>(i)].push_back({static_cast<std::size_t>(j), v});
    }
  }
  return HermitianLaplacian(std::move(diag), std::move(upper));
}

Eigen::MatrixXcd AdjacencyView::dense_weights() const {
  const auto n = static_cast<Eigen::Index>(degree.size());
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t i = 0; i < weights.size(); ++i)
    for (const auto& e : weights[i]) {
      W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.col)) = e.value;
      W(static_cast<Eigen::Index>(e.col), static_cast<Eigen::Index>(i)) = std::conj(e.value);
    }
  return W;
}

AdjacencyView adjacency_and_degree(const HermitianLaplacian& L) {
  const auto n = static_cast<Eigen::Index>(L.dimension());
  AdjacencyView view;
  view.weights.resize(L.dimension());
  view.degree = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < L.upper().size(); ++i)
    for (const auto& e : L.upper()[i]) {
      view.weights[i].push_back({e.col, -e.value});
      view.degree[static_cast<Eigen::Index>(i)] += std::abs(e.value);
      view.degree[static_cast<Eigen::Index>(e.col)] += std::abs(e.value);
    }
  view.self_loop = L.diagonal() - 2.0 * view.degree;
  // Nudge by a few ulps so that reassemble() reproduces the diagonal exactly
  // whenever some double allows it.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double target = L.diagonal()[i], twice = 2.0 * view.degree[i];
    double& s = view.self_loop[i];
    for (int k = 0; k < 4 && s + twice != target; ++k)
      s = std::nextafter(s, s + twice < target ? std::numeric_limits<double>::infinity()
                                               : -std::numeric_limits<double>::infinity());
  }
  return view;
}

HermitianLaplacian reassemble(const AdjacencyView& view, double pd_floor) {
  Eigen::VectorXd diag = 2.0 * view.degree + view.self_loop;
  HermitianLaplacian::UpperRows upper(view.weights.size());
  for (std::size_t i = 0; i < view.weights.size(); ++i)
    for (const auto& e : view.weights[i]) upper[i].push_back({e.col, -e.value});
  return HermitianLaplacian(std::move(diag), std::move(upper), pd_floor);
}

namespace {

struct PowerResult {
  double theta = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Dominant eigenvalue of shift*I + sign*L (all eigenvalues of that operator
// are in [0, 2 shift]); returns the corresponding eigenvalue of L.
PowerResult power_iteration(const HermitianLaplacian& L, double shift, double sign, int max_iters, double tol,
                            double& max_imag) {
  const auto n = static_cast<Eigen::Index>(L.dimension());
  const double norm_inf = L.infinity_norm();
  std::mt19937_64 rng(0x5eed1234ULL);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = Complex(normal(rng), normal(rng));
  v.normalize();

  PowerResult out;
  const double floor_scale = 1e-3 * std::max(shift, std::numeric_limits<double>::min());
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::VectorXcd Lv = L.apply(v);
    const Complex rq = v.dot(Lv);
    if (norm_inf > 0.0) max_imag = std::max(max_imag, std::abs(rq.imag()) / norm_inf);
    const double theta = checked_real(rq, norm_inf, "spectral_summary");
    const double residual = (Lv - theta * v).norm();
    out.theta = theta;
    out.iterations = it;
    out.residual = residual;
    if (residual <= tol * std::max(std::abs(theta), floor_scale)) {
      out.converged = true;
      return out;
    }
    Eigen::VectorXcd next = shift * v + sign * Lv;
    const double nn = next.norm();
    if (nn == 0.0) {  // v is an exact eigenvector of the opposite extreme
      out.converged = true;
      return out;
    }
    v = next / nn;
  }
  return out;
}

}  // namespace

SpectralSummary spectral_summary(const HermitianLaplacian& L, int max_iters, double tol) {
  const double g = L.infinity_norm();
  SpectralSummary s;
  if (g == 0.0) {
    s.converged = true;
    return s;
  }
  const auto hi = power_iteration(L, g, 1.0, max_iters, tol, s.max_imag_residual);
  const auto lo = power_iteration(L, g, -1.0, max_iters, tol, s.max_imag_residual);
  s.lambda_max_estimate = hi.theta;
  s.lambda_min_estimate = lo.theta;
  s.iterations_max = hi.iterations;
  s.iterations_min = lo.iterations;
  s.residual_max = hi.residual;
  s.residual_min = lo.residual;
  s.converged = hi.converged && lo.converged;
  return s;
}

HermitianLaplacian ensure_pd(const HermitianLaplacian& L, const SpectralSummary& summary, std::optional<double> floor) {
  const double f = floor.value_or(1e-8 * std::abs(summary.lambda_max_estimate));
  if (summary.lambda_min_estimate > 0.0) return L;
  return L.shifted(f - summary.lambda_min_estimate);
}

HermitianLaplacian ensure_pd(const HermitianLaplacian& L, std::optional<double> floor) {
  return ensure_pd(L, spectral_summary(L), floor);
}

nlohmann::json to_json(const HermitianLaplacian& L) {
  nlohmann::json j;
  j["kind"] = "laplacian";
  j["n"] = L.dimension();
  j["format"] = "coo";
  j["pd_floor"] = L.pd_floor();
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (std::size_t i = 0; i < L.dimension(); ++i) {
    const double d = L.diagonal()[static_cast<Eigen::Index>(i)];
    if (d != 0.0) re.push_back({i, i, d});
  }
  for (std::size_t i = 0; i < L.upper().size(); ++i)
    for (const auto& e : L.upper()[i]) {
      if (e.value.real() != 0.0) {
        re.push_back({i, e.col, e.value.real()});
        re.push_back({e.col, i, e.value.real()});
      }
      if (e.value.imag() != 0.0) {
        im.push_back({i, e.col, e.value.imag()});
        im.push_back({e.col, i, -e.value.imag()});
      }
    }
  j["real"] = re;
  j["imag"] = im;
  return j;
}

HermitianLaplacian laplacian_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "coo") throw ValidationError("laplacian JSON: format must be coo");
    const auto n = j.at("n").get<Eigen::Index>();
    if (n <= 0) throw ValidationError("laplacian JSON: n must be positive");
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& t : j.at("real")) {
      const auto r = t.at(0).get<Eigen::Index>(), c = t.at(1).get<Eigen::Index>();
      if (r < 0 || c < 0 || r >= n || c >= n) throw ValidationError("laplacian JSON: index out of range");
      M(r, c).real(t.at(2).get<double>());
    }
    for (const auto& t : j.at("imag")) {
      const auto r = t.at(0).get<Eigen::Index>(), c = t.at(1).get<Eigen::Index>();
      if (r < 0 || c < 0 || r >= n || c >= n) throw ValidationError("laplacian JSON: index out of range");
      M(r, c).imag(t.at(2).get<double>());
    }
    const auto L = HermitianLaplacian::from_dense(M, 0.0);
    return HermitianLaplacian(L.diagonal(), L.upper(), j.value("pd_floor", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("laplacian JSON: ") + e.what());
  }
}

void write_edge_list(std::ostream& os, const HermitianLaplacian& L) {
  const auto view = adjacency_and_degree(L);
  const auto old = os.precision(17);
  os << "# i j amp phase\n";
  for (std::size_t i = 0; i < view.weights.size(); ++i)
    for (const auto& e : view.weights[i]) {
      double phase = std::arg(e.value);
      if (phase < 0.0) phase += 2.0 * std::numbers::pi;
      os << i << ' ' << e.col << ' ' << std::abs(e.value) << ' ' << phase << '\n';
    }
  os.precision(old);
}

}  // namespace phasorgraph
