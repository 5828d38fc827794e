// Primal-dual interior-point method on the inequality form
//
//   min c^T x   s.t.  G x + s = h,  s >= 0
//
// where G stacks the constraint rows and the finite variable bounds. The
// iteration runs on the homogeneous self-dual embedding
//
//   G^T z + c tau = 0,   s + G x - h tau = 0,   kappa + c^T x + h^T z = 0
//
// so infeasibility and unboundedness show up as tau -> 0 with a certificate
// in (x, z). Each Newton step reduces to the normal equations
// G^T diag(z/s) G, factored once per iteration and reused for the affine and
// the combined (Mehrotra) directions.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

#include "lp_internal.hpp"

namespace phasorgraph::lp::detail {

namespace {

using SparseColMatrix = Eigen::SparseMatrix<double>;

struct InequalityForm {
  SparseColMatrix G;
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

InequalityForm to_inequality_form(const StandardFormLp& p) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(p.constraints.nonZeros()) + 2 * p.num_variables());
  std::vector<double> h(p.rhs.data(), p.rhs.data() + p.rhs.size());
  for (Eigen::Index i = 0; i < p.constraints.outerSize(); ++i)
    for (SparseRowMatrix::InnerIterator it(p.constraints, i); it; ++it)
      trip.emplace_back(static_cast<int>(i), static_cast<int>(it.col()), it.value());
  for (std::size_t j = 0; j < p.num_variables(); ++j) {
    if (p.lower[j]) {
      trip.emplace_back(static_cast<int>(h.size()), static_cast<int>(j), -1.0);
      h.push_back(-*p.lower[j]);
    }
    if (p.upper[j]) {
      trip.emplace_back(static_cast<int>(h.size()), static_cast<int>(j), 1.0);
      h.push_back(*p.upper[j]);
    }
  }
  InequalityForm f;
  f.G.resize(static_cast<Eigen::Index>(h.size()), static_cast<Eigen::Index>(p.num_variables()));
  f.G.setFromTriplets(trip.begin(), trip.end());
  f.h = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
  f.c = p.objective;
  return f;
}

// Ruiz equilibration: G_scaled = diag(row) * G * diag(col).
void equilibrate(InequalityForm& f, Eigen::VectorXd& row_scale, Eigen::VectorXd& col_scale) {
  const Eigen::Index m = f.G.rows(), v = f.G.cols();
  row_scale = Eigen::VectorXd::Ones(m);
  col_scale = Eigen::VectorXd::Ones(v);
  for (int pass = 0; pass < 10; ++pass) {
    Eigen::VectorXd rmax = Eigen::VectorXd::Zero(m), cmax = Eigen::VectorXd::Zero(v);
    for (Eigen::Index j = 0; j < f.G.outerSize(); ++j)
      for (SparseColMatrix::InnerIterator it(f.G, j); it; ++it) {
        const double a = std::abs(it.value());
        rmax[it.row()] = std::max(rmax[it.row()], a);
        cmax[j] = std::max(cmax[j], a);
      }
    Eigen::VectorXd dr(m), dc(v);
    for (Eigen::Index i = 0; i < m; ++i) dr[i] = rmax[i] > 0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
    for (Eigen::Index j = 0; j < v; ++j) dc[j] = cmax[j] > 0 ? 1.0 / std::sqrt(cmax[j]) : 1.0;
    for (Eigen::Index j = 0; j < f.G.outerSize(); ++j)
      for (SparseColMatrix::InnerIterator it(f.G, j); it; ++it) it.valueRef() *= dr[it.row()] * dc[j];
    row_scale.array() *= dr.array();
    col_scale.array() *= dc.array();
    if ((rmax.array() - 1.0).abs().maxCoeff() < 1e-3 && (cmax.array() - 1.0).abs().maxCoeff() < 1e-3) break;
  }
  f.h.array() *= row_scale.array();
  f.c.array() *= col_scale.array();
}

class NormalEquations {
 public:
  explicit NormalEquations(const SparseColMatrix& G) : G_(G), Gt_(G.transpose()) {}

  bool factor(const Eigen::VectorXd& w) {
    M_ = Gt_ * w.asDiagonal() * G_;
    // Per-entry regularization: the weights z/s span many orders of magnitude
    // near the optimum, so a single global shift would swamp the small pivots.
    SparseColMatrix R = M_;
    for (Eigen::Index j = 0; j < R.cols(); ++j) {
      double& d = R.coeffRef(j, j);
      d += 1e-14 * std::abs(d) + 1e-300;
    }
    if (!analyzed_ || R.nonZeros() != pattern_nnz_) {
      ldlt_.analyzePattern(R);
      analyzed_ = true;
      pattern_nnz_ = R.nonZeros();
    }
    ldlt_.factorize(R);
    return ldlt_.info() == Eigen::Success;
  }

  // Solves M x = r, refining against the unregularized operator while the
  // residual keeps shrinking.
  Eigen::VectorXd solve(const Eigen::VectorXd& r) const {
    Eigen::VectorXd x = ldlt_.solve(r);
    Eigen::VectorXd res = r - M_ * x;
    double norm = res.lpNorm<Eigen::Infinity>();
    for (int k = 0; k < 5 && norm > 0.0; ++k) {
      const Eigen::VectorXd candidate = x + ldlt_.solve(res);
      const Eigen::VectorXd cres = r - M_ * candidate;
      const double cnorm = cres.lpNorm<Eigen::Infinity>();
      if (!(cnorm < 0.5 * norm)) break;
      x = candidate;
      res = cres;
      norm = cnorm;
    }
    return x;
  }

 private:
  const SparseColMatrix& G_;
  SparseColMatrix Gt_;
  SparseColMatrix M_;
  Eigen::SimplicialLDLT<SparseColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analyzed_ = false;
  Eigen::Index pattern_nnz_ = -1;
};

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

double max_step(double v, double dv) {
  return dv < 0.0 ? -v / dv : std::numeric_limits<double>::infinity();
}

struct Direction {
  Eigen::VectorXd dx, dz, ds;
  double dtau = 0.0, dkappa = 0.0;
};

}  // namespace

LpSolution interior_point_core(const StandardFormLp& p, const LpSettings& settings) {
  InequalityForm original = to_inequality_form(p);
  InequalityForm f = original;
  Eigen::VectorXd row_scale, col_scale;
  equilibrate(f, row_scale, col_scale);

  const SparseColMatrix& G = f.G;
  const Eigen::VectorXd& h = f.h;
  const Eigen::VectorXd& c = f.c;
  const Eigen::Index m = G.rows(), v = G.cols();

  NormalEquations normal(G);
  LpSolution out;
  out.x = Eigen::VectorXd::Zero(v);

  // Starting point: least-norm s and z, shifted into the positive orthant.
  if (!normal.factor(Eigen::VectorXd::Ones(m))) {
    out.status = LpStatus::IterLimit;
    return out;
  }
  Eigen::VectorXd x = normal.solve(G.transpose() * h);
  if (settings.initial_point) x = settings.initial_point->cwiseQuotient(col_scale);
  Eigen::VectorXd s = h - G * x;
  Eigen::VectorXd z = -(G * normal.solve(c));
  {
    const double sh = -s.minCoeff();
    if (sh >= 0.0) s.array() += 1.0 + sh;
    const double zh = -z.minCoeff();
    if (zh >= 0.0) z.array() += 1.0 + zh;
  }
  double tau = 1.0, kappa = 1.0;

  const double c_norm = std::max(1.0, original.c.lpNorm<Eigen::Infinity>());

  auto unscaled_x = [&](const Eigen::VectorXd& xs) -> Eigen::VectorXd {
    return col_scale.cwiseProduct(xs) / tau;
  };

  Eigen::VectorXd best_x = Eigen::VectorXd::Zero(v);
  double best_merit = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter <= settings.max_iterations; ++iter) {
    out.iterations = iter;
    const Eigen::VectorXd rx = G.transpose() * z + c * tau;
    const Eigen::VectorXd rz = s + G * x - h * tau;
    const double rt = kappa + c.dot(x) + h.dot(z);
    const double mu = (s.dot(z) + tau * kappa) / static_cast<double>(m + 1);

    // Convergence is judged on the original (unscaled) problem.
    const Eigen::VectorXd xo = unscaled_x(x);
    const Eigen::VectorXd zo = row_scale.cwiseProduct(z) / tau;
    const double primal_violation = std::max(0.0, (original.G * xo - original.h).maxCoeff());
    const double dual_residual =
        (original.G.transpose() * zo + original.c).lpNorm<Eigen::Infinity>() / c_norm;
    const double pcost = original.c.dot(xo);
    const double dcost = -original.h.dot(zo);
    const double rel_gap = std::abs(pcost - dcost) / std::max({1.0, std::abs(pcost), std::abs(dcost)});

    const double merit = primal_violation + dual_residual + rel_gap;
    if (std::isfinite(merit) && merit < best_merit) {
      best_merit = merit;
      best_x = xo;
    }
    if (primal_violation <= settings.feas_tol && dual_residual <= settings.opt_tol &&
        rel_gap <= settings.opt_tol) {
      out.status = LpStatus::Optimal;
      out.x = xo;
      return out;
    }

    const double hz = h.dot(z), cx = c.dot(x);
    if (hz < 0.0 && (G.transpose() * z).lpNorm<Eigen::Infinity>() <= settings.feas_tol * -hz) {
      out.status = LpStatus::Infeasible;
      out.x = best_x;
      return out;
    }
    if (cx < 0.0 && (G * x + s).lpNorm<Eigen::Infinity>() <= settings.feas_tol * -cx) {
      out.status = LpStatus::Unbounded;
      out.x = best_x;
      return out;
    }
    if (iter == settings.max_iterations || !std::isfinite(mu)) break;

    const Eigen::VectorXd w = z.cwiseQuotient(s);
    if (!normal.factor(w)) break;

    const Eigen::VectorXd v_dir = normal.solve(G.transpose() * w.cwiseProduct(h) - c);
    const Eigen::VectorXd dz_v = w.cwiseProduct(G * v_dir - h);
    const double denom = c.dot(v_dir) + h.dot(dz_v) - kappa / tau;

    auto solve_direction = [&](const Eigen::VectorXd& d_x, const Eigen::VectorXd& d_z,
                               const Eigen::VectorXd& d_s, double d_t, double d_k) {
      Direction d;
      const Eigen::VectorXd t = d_z - d_s.cwiseQuotient(z);
      const Eigen::VectorXd u = normal.solve(-d_x - G.transpose() * w.cwiseProduct(t));
      const Eigen::VectorXd dz_u = w.cwiseProduct(G * u + t);
      d.dtau = (-d_t + d_k / tau - c.dot(u) - h.dot(dz_u)) / denom;
      d.dx = u + v_dir * d.dtau;
      d.dz = dz_u + dz_v * d.dtau;
      d.ds = (-d_s - s.cwiseProduct(d.dz)).cwiseQuotient(z);
      d.dkappa = (-d_k - kappa * d.dtau) / tau;
      return d;
    };
    auto step_to_boundary = [&](const Direction& d) {
      return std::min({max_step(s, d.ds), max_step(z, d.dz), max_step(tau, d.dtau), max_step(kappa, d.dkappa)});
    };

    const Eigen::VectorXd sz = s.cwiseProduct(z);
    const Direction aff = solve_direction(rx, rz, sz, rt, tau * kappa);
    const double alpha_aff = std::min(1.0, step_to_boundary(aff));
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

    const Eigen::VectorXd d_s =
        (sz + aff.ds.cwiseProduct(aff.dz)).array() - sigma * mu;
    const double d_k = tau * kappa + aff.dtau * aff.dkappa - sigma * mu;
    const Direction dir = solve_direction((1.0 - sigma) * rx, (1.0 - sigma) * rz, d_s, (1.0 - sigma) * rt, d_k);
    const double alpha = std::min(1.0, 0.99 * step_to_boundary(dir));
    if (!std::isfinite(alpha) || alpha < 1e-12) break;

    x += alpha * dir.dx;
    s += alpha * dir.ds;
    z += alpha * dir.dz;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;

    // Keep the embedding well scaled; the problem is homogeneous in (x, s, z, tau, kappa).
    const double scale = std::max(tau, kappa);
    if (scale > 1e6 || scale < 1e-6) {
      x /= scale; s /= scale; z /= scale; tau /= scale; kappa /= scale;
    }
  }

  out.status = LpStatus::IterLimit;
  out.x = best_x;
  return out;
}

}  // namespace phasorgraph::lp::detail
