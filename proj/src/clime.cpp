#include "phasorgraph/clime.hpp"

#include <cmath>

#include "phasorgraph/error.hpp"
#include "phasorgraph/parallel.hpp"

namespace phasorgraph {

void ClimeConfig::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("ClimeConfig: rho must be positive");
  if (!(sparsity_epsilon >= 0.0)) throw ValidationError("ClimeConfig: sparsity_epsilon must be non-negative");
}

ColumnLpProblem build_column_lp(const CovarianceMatrix& C, std::size_t i, const ClimeConfig& cfg) {
  cfg.validate();
  const std::size_t n = C.dimension();
  if (i >= n) throw ValidationError("build_column_lp: column index out of range");
  const Eigen::MatrixXd CR = C.real_part();
  const Eigen::MatrixXd CI = C.imag_part();

  ColumnLpProblem prob;
  prob.index = i;
  prob.n = n;
  prob.rho = cfg.rho;
  using B = ColumnLpProblem::Block;
  auto var = [&](B block, std::size_t k) { return prob.var(block, k); };

  lp::LpBuilder b(6 * n);
  for (std::size_t k = 0; k < n; ++k) {
    b.set_objective(var(B::PBarRe, k), 1.0);
    b.set_objective(var(B::PBarIm, k), 1.0);
    for (B blk : {B::PBarRe, B::PBarIm, B::SBarRe, B::SBarIm}) b.set_lower(var(blk, k), 0.0);
  }

  // pbar >= +-p
  for (auto [p, pbar] : {std::pair{B::PRe, B::PBarRe}, std::pair{B::PIm, B::PBarIm}})
    for (double sign : {1.0, -1.0})
      for (std::size_t k = 0; k < n; ++k) {
        const auto r = b.add_row(0.0);
        b.add_term(r, var(p, k), sign);
        b.add_term(r, var(pbar, k), -1.0);
      }

  const auto ni = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
  // sbar^R >= +-(C^R p^R - C^I p^I - e_i)
  for (double sign : {1.0, -1.0})
    for (std::size_t row = 0; row < n; ++row) {
      const auto r = b.add_row(row == i ? sign : 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        b.add_term(r, var(B::PRe, k), sign * CR(ni(row), ni(k)));
        b.add_term(r, var(B::PIm, k), -sign * CI(ni(row), ni(k)));
      }
      b.add_term(r, var(B::SBarRe, row), -1.0);
    }
  // sbar^I >= +-(C^R p^I + C^I p^R)
  for (double sign : {1.0, -1.0})
    for (std::size_t row = 0; row < n; ++row) {
      const auto r = b.add_row(0.0);
      for (std::size_t k = 0; k < n; ++k) {
        b.add_term(r, var(B::PRe, k), sign * CI(ni(row), ni(k)));
        b.add_term(r, var(B::PIm, k), sign * CR(ni(row), ni(k)));
      }
      b.add_term(r, var(B::SBarIm, row), -1.0);
    }
  // sbar^R + sbar^I <= rho
  for (std::size_t row = 0; row < n; ++row) {
    const auto r = b.add_row(cfg.rho);
    b.add_term(r, var(B::SBarRe, row), 1.0);
    b.add_term(r, var(B::SBarIm, row), 1.0);
  }

  prob.lp = b.build();
  return prob;
}

double column_residual(const CovarianceMatrix& C, std::size_t i, const Eigen::VectorXd& p_re,
                       const Eigen::VectorXd& p_im) {
  Eigen::VectorXcd p(p_re.size());
  p.real() = p_re;
  p.imag() = p_im;
  Eigen::VectorXcd r = C.matrix().values() * p;
  r[static_cast<Eigen::Index>(i)] -= 1.0;
  return (r.real().cwiseAbs() + r.imag().cwiseAbs()).maxCoeff();
}

namespace {

ColumnSolution solve_once(const CovarianceMatrix& C, std::size_t i, const ClimeConfig& cfg) {
  const ColumnLpProblem prob = build_column_lp(C, i, cfg);
  ColumnSolution out;
  out.rho_used = cfg.rho;
  out.lp = lp::solve_lp(prob.lp, cfg.lp);
  const auto n = static_cast<Eigen::Index>(prob.n);
  out.p_re = out.lp.x.segment(0, n);
  out.p_im = out.lp.x.segment(n, n);

  if (cfg.polish && out.lp.status == lp::LpStatus::Optimal) {
    const Eigen::VectorXd mag = out.p_re.cwiseAbs() + out.p_im.cwiseAbs();
    const double peak = mag.maxCoeff();
    const double slack = 10.0 * cfg.lp.opt_tol * std::max(1.0, std::abs(out.lp.objective_value));
    for (double threshold : {1e-4, 1e-5, 1e-6}) {
      lp::StandardFormLp restricted = prob.lp;
      std::size_t dropped = 0;
      for (std::size_t k = 0; k < prob.n; ++k) {
        if (mag[static_cast<Eigen::Index>(k)] >= threshold * peak) continue;
        ++dropped;
        for (auto blk : {ColumnLpProblem::PRe, ColumnLpProblem::PIm, ColumnLpProblem::PBarRe, ColumnLpProblem::PBarIm})
          restricted.lower[prob.var(blk, k)] = restricted.upper[prob.var(blk, k)] = 0.0;
      }
      if (dropped == 0) break;
      auto sol = lp::solve_lp(restricted, cfg.lp);
      if (sol.status != lp::LpStatus::Optimal || sol.objective_value > out.lp.objective_value + slack) continue;
      out.lp = std::move(sol);
      out.p_re = out.lp.x.segment(0, n);
      out.p_im = out.lp.x.segment(n, n);
      out.polish_threshold = threshold;
      break;
    }
  }
  out.raw_residual = column_residual(C, i, out.p_re, out.p_im);
  return out;
}

}  // namespace

ColumnSolution solve_column(const CovarianceMatrix& C, std::size_t i, const ClimeConfig& cfg) {
  ColumnSolution out = solve_once(C, i, cfg);
  if (out.lp.status == lp::LpStatus::Infeasible) {
    ClimeConfig relaxed = cfg;
    relaxed.rho = 2.0 * cfg.rho;
    out = solve_once(C, i, relaxed);
  }

  const double peak = std::max(out.p_re.cwiseAbs().maxCoeff(), out.p_im.cwiseAbs().maxCoeff());
  const double threshold = cfg.sparsity_epsilon * peak;
  Eigen::VectorXd re = out.p_re, im = out.p_im;
  for (Eigen::Index k = 0; k < re.size(); ++k)
    if (std::abs(re[k]) < threshold && std::abs(im[k]) < threshold) re[k] = im[k] = 0.0;
  const double snapped_residual = column_residual(C, i, re, im);
  out.snapped_residual = snapped_residual;
  if (snapped_residual <= out.rho_used + cfg.lp.feas_tol * 10.0 ||
      snapped_residual <= out.raw_residual) {
    out.p_re = std::move(re);
    out.p_im = std::move(im);
    out.snapped = true;
  }
  return out;
}

bool PrecisionEstimate::degraded() const {
  for (auto s : column_status)
    if (s != lp::LpStatus::Optimal) return true;
  for (double r : column_rho)
    if (r != rho_used) return true;
  return false;
}

PrecisionEstimate estimate_precision(const CovarianceMatrix& C, const ClimeConfig& cfg) {
  cfg.validate();
  const std::size_t n = C.dimension();
  std::vector<ColumnSolution> columns(n);
  parallel_for(n, cfg.column_parallelism, [&](std::size_t i) { columns[i] = solve_column(C, i, cfg); });

  PrecisionEstimate est;
  const auto nn = static_cast<Eigen::Index>(n);
  est.real = Eigen::MatrixXd::Zero(nn, nn);
  est.imag = Eigen::MatrixXd::Zero(nn, nn);
  est.rho_used = cfg.rho;
  for (std::size_t i = 0; i < n; ++i) {
    est.real.col(static_cast<Eigen::Index>(i)) = columns[i].p_re;
    est.imag.col(static_cast<Eigen::Index>(i)) = columns[i].p_im;
    est.column_status.push_back(columns[i].lp.status);
    est.column_rho.push_back(columns[i].rho_used);
  }
  return est;
}

PrecisionEstimate symmetrize(const PrecisionEstimate& est) {
  PrecisionEstimate out = est;
  out.real = (est.real + est.real.transpose()) * 0.5;
  out.imag = (est.imag - est.imag.transpose()) * 0.5;
  out.imag.diagonal().setZero();
  out.symmetrized = true;
  return out;
}

nlohmann::json to_json(const PrecisionEstimate& est) {
  nlohmann::json j;
  j["n"] = est.dimension();
  j["rho"] = est.rho_used;
  j["format"] = "coo";
  j["symmetrized"] = est.symmetrized;
  auto coo = [](const Eigen::MatrixXd& M) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index k = 0; k < M.cols(); ++k)
        if (M(i, k) != 0.0) arr.push_back({i, k, M(i, k)});
    return arr;
  };
  j["real"] = coo(est.real);
  j["imag"] = coo(est.imag);
  nlohmann::json statuses = nlohmann::json::array();
  for (auto s : est.column_status) statuses.push_back(lp::to_string(s));
  j["statuses"] = statuses;
  j["column_rho"] = est.column_rho;
  return j;
}

PrecisionEstimate precision_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "coo") throw ValidationError("precision JSON: format must be coo");
    const auto n = j.at("n").get<Eigen::Index>();
    if (n <= 0) throw ValidationError("precision JSON: n must be positive");
    PrecisionEstimate est;
    est.real = Eigen::MatrixXd::Zero(n, n);
    est.imag = Eigen::MatrixXd::Zero(n, n);
    est.rho_used = j.at("rho").get<double>();
    est.symmetrized = j.value("symmetrized", false);
    auto fill = [n](const nlohmann::json& arr, Eigen::MatrixXd& M) {
      for (const auto& t : arr) {
        const auto r = t.at(0).get<Eigen::Index>(), c = t.at(1).get<Eigen::Index>();
        if (r < 0 || c < 0 || r >= n || c >= n) throw ValidationError("precision JSON: entry index out of range");
        M(r, c) = t.at(2).get<double>();
      }
    };
    fill(j.at("real"), est.real);
    fill(j.at("imag"), est.imag);
    for (const auto& s : j.at("statuses")) est.column_status.push_back(lp::status_from_string(s.get<std::string>()));
    if (j.contains("column_rho")) est.column_rho = j.at("column_rho").get<std::vector<double>>();
    return est;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("precision JSON: ") + e.what());
  }
}

}  // namespace phasorgraph
