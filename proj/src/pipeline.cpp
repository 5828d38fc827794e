#include "phasorgraph/pipeline.hpp"

#include "phasorgraph/error.hpp"

namespace phasorgraph {

LearnedGraph learn_laplacian(const ComplexDenseMatrix& train, const LearnConfig& cfg) {
  cfg.validate();
  const Eigen::VectorXcd mean = row_means(train);
  const auto C = empirical_covariance(center_columns(train), cfg.normalizer);
  PrecisionEstimate precision = symmetrize(estimate_precision(C, cfg.clime));
  HermitianLaplacian L = from_precision(precision);
  const SpectralSummary spectrum = spectral_summary(L);
  bool repaired = false;
  if (cfg.repair && spectrum.lambda_min_estimate <= 0.0) {
    L = ensure_pd(L, spectrum, cfg.pd_floor);
    repaired = true;
  }
  return LearnedGraph{std::move(L), mean, std::move(precision), spectrum, repaired,
                      train.values().imag().cwiseAbs().maxCoeff() == 0.0};
}

InterpolationResult interpolate_state(const ComplexVector& y, const SamplingPattern& B, const LearnedGraph& graph,
                                      const InterpolateConfig& cfg) {
  if (static_cast<std::size_t>(graph.mean.size()) != B.n())
    throw ValidationError("interpolate_state: graph and sampling pattern disagree on N");
  if (y.size() != B.size()) throw ValidationError("interpolate_state: y must have one entry per observed node");
  auto res = interpolate(ComplexVector(y.values() - B.apply(graph.mean)), B, graph.laplacian, cfg);
  res.x_star = ComplexVector(res.x_star.values() + graph.mean);
  return res;
}

nlohmann::json to_json(const LearnConfig& cfg) {
  nlohmann::json j;
  j["rho"] = cfg.clime.rho;
  j["sparsity_epsilon"] = cfg.clime.sparsity_epsilon;
  j["polish"] = cfg.clime.polish;
  j["normalizer"] = to_string(cfg.normalizer);
  j["repair"] = cfg.repair;
  j["pd_floor"] = cfg.pd_floor ? nlohmann::json(*cfg.pd_floor) : nlohmann::json(nullptr);
  j["lp"] = {{"algorithm", cfg.clime.lp.algorithm == lp::LpAlgorithm::Simplex ? "simplex" : "interior_point"},
             {"max_iterations", cfg.clime.lp.max_iterations},
             {"feas_tol", cfg.clime.lp.feas_tol},
             {"opt_tol", cfg.clime.lp.opt_tol}};
  return j;
}

nlohmann::json to_json(const InterpolateConfig& cfg) {
  nlohmann::json j;
  j["mu"] = cfg.mu;
  j["cg_tol"] = cfg.cg_tol;
  j["cg_max_iters"] = cfg.cg_max_iters ? nlohmann::json(*cfg.cg_max_iters) : nlohmann::json("10N");
  j["jacobi"] = cfg.jacobi;
  return j;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace phasorgraph
