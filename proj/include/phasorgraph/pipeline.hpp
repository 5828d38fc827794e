#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "phasorgraph/clime.hpp"
#include "phasorgraph/complex_core.hpp"
#include "phasorgraph/hermitian_graph.hpp"
#include "phasorgraph/interpolate.hpp"

namespace phasorgraph {

struct LearnConfig {
  ClimeConfig clime;
  Normalizer normalizer = Normalizer::ByNodes;
  /// Diagonal loading when the smallest eigenvalue estimate is not positive.
  bool repair = true;
  std::optional<double> pd_floor;

  void validate() const { clime.validate(); }
};

struct LearnedGraph {
  HermitianLaplacian laplacian;
  /// Row means of the training data; interpolation works on deviations from it.
  Eigen::VectorXcd mean;
  PrecisionEstimate precision;
  SpectralSummary spectrum;  ///< before repair
  bool repaired = false;
  /// True when the training data had no imaginary part at all.
  bool real_input = false;
};

/// Center, covariance, per-column CLIME, symmetrize, Laplacian, PD check.
/// `train` must hold training columns only.
LearnedGraph learn_laplacian(const ComplexDenseMatrix& train, const LearnConfig& cfg);

/// Interpolates a full state from observations of x, working on x - mean.
InterpolationResult interpolate_state(const ComplexVector& y, const SamplingPattern& B, const LearnedGraph& graph,
                                      const InterpolateConfig& cfg);

/// Resolved settings, echoed into every artifact.
nlohmann::json to_json(const LearnConfig& cfg);
nlohmann::json to_json(const InterpolateConfig& cfg);

/// FNV-1a, used to fingerprint artifacts and input data.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace phasorgraph
