#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "phasorgraph/complex_core.hpp"
#include "phasorgraph/hermitian_graph.hpp"

namespace phasorgraph {

/// Ground-truth precision for synthetic data; positive definite with
/// lambda_min >= 0.1 (checked with a dense eigensolver at construction).
struct GroundTruthModel {
  HermitianLaplacian laplacian;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double edge_density = 0.0;
  double phase_spread = 0.0;
};

/// Bernoulli(edge_density) edges with weights m e^{j theta},
/// m ~ U(0.5, 1.5), theta ~ U(-phase_spread, phase_spread); L = D - W with
/// D_ii = sum_j m_ij, then diagonally loaded so that lambda_min >= 0.1.
GroundTruthModel random_hermitian_laplacian(std::size_t n, double edge_density, double phase_spread,
                                            std::uint64_t seed);

struct DataSource {
  enum class Kind { Synthetic, Csv } kind = Kind::Synthetic;
  std::uint64_t seed = 0;
  std::string path;
};

/// Observations as columns of X (N x K) plus a disjoint train/test split of
/// the column indices. A fresh dataset has every column in `train`.
struct Dataset {
  ComplexDenseMatrix X;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  DataSource source;
  bool centered = false;

  std::size_t nodes() const noexcept { return X.rows(); }
  std::size_t samples() const noexcept { return X.cols(); }

  ComplexDenseMatrix columns(const std::vector<std::size_t>& idx) const;
  ComplexDenseMatrix train_matrix() const { return columns(train); }
  ComplexDenseMatrix test_matrix() const { return columns(test); }
};

Dataset make_dataset(ComplexDenseMatrix X, DataSource source);

/// K i.i.d. circularly-symmetric complex Gaussian draws with covariance
/// L^{-1}: x = U^{-1} z with L = U^H U (Cholesky) and E[z z^H] = I, i.e.
/// real and imaginary parts of z each have variance 1/2.
Dataset sample_gmrf(const GroundTruthModel& model, std::size_t K, std::uint64_t seed);

/// One observation per row: re_1,im_1,...,re_N,im_N; optional first line
/// `# n=<N>`. Values written with 17 significant digits.
void write_csv(std::ostream& os, const Dataset& ds);
void save_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

/// Uniformly random split with `train_count` training columns, deterministic per seed.
Dataset split(const Dataset& ds, std::size_t train_count, std::uint64_t seed);

}  // namespace phasorgraph
