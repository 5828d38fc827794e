#include "phasorgraph/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "phasorgraph/error.hpp"

namespace phasorgraph {

namespace {

constexpr double kMinEigenvalue = 0.1;

double dense_lambda_min(const Eigen::MatrixXcd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

GroundTruthModel random_hermitian_laplacian(std::size_t n, double edge_density, double phase_spread,
                                            std::uint64_t seed) {
  if (n < 2) throw ValidationError("random_hermitian_laplacian: need at least 2 nodes");
  if (!(edge_density > 0.0 && edge_density <= 1.0))
    throw ValidationError("random_hermitian_laplacian: edge_density must be in (0, 1]");
  if (!(phase_spread >= 0.0) || !std::isfinite(phase_spread))
    throw ValidationError("random_hermitian_laplacian: phase_spread must be non-negative");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(nn, nn);
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index j = i + 1; j < nn; ++j) {
      if (unit(rng) >= edge_density) continue;
      const double amp = 0.5 + unit(rng);
      const double theta = phase_spread * (2.0 * unit(rng) - 1.0);
      const Complex w = phase_spread == 0.0 ? Complex(amp, 0.0) : std::polar(amp, theta);
      L(i, j) = -w;
      L(j, i) = -std::conj(w);
      L(i, i) += amp;
      L(j, j) += amp;
    }
  const double lmin = dense_lambda_min(L);
  if (lmin < kMinEigenvalue) L.diagonal().array() += kMinEigenvalue - lmin;
  if (dense_lambda_min(L) < kMinEigenvalue - 1e-10)
    throw NumericalError("random_hermitian_laplacian: diagonal loading failed");

  GroundTruthModel model{HermitianLaplacian::from_dense(L, 0.0), seed, n, edge_density, phase_spread};
  return model;
}

ComplexDenseMatrix Dataset::columns(const std::vector<std::size_t>& idx) const {
  if (idx.empty()) throw ValidationError("Dataset: empty column selection");
  Eigen::MatrixXcd out(X.values().rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= samples()) throw ValidationError("Dataset: column index out of range");
    out.col(static_cast<Eigen::Index>(k)) = X.values().col(static_cast<Eigen::Index>(idx[k]));
  }
  return ComplexDenseMatrix(std::move(out));
}

Dataset make_dataset(ComplexDenseMatrix X, DataSource source) {
  Dataset ds{std::move(X), {}, {}, std::move(source), false};
  ds.train.resize(ds.samples());
  std::iota(ds.train.begin(), ds.train.end(), 0);
  return ds;
}

Dataset sample_gmrf(const GroundTruthModel& model, std::size_t K, std::uint64_t seed) {
  if (K == 0) throw ValidationError("sample_gmrf: K must be positive");
  const Eigen::MatrixXcd L = model.laplacian.to_dense();
  Eigen::LLT<Eigen::MatrixXcd> llt(L);
  if (llt.info() != Eigen::Success) throw NumericalError("sample_gmrf: Cholesky failed; model is not positive definite");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  const Eigen::Index n = L.rows();
  Eigen::MatrixXcd Z(n, static_cast<Eigen::Index>(K));
  for (Eigen::Index k = 0; k < Z.cols(); ++k)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      Z(i, k) = Complex(re, im);
    }
  Eigen::MatrixXcd X = llt.matrixU().solve(Z);
  DataSource src;
  src.kind = DataSource::Kind::Synthetic;
  src.seed = seed;
  return make_dataset(ComplexDenseMatrix(std::move(X)), src);
}

void write_csv(std::ostream& os, const Dataset& ds) {
  const auto& X = ds.X.values();
  os << "# n=" << X.rows() << '\n';
  char buf[64];
  std::string line;
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    line.clear();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (double v : {X(i, k).real(), X(i, k).imag()}) {
        if (!line.empty()) line += ',';
        std::snprintf(buf, sizeof buf, "%.17g", v);
        line += buf;
      }
    }
    os << line << '\n';
  }
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(os, ds);
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path.string());
  const std::string name = path.string();

  std::optional<std::size_t> n;
  std::vector<std::vector<Complex>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      if (lineno != 1) throw ParseError(name, lineno, "comment lines are only allowed as the first line");
      const auto pos = sv.find("n=");
      if (pos != std::string_view::npos) {
        std::size_t value = 0;
        const auto digits = sv.substr(pos + 2);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
        if (ec != std::errc() || value == 0) throw ParseError(name, lineno, "malformed header, expected '# n=<N>'");
        (void)ptr;
        n = value;
      }
      continue;
    }
    std::vector<double> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = sv.find(',', start);
      const auto tok = trim(sv.substr(start, comma == std::string_view::npos ? sv.npos : comma - start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
        throw ParseError(name, lineno, "non-numeric field '" + std::string(tok) + "'");
      fields.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() % 2 != 0)
      throw ParseError(name, lineno, "expected an even number of fields (re,im pairs), got " + std::to_string(fields.size()));
    const std::size_t row_n = fields.size() / 2;
    if (!n) n = row_n;
    if (row_n != *n)
      throw ParseError(name, lineno, "expected " + std::to_string(2 * *n) + " fields, got " + std::to_string(fields.size()));
    std::vector<Complex> obs(row_n);
    for (std::size_t i = 0; i < row_n; ++i) obs[i] = Complex(fields[2 * i], fields[2 * i + 1]);
    rows.push_back(std::move(obs));
  }
  if (rows.empty()) throw ParseError(name, lineno, "dataset contains no observations");

  Eigen::MatrixXcd X(static_cast<Eigen::Index>(*n), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t i = 0; i < *n; ++i) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[k][i];
  DataSource src;
  src.kind = DataSource::Kind::Csv;
  src.path = name;
  return make_dataset(ComplexDenseMatrix(std::move(X)), src);
}

Dataset split(const Dataset& ds, std::size_t train_count, std::uint64_t seed) {
  const std::size_t K = ds.samples();
  if (train_count == 0 || train_count >= K)
    throw ValidationError("split: train_count must be in [1, K); got " + std::to_string(train_count) +
                          " with K = " + std::to_string(K));
  std::vector<std::size_t> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  Dataset out = ds;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train_count));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(train_count), perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace phasorgraph
