#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace phasorgraph::cli {

struct GenOptions {
  std::size_t nodes = 30;
  std::size_t samples = 5000;
  double density = 0.2;
  double phase_spread = 1.0;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

struct LearnOptions {
  std::string data;
  std::string out = "graph.json";
  std::size_t train = 0;  // 0 = every column
  std::uint64_t seed = 0;
  double rho = 0.2;
  double sparsity_epsilon = 1e-6;
  bool no_polish = false;
  std::string normalizer = "by_nodes";
  std::string lp_algorithm = "interior_point";
  bool no_repair = false;
  std::optional<double> pd_floor;
  bool allow_degraded = false;
  std::size_t threads = 0;
};

struct InterpolateOptions {
  std::string graph;
  std::string input;
  std::string out = "interpolated";
  std::vector<std::size_t> observed;
  std::size_t observed_count = 0;
  std::uint64_t seed = 0;
  double mu = 0.1;
  double cg_tol = 1e-8;
  int cg_max_iters = 0;  // 0 = 10 N
  bool jacobi = false;
};

struct EvalOptions {
  LearnOptions learn;  // data, train, seed (split), rho and solver settings
  std::string out = "report";
  std::vector<std::size_t> sample_counts{8, 12, 16, 20, 24};
  int trials = 20;
  std::uint64_t sweep_seed = 0;
  double mu = 0.1;
  double cg_tol = 1e-8;
  bool jacobi = false;
  std::size_t test_limit = 0;
  bool no_decompose = false;
  bool ablation = false;
  std::vector<std::size_t> covariance_sizes;
  std::vector<double> values;  // rho or mu grid for the sweep subcommands
};

int cmd_gen(const GenOptions& o);
int cmd_learn(const LearnOptions& o);
int cmd_interpolate(const InterpolateOptions& o);
int cmd_eval(const EvalOptions& o);
int cmd_sweep_rho(const EvalOptions& o);
int cmd_sweep_mu(const EvalOptions& o);

}  // namespace phasorgraph::cli
