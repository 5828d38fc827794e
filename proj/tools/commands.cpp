#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "phasorgraph/data.hpp"
#include "phasorgraph/error.hpp"
#include "phasorgraph/eval.hpp"
#include "phasorgraph/pipeline.hpp"

namespace phasorgraph::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// PHASORGRAPH_VERBOSITY: 0 quiet, 1 progress (default), 2 detail.
int verbosity() {
  static const int level = [] {
    const char* v = std::getenv("PHASORGRAPH_VERBOSITY");
    return v ? std::atoi(v) : 1;
  }();
  return level;
}

void log(int level, const std::string& msg) {
  if (verbosity() >= level) std::cerr << msg << '\n';
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// All outputs of a command are staged next to their targets and renamed at
// the end, so a failing command leaves nothing half-written.
class OutputSet {
 public:
  void add(const fs::path& target, std::string content) { files_.push_back({target, std::move(content)}); }

  void commit() const {
    for (const auto& [target, content] : files_) {
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      const fs::path tmp = target.string() + ".tmp";
      {
        std::ofstream os(tmp, std::ios::binary);
        os << content;
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
      }
      fs::rename(tmp, target);
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string csv_text(const Dataset& ds) {
  std::ostringstream os;
  write_csv(os, ds);
  return os.str();
}

json vector_json(const Eigen::VectorXcd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back({v[i].real(), v[i].imag()});
  return arr;
}

Eigen::VectorXcd vector_from_json(const json& arr) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = Complex(arr[i].at(0).get<double>(), arr[i].at(1).get<double>());
  return v;
}

LearnConfig learn_config(const LearnOptions& o) {
  LearnConfig cfg;
  cfg.clime.rho = o.rho;
  cfg.clime.sparsity_epsilon = o.sparsity_epsilon;
  cfg.clime.polish = !o.no_polish;
  cfg.clime.column_parallelism = o.threads;
  if (o.lp_algorithm == "simplex")
    cfg.clime.lp.algorithm = lp::LpAlgorithm::Simplex;
  else if (o.lp_algorithm != "interior_point")
    throw ValidationError("unknown LP algorithm '" + o.lp_algorithm + "'");
  cfg.normalizer = normalizer_from_string(o.normalizer);
  cfg.repair = !o.no_repair;
  cfg.pd_floor = o.pd_floor;
  if (o.pd_floor && !(*o.pd_floor > 0.0)) throw ValidationError("pd-floor must be positive");
  cfg.validate();
  return cfg;
}

json learn_echo(const LearnOptions& o) {
  json j = to_json(learn_config(o));
  j["data"] = o.data;
  j["train"] = o.train;
  j["seed"] = o.seed;
  j["allow_degraded"] = o.allow_degraded;
  return j;
}

struct LoadedData {
  Dataset ds;
  std::string hash;
};

// Reads the CSV and splits it; train == 0 keeps every column in train.
LoadedData load_split(const std::string& path, std::size_t train, std::uint64_t seed) {
  const std::string bytes = read_file(path);
  Dataset ds = load_csv(path);
  if (train > 0) ds = split(ds, train, seed);
  return {std::move(ds), hex(fnv1a64(bytes))};
}

std::size_t default_eval_train(std::size_t K) {
  // One third for the covariance, the rest for testing.
  const std::size_t t = K / 3;
  if (t < 2 || t >= K) throw ValidationError("dataset too small to split for evaluation (K = " + std::to_string(K) + ")");
  return t;
}

void log_columns(const PrecisionEstimate& est) {
  for (std::size_t i = 0; i < est.column_status.size(); ++i) {
    std::ostringstream os;
    os << "column " << i << ": " << lp::to_string(est.column_status[i]) << " rho=" << est.column_rho[i];
    log(est.column_status[i] == lp::LpStatus::Optimal && est.column_rho[i] == est.rho_used ? 2 : 1, os.str());
  }
}

// Learns on the train split; empty when columns degraded and that is not allowed.
std::optional<LearnedGraph> learn_checked(const Dataset& ds, const LearnConfig& cfg, bool allow_degraded) {
  LearnedGraph out = learn_laplacian(ds.train_matrix(), cfg);
  log_columns(out.precision);
  if (out.real_input) log(1, "warning: training data is real-valued; CLIME reduces to the real LP and the imaginary part vanishes");
  if (out.repaired)
    log(1, "lambda_min estimate " + std::to_string(out.spectrum.lambda_min_estimate) + " <= 0, diagonal loading applied");
  if (out.precision.degraded()) {
    std::size_t bad = 0;
    for (auto s : out.precision.column_status) bad += s != lp::LpStatus::Optimal;
    log(1, (allow_degraded ? "warning: " : "error: ") + std::to_string(bad) +
               " column(s) not optimal or solved at a relaxed rho");
    if (!allow_degraded) return std::nullopt;
  }
  return out;
}

json graph_summary(const LearnedGraph& g) {
  return {{"edges", g.laplacian.edge_count()},
          {"repaired", g.repaired},
          {"lambda_min", g.spectrum.lambda_min_estimate},
          {"lambda_max", g.spectrum.lambda_max_estimate},
          {"degraded", g.precision.degraded()}};
}

SweepSpec sweep_spec(const EvalOptions& o, const LearnConfig& learn) {
  SweepSpec spec;
  spec.sample_counts = o.sample_counts;
  spec.trials = o.trials;
  spec.seed = o.sweep_seed;
  spec.learn = learn;
  spec.interp.mu = o.mu;
  spec.interp.cg_tol = o.cg_tol;
  spec.interp.jacobi = o.jacobi;
  spec.decompose = !o.no_decompose;
  spec.test_limit = o.test_limit;
  spec.threads = o.learn.threads;
  return spec;
}

json eval_echo(const EvalOptions& o, std::size_t train) {
  json j;
  j["learn"] = learn_echo(o.learn);
  j["learn"]["train"] = train;
  j["sample_counts"] = o.sample_counts;
  j["trials"] = o.trials;
  j["sweep_seed"] = o.sweep_seed;
  j["mu"] = o.mu;
  j["cg_tol"] = o.cg_tol;
  j["jacobi"] = o.jacobi;
  j["test_limit"] = o.test_limit;
  j["decompose"] = !o.no_decompose;
  j["ablation"] = o.ablation;
  j["covariance_sizes"] = o.covariance_sizes;
  return j;
}

void log_timing(const std::string& what, const Timing& t) {
  std::ostringstream os;
  os << what << ": " << t.total_seconds << " s total, learn " << t.learn_seconds << " s, trial mean "
     << t.trial_seconds_mean << " s, max " << t.trial_seconds_max << " s";
  log(1, os.str());
}

}  // namespace

int cmd_gen(const GenOptions& o) {
  if (o.samples == 0) throw ValidationError("samples must be positive");
  const auto model = random_hermitian_laplacian(o.nodes, o.density, o.phase_spread, o.seed);
  const Dataset ds = sample_gmrf(model, o.samples, o.seed + 1);

  json config = {{"nodes", o.nodes},        {"samples", o.samples}, {"density", o.density},
                 {"phase_spread", o.phase_spread}, {"seed", o.seed}, {"out_dir", o.out_dir}};
  const std::string csv = csv_text(ds);
  json model_json;
  model_json["version"] = kVersion;
  model_json["config"] = config;
  model_json["data_hash"] = hex(fnv1a64(csv));
  model_json["laplacian"] = to_json(model.laplacian);

  OutputSet out;
  out.add(fs::path(o.out_dir) / "data.csv", csv);
  out.add(fs::path(o.out_dir) / "model.json", dump(model_json));
  out.commit();
  log(1, "wrote " + (fs::path(o.out_dir) / "data.csv").string() + " (" + std::to_string(o.samples) + " x " +
             std::to_string(o.nodes) + ") and model.json");
  return 0;
}

int cmd_learn(const LearnOptions& o) {
  const LearnConfig cfg = learn_config(o);
  const auto loaded = load_split(o.data, o.train, o.seed);
  const auto learned = learn_checked(loaded.ds, cfg, o.allow_degraded);
  if (!learned) return 1;
  const LearnedGraph& g = *learned;

  json j;
  j["version"] = kVersion;
  j["config"] = learn_echo(o);
  j["data_hash"] = loaded.hash;
  j["train_columns"] = loaded.ds.train;
  j["summary"] = graph_summary(g);
  j["laplacian"] = to_json(g.laplacian);
  j["mean"] = vector_json(g.mean);
  j["precision"] = to_json(g.precision);
  OutputSet out;
  out.add(o.out, dump(j));
  out.commit();
  log(1, "wrote " + o.out + " (" + std::to_string(g.laplacian.edge_count()) + " edges)");
  return 0;
}

int cmd_interpolate(const InterpolateOptions& o) {
  json graph_json;
  try {
    graph_json = json::parse(read_file(o.graph));
  } catch (const json::exception& e) {
    throw ValidationError("graph file " + o.graph + ": " + e.what());
  }
  std::optional<LearnedGraph> loaded;
  try {
    auto L = laplacian_from_json(graph_json.at("laplacian"));
    Eigen::VectorXcd mean = graph_json.contains("mean")
                                ? vector_from_json(graph_json.at("mean"))
                                : Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(L.dimension()));
    loaded.emplace(LearnedGraph{std::move(L), std::move(mean), {}, {}, false, false});
  } catch (const json::exception& e) {
    throw ValidationError("graph file " + o.graph + ": " + e.what());
  }
  const LearnedGraph& g = *loaded;
  const std::size_t n = g.laplacian.dimension();
  if (static_cast<std::size_t>(g.mean.size()) != n) throw ValidationError("graph file: mean has the wrong length");

  if (o.observed.empty() == (o.observed_count == 0))
    throw ValidationError("give exactly one of --observed or --observed-count");
  for (auto i : o.observed)
    if (i >= n) throw ValidationError("observed index " + std::to_string(i) + " out of range for N = " + std::to_string(n));
  const SamplingPattern B = o.observed.empty() ? SamplingPattern::random(n, o.observed_count, o.seed)
                                               : SamplingPattern::from_indices(n, o.observed);
  InterpolateConfig cfg;
  cfg.mu = o.mu;
  cfg.cg_tol = o.cg_tol;
  if (o.cg_max_iters > 0) cfg.cg_max_iters = o.cg_max_iters;
  cfg.jacobi = o.jacobi;
  cfg.validate();

  const Dataset in = load_csv(o.input);
  // Rows carry either the full state (N values) or just the observed entries (M values).
  const bool full = in.nodes() == n;
  if (!full && in.nodes() != B.size())
    throw ValidationError("input rows have " + std::to_string(in.nodes()) + " values; expected N = " +
                          std::to_string(n) + " or M = " + std::to_string(B.size()));

  Eigen::MatrixXcd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(in.samples()));
  json rows = json::array();
  bool all_converged = true;
  for (std::size_t k = 0; k < in.samples(); ++k) {
    const Eigen::VectorXcd col = in.X.values().col(static_cast<Eigen::Index>(k));
    const Eigen::VectorXcd y = full ? B.apply(col) : col;
    const auto r = interpolate_state(ComplexVector(y), B, g, cfg);
    X.col(static_cast<Eigen::Index>(k)) = r.x_star.values();
    all_converged = all_converged && r.converged;
    rows.push_back({{"cg_iterations", r.cg_iterations},
                    {"relative_residual", r.final_relative_residual},
                    {"objective", r.objective_value},
                    {"converged", r.converged}});
  }

  json j;
  j["version"] = kVersion;
  j["config"] = to_json(cfg);
  j["config"]["graph"] = o.graph;
  j["config"]["input"] = o.input;
  j["config"]["seed"] = o.seed;
  j["config"]["observed"] = B.observed();
  j["graph_hash"] = hex(fnv1a64(graph_json.at("laplacian").dump()));
  j["input_hash"] = hex(fnv1a64(read_file(o.input)));
  j["rows"] = rows;
  j["converged"] = all_converged;

  OutputSet out;
  out.add(o.out + ".csv", csv_text(make_dataset(ComplexDenseMatrix(X), {})));
  out.add(o.out + ".json", dump(j));
  out.commit();
  log(1, "interpolated " + std::to_string(in.samples()) + " vector(s) from " + std::to_string(B.size()) + " of " +
             std::to_string(n) + " nodes");
  if (!all_converged) {
    log(1, "error: CG did not reach the residual target for every vector");
    return 1;
  }
  return 0;
}

int cmd_eval(const EvalOptions& o) {
  const LearnConfig cfg = learn_config(o.learn);
  const auto raw = load_split(o.learn.data, 0, 0);
  const std::size_t train = o.learn.train > 0 ? o.learn.train : default_eval_train(raw.ds.samples());
  const Dataset ds = split(raw.ds, train, o.learn.seed);
  const SweepSpec spec = sweep_spec(o, cfg);
  spec.validate(ds.nodes());
  if (!o.covariance_sizes.empty() && o.sample_counts.size() != 1)
    throw ValidationError("--covariance-sizes needs exactly one sample count");

  const auto t0 = std::chrono::steady_clock::now();
  const auto learned = learn_checked(ds, cfg, o.learn.allow_degraded);
  if (!learned) return 1;
  const LearnedGraph& g = *learned;
  auto joint = run_sweep(ds, g, spec);
  joint.timing.learn_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() -
                               joint.timing.total_seconds;
  joint.timing.total_seconds += joint.timing.learn_seconds;
  log_timing("joint sweep", joint.timing);

  json j;
  j["version"] = kVersion;
  j["config"] = eval_echo(o, train);
  j["data_hash"] = raw.hash;
  j["graph"] = graph_summary(g);
  j["graph"]["hash"] = hex(fnv1a64(to_json(g.laplacian).dump()));
  j["joint"] = to_json(joint);
  std::ostringstream table;
  table << "joint complex pipeline\n";
  write_table(table, joint);
  if (o.ablation) {
    const auto abl = run_split_ablation(ds, spec);
    log_timing("split ablation", abl.timing);
    j["split"] = to_json(abl);
    table << "\nreal/imaginary split\n";
    write_table(table, abl);
  }
  if (!o.covariance_sizes.empty()) {
    const auto cov = run_covariance_sweep(ds, o.covariance_sizes, spec);
    log_timing("covariance sweep", cov.timing);
    j["covariance"] = to_json(cov);
    table << "\ncovariance size\n";
    write_table(table, cov);
  }
  std::ostringstream csv;
  write_trials_csv(csv, joint);

  OutputSet out;
  out.add(o.out + ".json", dump(j));
  out.add(o.out + ".txt", table.str());
  out.add(o.out + ".csv", csv.str());
  out.commit();
  if (verbosity() >= 1) std::cerr << table.str();
  return 0;
}

namespace {

int sweep_parameter(const EvalOptions& o, const std::string& name) {
  if (o.values.empty()) throw ValidationError("--values is empty");
  const LearnConfig base = learn_config(o.learn);
  const auto raw = load_split(o.learn.data, 0, 0);
  const std::size_t train = o.learn.train > 0 ? o.learn.train : default_eval_train(raw.ds.samples());
  const Dataset ds = split(raw.ds, train, o.learn.seed);
  sweep_spec(o, base).validate(ds.nodes());

  json results = json::array();
  std::ostringstream table;
  std::optional<LearnedGraph> shared;  // mu sweeps reuse one graph
  for (double v : o.values) {
    EvalOptions cur = o;
    if (name == "rho")
      cur.learn.rho = v;
    else
      cur.mu = v;
    const LearnConfig cfg = learn_config(cur.learn);
    const SweepSpec spec = sweep_spec(cur, cfg);
    spec.validate(ds.nodes());
    double learn_seconds = 0.0;
    if (name == "rho" || !shared) {
      const auto t0 = std::chrono::steady_clock::now();
      shared = learn_checked(ds, cfg, o.learn.allow_degraded);
      if (!shared) return 1;
      learn_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    auto report = run_sweep(ds, *shared, spec);
    report.timing.learn_seconds = learn_seconds;
    report.timing.total_seconds += learn_seconds;
    log_timing(name + " = " + std::to_string(v), report.timing);
    results.push_back({{name, v}, {"graph", graph_summary(*shared)}, {"report", to_json(report)}});
    table << name << " = " << v << " (" << shared->laplacian.edge_count() << " edges)\n";
    write_table(table, report);
    table << '\n';
  }

  json j;
  j["version"] = kVersion;
  j["config"] = eval_echo(o, train);
  j["config"][name + "_values"] = o.values;
  j["data_hash"] = raw.hash;
  j["results"] = results;
  OutputSet out;
  out.add(o.out + ".json", dump(j));
  out.add(o.out + ".txt", table.str());
  out.commit();
  if (verbosity() >= 1) std::cerr << table.str();
  return 0;
}

}  // namespace

int cmd_sweep_rho(const EvalOptions& o) { return sweep_parameter(o, "rho"); }
int cmd_sweep_mu(const EvalOptions& o) { return sweep_parameter(o, "mu"); }

}  // namespace phasorgraph::cli
