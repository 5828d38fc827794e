#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "phasorgraph/data.hpp"
#include "phasorgraph/interpolate.hpp"
#include "phasorgraph/pipeline.hpp"

namespace phasorgraph {

/// Errors over the unobserved entries only.
///   magnitude: mean (|xh_i| - |x_i|)^2
///   phase:     mean of the squared angle difference wrapped to (-pi, pi]
///   complex:   mean |xh_i - x_i|^2
struct MseParts {
  double magnitude = 0.0;
  double phase = 0.0;
  double complex = 0.0;
};

MseParts mse_decomposed(const ComplexVector& x_hat, const ComplexVector& x_true, const SamplingPattern& pattern);

struct SweepSpec {
  std::vector<std::size_t> sample_counts;
  int trials = 20;
  std::uint64_t seed = 0;
  LearnConfig learn;          ///< used where the sweep learns its own graphs
  InterpolateConfig interp;   ///< mu lives here
  bool decompose = true;      ///< report magnitude/phase next to the complex MSE
  std::size_t test_limit = 0; ///< test vectors per trial, 0 = all
  std::size_t threads = 1;

  void validate(std::size_t n) const;
};

nlohmann::json to_json(const SweepSpec& spec);

/// Seed for one (M, trial) cell, independent of evaluation order.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t m, int trial);

struct TrialRecord {
  std::size_t axis_value = 0;  ///< M, or K for the covariance-size sweep
  int trial = 0;
  bool ok = false;
  std::string error;
  MseParts mse;
  long cg_iterations = 0;
};

struct Estimate {
  double mean = 0.0;
  double ci_half_width = 0.0;  ///< 95% Student-t over trial values
};

Estimate mean_with_ci(const std::vector<double>& values);

struct SweepRow {
  std::size_t axis_value = 0;
  int trials_ok = 0;
  int trials_failed = 0;
  Estimate magnitude;
  Estimate phase;
  Estimate complex;
};

struct Timing {
  double learn_seconds = 0.0;
  double trial_seconds_mean = 0.0;
  double trial_seconds_max = 0.0;
  double total_seconds = 0.0;
};

struct ExperimentReport {
  std::string kind;  ///< "joint", "split" or "covariance"
  std::string axis;  ///< "M" or "K"
  std::vector<SweepRow> rows;  ///< sorted by axis value
  std::vector<TrialRecord> trials;
  nlohmann::json config;
  Timing timing;  ///< wall clock; kept out of the JSON so reports stay reproducible

  const SweepRow& row(std::size_t axis_value) const;
};

/// Interpolates the test split of `ds` with `graph` for every M and trial.
/// `graph` must come from the train split only.
ExperimentReport run_sweep(const Dataset& ds, const LearnedGraph& graph, const SweepSpec& spec);

/// Same protocol with two real graphs learned from Re and Im of the train
/// split; the two components are interpolated independently.
ExperimentReport run_split_ablation(const Dataset& ds, const SweepSpec& spec);

/// Learns from the first K train columns for each K and sweeps the single M
/// in spec.sample_counts. Rows are keyed by K.
ExperimentReport run_covariance_sweep(const Dataset& ds, const std::vector<std::size_t>& train_sizes,
                                      const SweepSpec& spec);

struct TrendTest {
  double spearman_rho = 0.0;
  double p_value = 1.0;  ///< two-sided, t approximation
  std::size_t points = 0;

  bool decreasing(double alpha = 0.05) const { return spearman_rho < 0.0 && p_value < alpha; }
};

/// Spearman rank correlation with average ranks for ties.
TrendTest spearman_trend(const std::vector<double>& x, const std::vector<double>& y);

/// Trend over several independent models (seeds). Each block holds one
/// model's mean MSE per axis value and is divided by its own average first,
/// so differences in scale between models do not drown the trend.
TrendTest blocked_trend(const std::vector<double>& axis, const std::vector<std::vector<double>>& blocks);

nlohmann::json to_json(const ExperimentReport& report);
void write_table(std::ostream& os, const ExperimentReport& report);
void write_trials_csv(std::ostream& os, const ExperimentReport& report);

}  // namespace phasorgraph
