#include "phasorgraph/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>

#include <boost/math/distributions/students_t.hpp>

#include "phasorgraph/error.hpp"
#include "phasorgraph/parallel.hpp"

namespace phasorgraph {

namespace {

MseParts mse_over(const Eigen::VectorXcd& xh, const Eigen::VectorXcd& x, const std::vector<std::size_t>& idx) {
  MseParts m;
  for (auto u : idx) {
    const auto i = static_cast<Eigen::Index>(u);
    const double dm = std::abs(xh[i]) - std::abs(x[i]);
    // arg of xh * conj(x) is the phase difference already wrapped to (-pi, pi].
    const double dp = std::arg(xh[i] * std::conj(x[i]));
    m.magnitude += dm * dm;
    m.phase += dp * dp;
    m.complex += std::norm(xh[i] - x[i]);
  }
  const double k = static_cast<double>(idx.size());
  m.magnitude /= k;
  m.phase /= k;
  m.complex /= k;
  return m;
}

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Prediction {
  Eigen::VectorXcd x;
  long iterations = 0;
};
using Predictor = std::function<Prediction(const ComplexVector& y, const SamplingPattern& B)>;

Prediction predict_joint(const LearnedGraph& g, const InterpolateConfig& cfg, const ComplexVector& y,
                         const SamplingPattern& B) {
  const auto r = interpolate_state(y, B, g, cfg);
  if (!r.converged)
    throw NumericalError("CG stopped at relative residual " + std::to_string(r.final_relative_residual));
  return {r.x_star.values(), r.cg_iterations};
}

Eigen::MatrixXcd test_columns(const Dataset& ds, std::size_t limit) {
  std::vector<std::size_t> idx = ds.test;
  if (idx.empty()) throw ValidationError("sweep: dataset has no test columns");
  if (limit > 0 && idx.size() > limit) idx.resize(limit);
  return ds.columns(idx).values();
}

// One cell per (axis value, trial); `predictor_for(a)` picks the model for axis value a.
std::vector<TrialRecord> run_cells(const Eigen::MatrixXcd& tests, const std::vector<std::size_t>& axis_values,
                                   const std::function<std::size_t(std::size_t)>& m_for,
                                   const std::function<const Predictor&(std::size_t)>& predictor_for,
                                   const SweepSpec& spec, Timing& timing) {
  const auto n = static_cast<std::size_t>(tests.rows());
  const auto T = static_cast<std::size_t>(spec.trials);
  std::vector<TrialRecord> records(axis_values.size() * T);
  std::vector<double> seconds(records.size(), 0.0);
  parallel_for(records.size(), spec.threads, [&](std::size_t c) {
    const auto t0 = std::chrono::steady_clock::now();
    TrialRecord& rec = records[c];
    rec.axis_value = axis_values[c / T];
    rec.trial = static_cast<int>(c % T);
    const std::size_t m = m_for(rec.axis_value);
    try {
      const auto B = SamplingPattern::random(n, m, trial_seed(spec.seed, m, rec.trial));
      // Full observation has nothing unobserved; score every entry instead.
      std::vector<std::size_t> scored = B.unobserved();
      if (scored.empty()) scored = B.observed();
      const Predictor& predict = predictor_for(rec.axis_value);
      MseParts sum;
      for (Eigen::Index k = 0; k < tests.cols(); ++k) {
        const Eigen::VectorXcd x = tests.col(k);
        const Prediction p = predict(ComplexVector(B.apply(x)), B);
        const MseParts e = mse_over(p.x, x, scored);
        sum.magnitude += e.magnitude;
        sum.phase += e.phase;
        sum.complex += e.complex;
        rec.cg_iterations += p.iterations;
      }
      const double count = static_cast<double>(tests.cols());
      rec.mse = {sum.magnitude / count, sum.phase / count, sum.complex / count};
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
      rec.mse = {};
    }
    seconds[c] = seconds_since(t0);
  });
  if (!seconds.empty()) {
    double total = 0.0;
    for (double s : seconds) total += s;
    timing.trial_seconds_mean = total / static_cast<double>(seconds.size());
    timing.trial_seconds_max = *std::max_element(seconds.begin(), seconds.end());
  }
  return records;
}

std::vector<SweepRow> aggregate(const std::vector<TrialRecord>& trials) {
  std::map<std::size_t, std::vector<const TrialRecord*>> by_axis;
  for (const auto& t : trials) by_axis[t.axis_value].push_back(&t);
  std::vector<SweepRow> rows;
  for (const auto& [a, recs] : by_axis) {
    SweepRow row;
    row.axis_value = a;
    std::vector<double> mag, ph, cx;
    for (const auto* r : recs) {
      if (!r->ok) {
        ++row.trials_failed;
        continue;
      }
      ++row.trials_ok;
      mag.push_back(r->mse.magnitude);
      ph.push_back(r->mse.phase);
      cx.push_back(r->mse.complex);
    }
    row.magnitude = mean_with_ci(mag);
    row.phase = mean_with_ci(ph);
    row.complex = mean_with_ci(cx);
    rows.push_back(row);
  }
  return rows;
}

LearnConfig learn_config_for(const SweepSpec& spec) {
  LearnConfig cfg = spec.learn;
  cfg.clime.column_parallelism = spec.threads;
  return cfg;
}

nlohmann::json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"ci95", e.ci_half_width}}; }

}  // namespace

MseParts mse_decomposed(const ComplexVector& x_hat, const ComplexVector& x_true, const SamplingPattern& pattern) {
  if (x_hat.size() != pattern.n() || x_true.size() != pattern.n())
    throw ValidationError("mse_decomposed: vectors must have the pattern's length");
  const auto unobserved = pattern.unobserved();
  if (unobserved.empty()) throw ValidationError("mse_decomposed: every entry is observed, nothing to score");
  return mse_over(x_hat.values(), x_true.values(), unobserved);
}

void SweepSpec::validate(std::size_t n) const {
  if (sample_counts.empty()) throw ValidationError("SweepSpec: sample_counts is empty");
  for (auto m : sample_counts)
    if (m == 0 || m > n)
      throw ValidationError("SweepSpec: sample count " + std::to_string(m) + " outside [1, " + std::to_string(n) + "]");
  if (trials < 2) throw ValidationError("SweepSpec: trials must be at least 2");
  learn.validate();
  interp.validate();
}

nlohmann::json to_json(const SweepSpec& spec) {
  nlohmann::json j;
  j["sample_counts"] = spec.sample_counts;
  j["trials"] = spec.trials;
  j["seed"] = spec.seed;
  j["learn"] = to_json(spec.learn);
  j["interpolate"] = to_json(spec.interp);
  j["decompose"] = spec.decompose;
  j["test_limit"] = spec.test_limit;
  return j;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t m, int trial) {
  return splitmix(splitmix(splitmix(seed) ^ static_cast<std::uint64_t>(m)) ^ static_cast<std::uint64_t>(trial));
}

Estimate mean_with_ci(const std::vector<double>& values) {
  Estimate e;
  if (values.empty()) return e;
  const double n = static_cast<double>(values.size());
  for (double v : values) e.mean += v;
  e.mean /= n;
  if (values.size() < 2) return e;
  double ss = 0.0;
  for (double v : values) ss += (v - e.mean) * (v - e.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  e.ci_half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(n);
  return e;
}

const SweepRow& ExperimentReport::row(std::size_t axis_value) const {
  for (const auto& r : rows)
    if (r.axis_value == axis_value) return r;
  throw ValidationError("ExperimentReport: no row for " + axis + " = " + std::to_string(axis_value));
}

ExperimentReport run_sweep(const Dataset& ds, const LearnedGraph& graph, const SweepSpec& spec) {
  spec.validate(ds.nodes());
  if (graph.laplacian.dimension() != ds.nodes()) throw ValidationError("run_sweep: graph and dataset disagree on N");
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXcd tests = test_columns(ds, spec.test_limit);

  ExperimentReport report;
  report.kind = "joint";
  report.axis = "M";
  report.config = to_json(spec);
  report.config["test_vectors"] = tests.cols();
  const Predictor predictor = [&](const ComplexVector& y, const SamplingPattern& B) {
    return predict_joint(graph, spec.interp, y, B);
  };
  std::vector<std::size_t> ms = spec.sample_counts;
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  report.trials = run_cells(
      tests, ms, [](std::size_t m) { return m; }, [&](std::size_t) -> const Predictor& { return predictor; }, spec,
      report.timing);
  report.rows = aggregate(report.trials);
  report.timing.total_seconds = seconds_since(t0);
  return report;
}

ExperimentReport run_split_ablation(const Dataset& ds, const SweepSpec& spec) {
  spec.validate(ds.nodes());
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXcd tests = test_columns(ds, spec.test_limit);

  // A component that is identically zero in training is predicted as zero.
  const Eigen::MatrixXcd train = ds.train_matrix().values();
  const LearnConfig cfg = learn_config_for(spec);
  std::optional<LearnedGraph> re, im;
  const Eigen::MatrixXcd train_re = train.real().cast<Complex>();
  const Eigen::MatrixXcd train_im = train.imag().cast<Complex>();
  if (train_re.cwiseAbs().maxCoeff() > 0.0) re = learn_laplacian(ComplexDenseMatrix(train_re), cfg);
  if (train_im.cwiseAbs().maxCoeff() > 0.0) im = learn_laplacian(ComplexDenseMatrix(train_im), cfg);
  const double learn_seconds = seconds_since(t0);

  ExperimentReport report;
  report.kind = "split";
  report.axis = "M";
  report.config = to_json(spec);
  report.config["test_vectors"] = tests.cols();
  const Predictor predictor = [&](const ComplexVector& y, const SamplingPattern& B) {
    Prediction out{Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(B.n())), 0};
    if (re) {
      const auto p = predict_joint(*re, spec.interp, ComplexVector(y.values().real().cast<Complex>()), B);
      out.x.real() = p.x.real();
      out.iterations += p.iterations;
    }
    if (im) {
      const auto p = predict_joint(*im, spec.interp, ComplexVector(y.values().imag().cast<Complex>()), B);
      out.x.imag() = p.x.real();
      out.iterations += p.iterations;
    }
    return out;
  };
  std::vector<std::size_t> ms = spec.sample_counts;
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  report.trials = run_cells(
      tests, ms, [](std::size_t m) { return m; }, [&](std::size_t) -> const Predictor& { return predictor; }, spec,
      report.timing);
  report.rows = aggregate(report.trials);
  report.timing.learn_seconds = learn_seconds;
  report.timing.total_seconds = seconds_since(t0);
  return report;
}

ExperimentReport run_covariance_sweep(const Dataset& ds, const std::vector<std::size_t>& train_sizes,
                                      const SweepSpec& spec) {
  spec.validate(ds.nodes());
  if (spec.sample_counts.size() != 1) throw ValidationError("covariance sweep: exactly one sample count expected");
  std::vector<std::size_t> ks = train_sizes;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.empty() || ks.front() < 2 || ks.back() > ds.train.size())
    throw ValidationError("covariance sweep: train sizes must lie in [2, " + std::to_string(ds.train.size()) + "]");
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXcd tests = test_columns(ds, spec.test_limit);

  const LearnConfig cfg = learn_config_for(spec);
  std::map<std::size_t, LearnedGraph> graphs;
  std::map<std::size_t, Predictor> predictors;
  for (auto k : ks) {
    const std::vector<std::size_t> cols(ds.train.begin(), ds.train.begin() + static_cast<std::ptrdiff_t>(k));
    graphs.emplace(k, learn_laplacian(ds.columns(cols), cfg));
  }
  for (auto k : ks) {
    const LearnedGraph* g = &graphs.at(k);
    predictors[k] = [g, &spec](const ComplexVector& y, const SamplingPattern& B) {
      return predict_joint(*g, spec.interp, y, B);
    };
  }
  const double learn_seconds = seconds_since(t0);

  ExperimentReport report;
  report.kind = "covariance";
  report.axis = "K";
  report.config = to_json(spec);
  report.config["train_sizes"] = ks;
  report.config["test_vectors"] = tests.cols();
  const std::size_t m = spec.sample_counts.front();
  report.trials = run_cells(
      tests, ks, [m](std::size_t) { return m; }, [&](std::size_t k) -> const Predictor& { return predictors.at(k); },
      spec, report.timing);
  report.rows = aggregate(report.trials);
  report.timing.learn_seconds = learn_seconds;
  report.timing.total_seconds = seconds_since(t0);
  return report;
}

TrendTest spearman_trend(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("spearman_trend: length mismatch");
  if (x.size() < 3) throw ValidationError("spearman_trend: need at least 3 points");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  TrendTest t;
  t.points = x.size();
  if (sxx == 0.0 || syy == 0.0) return t;  // constant input: no trend
  t.spearman_rho = sxy / std::sqrt(sxx * syy);
  if (std::abs(t.spearman_rho) >= 1.0) {
    t.p_value = 0.0;
    return t;
  }
  const double stat = t.spearman_rho * std::sqrt((n - 2.0) / (1.0 - t.spearman_rho * t.spearman_rho));
  const boost::math::students_t dist(n - 2.0);
  t.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(stat)));
  return t;
}

TrendTest blocked_trend(const std::vector<double>& axis, const std::vector<std::vector<double>>& blocks) {
  std::vector<double> x, y;
  for (const auto& b : blocks) {
    if (b.size() != axis.size()) throw ValidationError("blocked_trend: block length differs from the axis");
    double avg = 0.0;
    for (double v : b) avg += v;
    avg /= static_cast<double>(b.size());
    if (!(avg > 0.0)) throw ValidationError("blocked_trend: block average must be positive");
    for (std::size_t i = 0; i < b.size(); ++i) {
      x.push_back(axis[i]);
      y.push_back(b[i] / avg);
    }
  }
  return spearman_trend(x, y);
}

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["kind"] = report.kind;
  j["axis"] = report.axis;
  j["config"] = report.config;
  const bool decompose = report.config.value("decompose", true);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row;
    row[report.axis] = r.axis_value;
    row["trials_ok"] = r.trials_ok;
    row["trials_failed"] = r.trials_failed;
    row["mse_complex"] = estimate_json(r.complex);
    if (decompose) {
      row["mse_magnitude"] = estimate_json(r.magnitude);
      row["mse_phase"] = estimate_json(r.phase);
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& t : report.trials)
    if (!t.ok) failures.push_back({{report.axis, t.axis_value}, {"trial", t.trial}, {"error", t.error}});
  j["failures"] = failures;
  return j;
}

void write_table(std::ostream& os, const ExperimentReport& report) {
  const bool decompose = report.config.value("decompose", true);
  char line[256];
  std::snprintf(line, sizeof line, "%6s %7s", report.axis.c_str(), "trials");
  os << line;
  if (decompose) os << "   MSE magnitude (95% CI)       MSE phase (95% CI)  ";
  os << "   MSE complex (95% CI)\n";
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%6zu %7d", r.axis_value, r.trials_ok);
    os << line;
    auto cell = [&](const Estimate& e) {
      std::snprintf(line, sizeof line, "   %10.4g +- %-10.3g", e.mean, e.ci_half_width);
      os << line;
    };
    if (decompose) {
      cell(r.magnitude);
      cell(r.phase);
    }
    cell(r.complex);
    if (r.trials_failed > 0) os << "  (" << r.trials_failed << " failed)";
    os << '\n';
  }
}

void write_trials_csv(std::ostream& os, const ExperimentReport& report) {
  os << report.axis << ",trial,ok,mse_magnitude,mse_phase,mse_complex,cg_iterations\n";
  char line[256];
  for (const auto& t : report.trials) {
    std::snprintf(line, sizeof line, "%zu,%d,%d,%.17g,%.17g,%.17g,%ld\n", t.axis_value, t.trial, t.ok ? 1 : 0,
                  t.mse.magnitude, t.mse.phase, t.mse.complex, t.cg_iterations);
    os << line;
  }
}

}  // namespace phasorgraph
