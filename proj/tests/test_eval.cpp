#include <doctest.h>

#include <numbers>
#include <set>
#include <sstream>

#include "phasorgraph/error.hpp"
#include "phasorgraph/eval.hpp"

using namespace phasorgraph;
using namespace std::complex_literals;

namespace {

struct Fixture {
  GroundTruthModel model;
  Dataset ds;
  LearnedGraph graph;
};

Fixture small_fixture(std::uint64_t seed, double phase_spread = 1.0) {
  auto model = random_hermitian_laplacian(10, 0.3, phase_spread, seed);
  auto ds = split(sample_gmrf(model, 540, seed + 1), 500, seed);
  auto graph = learn_laplacian(ds.train_matrix(), LearnConfig{});
  return {std::move(model), std::move(ds), std::move(graph)};
}

SweepSpec small_spec() {
  SweepSpec spec;
  spec.sample_counts = {6, 3};
  spec.trials = 5;
  spec.seed = 11;
  return spec;
}

std::set<std::string> row_keys(const nlohmann::json& report) {
  std::set<std::string> keys;
  for (const auto& [k, v] : report.at("rows").at(0).items()) keys.insert(k);
  return keys;
}

}  // namespace

TEST_CASE("mse decomposition") {
  const SamplingPattern B(4, {0});
  Eigen::VectorXcd x(4);
  x << 1.0, 2.0 + 1i, -1.0 + 0.5i, 3i;
  SUBCASE("exact recovery") {
    const auto m = mse_decomposed(ComplexVector(x), ComplexVector(x), B);
    CHECK(m.magnitude == 0.0);
    CHECK(m.phase == 0.0);
    CHECK(m.complex == 0.0);
  }
  SUBCASE("quarter-turn rotation") {
    const auto m = mse_decomposed(ComplexVector(x * 1i), ComplexVector(x), B);
    CHECK(m.magnitude == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(m.phase == doctest::Approx(std::numbers::pi * std::numbers::pi / 4.0));
  }
  SUBCASE("phase difference wraps around the circle") {
    Eigen::VectorXcd a(2), b(2);
    a << 1.0, std::polar(1.0, 3.1);
    b << 1.0, std::polar(1.0, -3.1);
    const auto m = mse_decomposed(ComplexVector(a), ComplexVector(b), SamplingPattern(2, {0}));
    const double wrapped = 2.0 * std::numbers::pi - 6.2;
    CHECK(m.phase == doctest::Approx(wrapped * wrapped).epsilon(1e-9));
    CHECK(m.phase < 0.01);
  }
  SUBCASE("only unobserved entries count") {
    Eigen::VectorXcd xh = x;
    xh[0] += 5.0;
    CHECK(mse_decomposed(ComplexVector(xh), ComplexVector(x), B).complex == 0.0);
  }
  SUBCASE("nothing to score") {
    CHECK_THROWS_AS(mse_decomposed(ComplexVector(x), ComplexVector(x), SamplingPattern::all(4)), ValidationError);
  }
}

TEST_CASE("confidence interval") {
  const auto e = mean_with_ci({1.0, 2.0, 3.0});
  CHECK(e.mean == doctest::Approx(2.0));
  // t(0.975, 2) = 4.302652729696142
  CHECK(e.ci_half_width == doctest::Approx(4.302652729696142 / std::sqrt(3.0)).epsilon(1e-9));
  CHECK(mean_with_ci({4.0}).ci_half_width == 0.0);
  CHECK(mean_with_ci({}).mean == 0.0);
}

TEST_CASE("spearman trend") {
  SUBCASE("reference values") {
    const auto t = spearman_trend({1, 2, 3, 4, 5}, {2, 1, 4, 3, 5});
    CHECK(t.spearman_rho == doctest::Approx(0.8));
    CHECK(t.p_value == doctest::Approx(0.10408803866182788).epsilon(1e-9));
  }
  SUBCASE("strictly decreasing") {
    const auto t = spearman_trend({1, 2, 3, 4}, {9, 7, 3, 1});
    CHECK(t.spearman_rho == doctest::Approx(-1.0));
    CHECK(t.decreasing());
  }
  SUBCASE("ties get average ranks") {
    // ranks x: 1.5 1.5 3 4, y: 4 3 1.5 1.5
    const auto t = spearman_trend({1, 1, 2, 3}, {5, 4, 2, 2});
    CHECK(t.spearman_rho == doctest::Approx(-0.8888888888888888));
  }
  SUBCASE("constant series has no trend") {
    const auto t = spearman_trend({1, 2, 3}, {2, 2, 2});
    CHECK(t.spearman_rho == 0.0);
    CHECK_FALSE(t.decreasing());
  }
  SUBCASE("blocking removes the scale of each model") {
    // Each block decreases; pooled raw values are dominated by the scale.
    const std::vector<double> axis{1, 2, 3};
    const std::vector<std::vector<double>> blocks{{1.0, 0.99, 0.98}, {5.0, 4.9, 4.8}, {10.0, 9.9, 9.8}};
    std::vector<double> x, y;
    for (const auto& b : blocks)
      for (std::size_t i = 0; i < 3; ++i) {
        x.push_back(axis[i]);
        y.push_back(b[i]);
      }
    CHECK_FALSE(spearman_trend(x, y).decreasing());
    CHECK(blocked_trend(axis, blocks).decreasing());
  }
  CHECK_THROWS_AS(spearman_trend({1, 2}, {1, 2}), ValidationError);
}

TEST_CASE("sweep protocol") {
  const auto f = small_fixture(3);
  const auto spec = small_spec();

  SUBCASE("rows sorted by M with non-negative intervals") {
    const auto r = run_sweep(f.ds, f.graph, spec);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].axis_value == 3);
    CHECK(r.rows[1].axis_value == 6);
    for (const auto& row : r.rows) {
      CHECK(row.trials_ok == 5);
      CHECK(row.complex.ci_half_width >= 0.0);
      CHECK(row.magnitude.ci_half_width >= 0.0);
      CHECK(row.phase.ci_half_width >= 0.0);
    }
    CHECK(r.trials.size() == 10);
  }
  SUBCASE("deterministic across runs and thread counts") {
    auto threaded = spec;
    threaded.threads = 3;
    const auto a = to_json(run_sweep(f.ds, f.graph, spec)).dump();
    const auto b = to_json(run_sweep(f.ds, f.graph, spec)).dump();
    const auto c = to_json(run_sweep(f.ds, f.graph, threaded)).dump();
    CHECK(a == b);
    CHECK(a == c);
  }
  SUBCASE("trial seeds differ per cell") {
    std::set<std::uint64_t> seeds;
    for (std::size_t m : {3, 6})
      for (int t = 0; t < 5; ++t) seeds.insert(trial_seed(11, m, t));
    CHECK(seeds.size() == 10);
  }
  SUBCASE("full observation is limited only by shrinkage") {
    auto full = spec;
    full.sample_counts = {10};
    full.interp.mu = 1e-8;
    CHECK(run_sweep(f.ds, f.graph, full).rows[0].complex.mean <= 1e-10);
  }
  SUBCASE("invalid specs") {
    auto bad = spec;
    bad.sample_counts = {11};
    CHECK_THROWS_AS(run_sweep(f.ds, f.graph, bad), ValidationError);
    bad = spec;
    bad.trials = 1;
    CHECK_THROWS_AS(run_sweep(f.ds, f.graph, bad), ValidationError);
    bad = spec;
    bad.sample_counts.clear();
    CHECK_THROWS_AS(run_sweep(f.ds, f.graph, bad), ValidationError);
  }
  SUBCASE("solver failures are counted, not thrown") {
    LearnedGraph broken = f.graph;
    broken.laplacian = HermitianLaplacian::from_dense(-Eigen::MatrixXcd::Identity(10, 10));
    auto s = spec;
    s.interp.mu = 2.0;
    const auto r = run_sweep(f.ds, broken, s);
    CHECK(r.rows[0].trials_failed == 5);
    CHECK(r.rows[0].trials_ok == 0);
    CHECK(to_json(r).at("failures").size() == 10);
  }
  SUBCASE("outputs") {
    const auto r = run_sweep(f.ds, f.graph, spec);
    std::ostringstream table, csv;
    write_table(table, r);
    write_trials_csv(csv, r);
    CHECK(table.str().find("MSE phase") != std::string::npos);
    int lines = 0;
    for (char ch : csv.str()) lines += ch == '\n';
    CHECK(lines == 11);
    CHECK(to_json(r).at("config").at("trials") == 5);
  }
}

TEST_CASE("interval half-width shrinks like one over root trials") {
  const auto f = small_fixture(5);
  auto spec = small_spec();
  spec.sample_counts = {4};
  spec.test_limit = 10;
  std::vector<double> hw;
  for (int trials : {5, 20, 80}) {
    spec.trials = trials;
    hw.push_back(run_sweep(f.ds, f.graph, spec).rows[0].complex.ci_half_width);
  }
  // Expected ratio 2 between successive entries; allow a factor 2 either way.
  for (std::size_t i = 0; i + 1 < hw.size(); ++i) {
    CHECK(hw[i] / hw[i + 1] >= 1.0);
    CHECK(hw[i] / hw[i + 1] <= 4.0);
  }
}

TEST_CASE("split ablation") {
  SUBCASE("real data: ablation and joint pipeline agree") {
    auto f = small_fixture(7, 0.0);
    const Eigen::MatrixXcd real = f.ds.X.values().real().cast<Complex>();
    Dataset ds = f.ds;
    ds.X = ComplexDenseMatrix(real);
    const auto graph = learn_laplacian(ds.train_matrix(), LearnConfig{});
    CHECK(graph.real_input);
    const auto spec = small_spec();
    const auto joint = run_sweep(ds, graph, spec);
    const auto split_report = run_split_ablation(ds, spec);
    for (std::size_t i = 0; i < joint.rows.size(); ++i)
      CHECK(std::abs(joint.rows[i].complex.mean - split_report.rows[i].complex.mean) <= 1e-6);
  }
  SUBCASE("same report schema") {
    const auto f = small_fixture(8);
    const auto spec = small_spec();
    const auto joint = to_json(run_sweep(f.ds, f.graph, spec));
    const auto abl = to_json(run_split_ablation(f.ds, spec));
    CHECK(row_keys(joint) == row_keys(abl));
    CHECK(abl.at("kind") == "split");
    CHECK(joint.at("rows").size() == abl.at("rows").size());
  }
}

TEST_CASE("covariance-size sweep") {
  const auto f = small_fixture(9);
  auto spec = small_spec();
  spec.sample_counts = {5};
  const auto r = run_covariance_sweep(f.ds, {500, 50, 200}, spec);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.axis == "K");
  CHECK(r.rows[0].axis_value == 50);
  CHECK(r.rows[2].axis_value == 500);
  CHECK_THROWS_AS(run_covariance_sweep(f.ds, {501}, spec), ValidationError);
  spec.sample_counts = {4, 5};
  CHECK_THROWS_AS(run_covariance_sweep(f.ds, {50}, spec), ValidationError);
}

TEST_CASE("learned graph depends on the train split only") {
  const auto f = small_fixture(12);
  Dataset tampered = f.ds;
  Eigen::MatrixXcd X = tampered.X.values();
  for (auto k : tampered.test) X.col(static_cast<Eigen::Index>(k)).setConstant(7.0 - 3i);
  tampered.X = ComplexDenseMatrix(X);
  const auto again = learn_laplacian(tampered.train_matrix(), LearnConfig{});
  CHECK(fnv1a64(to_json(again.laplacian).dump()) == fnv1a64(to_json(f.graph.laplacian).dump()));
  CHECK((again.mean - f.graph.mean).norm() == 0.0);
}
