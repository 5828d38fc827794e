#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "phasorgraph/data.hpp"
#include "phasorgraph/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phasorgraph;

namespace {

const fs::path kFixture = PHASORGRAPH_FIXTURE_DIR;

fs::path workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::path(PHASORGRAPH_WORK_DIR) / "cli_work";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the CLI with stderr captured into `log` under the work dir.
int run(const std::string& args, const std::string& log = "last.log") {
  const std::string cmd = "cd '" + workdir().string() + "' && PHASORGRAPH_VERBOSITY=1 '" + PHASORGRAPH_CLI + "' " +
                          args + " > /dev/null 2> '" + log + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path at(const std::string& name) { return workdir() / name; }

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

void write_dataset(const Eigen::MatrixXcd& X, const std::string& name) {
  save_csv(make_dataset(ComplexDenseMatrix(X), {}), at(name));
}

// Max |off-diagonal| and min diagonal of a COO laplacian block.
std::pair<double, double> diag_stats(const json& lap) {
  const auto n = lap.at("n").get<std::size_t>();
  std::vector<double> diag(n, 0.0);
  double off = 0.0;
  for (const auto& part : {"real", "imag"})
    for (const auto& t : lap.at(part)) {
      const auto i = t.at(0).get<std::size_t>(), j = t.at(1).get<std::size_t>();
      const double v = t.at(2).get<double>();
      if (i == j && std::string(part) == "real")
        diag[i] = v;
      else if (i != j)
        off = std::max(off, std::abs(v));
    }
  return {off, *std::min_element(diag.begin(), diag.end())};
}

}  // namespace

TEST_CASE("gen") {
  REQUIRE(run("gen --nodes 30 --samples 500 --seed 7 --out-dir g1") == 0);
  CHECK(fs::exists(at("g1/data.csv")));
  CHECK(fs::exists(at("g1/model.json")));
  const auto ds = load_csv(at("g1/data.csv"));
  CHECK(ds.nodes() == 30);
  CHECK(ds.samples() == 500);
  CHECK(load_json(at("g1/model.json")).at("config").at("seed") == 7);

  REQUIRE(run("gen --nodes 30 --samples 500 --seed 7 --out-dir g2") == 0);
  CHECK(slurp(at("g1/data.csv")) == slurp(at("g2/data.csv")));

  CHECK(run("gen --nodes 1 --out-dir g3") == 2);
  CHECK_FALSE(fs::exists(at("g3")));
  CHECK(run("gen --density 0 --out-dir g3") == 2);
  CHECK(run("gen --bogus") == 2);
}

TEST_CASE("learn") {
  SUBCASE("identity covariance gives a near-diagonal Laplacian") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z(0.0, std::sqrt(0.5));
    Eigen::MatrixXcd X(6, 4000);
    for (Eigen::Index k = 0; k < X.cols(); ++k)
      for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, k) = {z(rng), z(rng)};
    write_dataset(X, "iid.csv");
    REQUIRE(run("learn --data iid.csv --out iid.json") == 0);
    const auto [off, diag] = diag_stats(load_json(at("iid.json")).at("laplacian"));
    CHECK(off <= 0.1 * diag);
  }
  SUBCASE("real data triggers the real reduction") {
    const auto model = random_hermitian_laplacian(8, 0.4, 0.0, 3);
    const Eigen::MatrixXcd X = sample_gmrf(model, 1000, 4).X.values().real().cast<Complex>();
    write_dataset(X, "real.csv");
    REQUIRE(run("learn --data real.csv --out real.json", "real.log") == 0);
    CHECK(slurp(at("real.log")).find("real-valued") != std::string::npos);
    for (const auto& t : load_json(at("real.json")).at("laplacian").at("imag")) CHECK(std::abs(t.at(2).get<double>()) <= 1e-8);
  }
  SUBCASE("missing input leaves no output") {
    CHECK(run("learn --data nope.csv --out nope.json") == 2);
    CHECK_FALSE(fs::exists(at("nope.json")));
  }
  SUBCASE("malformed input is a usage error") {
    std::ofstream(at("bad.csv")) << "# n=2\n1,2,3,4\n1,2,3\n";
    CHECK(run("learn --data bad.csv --out bad.json", "bad.log") == 2);
    CHECK(slurp(at("bad.log")).find(":3:") != std::string::npos);
    CHECK_FALSE(fs::exists(at("bad.json")));
  }
  SUBCASE("degraded columns fail unless allowed") {
    // A constant node has a zero covariance row, so its column LP is infeasible.
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    Eigen::MatrixXcd X(4, 300);
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
      X(0, k) = 1.0;
      for (Eigen::Index i = 1; i < 4; ++i) X(i, k) = {z(rng), z(rng)};
    }
    write_dataset(X, "const.csv");
    CHECK(run("learn --data const.csv --out const.json") == 1);
    CHECK_FALSE(fs::exists(at("const.json")));
    CHECK(run("learn --data const.csv --out const.json --allow-degraded") == 0);
    CHECK(load_json(at("const.json")).at("summary").at("degraded") == true);
  }
  SUBCASE("thread count does not change the artifact") {
    const std::string data = (kFixture / "data.csv").string();
    REQUIRE(run("--threads 1 learn --data '" + data + "' --out t1.json") == 0);
    REQUIRE(run("learn --threads 3 --data '" + data + "' --out t3.json") == 0);
    CHECK(slurp(at("t1.json")) == slurp(at("t3.json")));
  }
  SUBCASE("config file with flag override") {
    std::ofstream(at("cfg.toml")) << "[learn]\nrho = 0.3\nout = \"cfg.json\"\n";
    const std::string data = (kFixture / "data.csv").string();
    REQUIRE(run("--config cfg.toml learn --data '" + data + "'") == 0);
    CHECK(load_json(at("cfg.json")).at("config").at("rho") == 0.3);
    REQUIRE(run("--config cfg.toml learn --data '" + data + "' --rho 0.25") == 0);
    CHECK(load_json(at("cfg.json")).at("config").at("rho") == 0.25);
  }
}

TEST_CASE("interpolate") {
  const std::string graph = (kFixture / "graph.json").string();
  const std::string data = (kFixture / "data.csv").string();
  SUBCASE("full observation with tiny mu returns the input") {
    std::string all;
    for (int i = 0; i < 30; ++i) all += (i ? "," : "") + std::to_string(i);
    REQUIRE(run("interpolate --graph '" + graph + "' --input '" + data + "' --observed " + all +
                " --mu 1e-10 --out full") == 0);
    const auto in = load_csv(data).X.values();
    const auto out = load_csv(at("full.csv")).X.values();
    CHECK((in - out).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("quarter observation on the bundled example converges") {
    REQUIRE(run("interpolate --graph '" + graph + "' --input '" + data + "' --observed-count 8 --seed 3 --out q") == 0);
    const auto j = load_json(at("q.json"));
    CHECK(j.at("converged") == true);
    CHECK(j.at("config").at("observed").size() == 8);
    for (const auto& r : j.at("rows")) CHECK(r.at("relative_residual").get<double>() <= 1e-8);
  }
  SUBCASE("observed values only") {
    Eigen::MatrixXcd Y(3, 2);
    Y << 1.0, 0.5, 0.0, -1.0, 2.0, 0.25;
    write_dataset(Y, "obs.csv");
    REQUIRE(run("interpolate --graph '" + graph + "' --input obs.csv --observed 0,5,9 --out o") == 0);
    const auto out = load_csv(at("o.csv")).X.values();
    CHECK(out.rows() == 30);
    CHECK(out.cols() == 2);
  }
  SUBCASE("bad indices") {
    CHECK(run("interpolate --graph '" + graph + "' --input '" + data + "' --observed 0,30 --out badidx") == 2);
    CHECK_FALSE(fs::exists(at("badidx.csv")));
    CHECK(run("interpolate --graph '" + graph + "' --input '" + data + "' --out bad") == 2);
  }
}

TEST_CASE("eval and sweeps") {
  const std::string data = (kFixture / "data.csv").string();
  const std::string common = " --data '" + data + "' --trials 3 --test-limit 20 --sample-counts 8,16";
  SUBCASE("eval writes json, table and csv deterministically") {
    REQUIRE(run("--threads 1 eval" + common + " --ablation --out e1") == 0);
    REQUIRE(run("--threads 1 eval" + common + " --ablation --out e2") == 0);
    for (const char* ext : {".json", ".txt", ".csv"}) {
      CHECK(fs::exists(at(std::string("e1") + ext)));
      CHECK(slurp(at(std::string("e1") + ext)) == slurp(at(std::string("e2") + ext)));
    }
    const auto j = load_json(at("e1.json"));
    CHECK(j.at("joint").at("rows").size() == 2);
    CHECK(j.contains("split"));
    CHECK(j.at("config").at("trials") == 3);
  }
  SUBCASE("graph comes from the train split") {
    REQUIRE(run("eval" + common + " --train 150 --seed 4 --out leak") == 0);
    REQUIRE(run("learn --data '" + data + "' --train 150 --seed 4 --out leak_graph.json") == 0);
    const auto lap = load_json(at("leak_graph.json")).at("laplacian");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(lap.dump())));
    CHECK(load_json(at("leak.json")).at("graph").at("hash") == std::string(buf));
  }
  SUBCASE("invalid sweeps are rejected") {
    CHECK(run("eval --data '" + data + "' --trials 1 --out x") == 2);
    CHECK(run("eval --data '" + data + "' --sample-counts 0 --out x") == 2);
    CHECK(run("eval --data '" + data + "' --sample-counts 40 --out x") == 2);
    CHECK_FALSE(fs::exists(at("x.json")));
  }
  SUBCASE("covariance sweep") {
    REQUIRE(run("eval --data '" + data + "' --trials 3 --test-limit 10 --sample-counts 8 --covariance-sizes 50,133 --out cov") == 0);
    CHECK(load_json(at("cov.json")).at("covariance").at("rows").size() == 2);
    CHECK(run("eval --data '" + data + "' --sample-counts 8,9 --covariance-sizes 50 --out cov2") == 2);
  }
  SUBCASE("rho and mu sweeps") {
    REQUIRE(run("sweep-rho" + common + " --values 0.15,0.3 --out sr1") == 0);
    REQUIRE(run("sweep-rho" + common + " --values 0.15,0.3 --out sr2") == 0);
    CHECK(slurp(at("sr1.json")) == slurp(at("sr2.json")));
    const auto j = load_json(at("sr1.json"));
    REQUIRE(j.at("results").size() == 2);
    CHECK(j.at("results")[0].at("graph").at("edges").get<int>() >= j.at("results")[1].at("graph").at("edges").get<int>());
    REQUIRE(run("sweep-mu" + common + " --values 0.01,1 --out sm") == 0);
    CHECK(load_json(at("sm.json")).at("results").size() == 2);
    CHECK(run("sweep-mu" + common + " --values -1 --out sm_bad") == 2);
  }
}
