#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "phasorgraph/error.hpp"

using namespace phasorgraph;
using namespace phasorgraph::cli;

namespace {

void add_learn_options(CLI::App* sub, LearnOptions& o) {
  sub->add_option("--data", o.data, "Observation CSV")->required()->check(CLI::ExistingFile);
  sub->add_option("--train", o.train, "Training columns; the rest is held out")->capture_default_str();
  sub->add_option("--seed", o.seed, "Seed for the train/test split")->capture_default_str();
  sub->add_option("--rho", o.rho, "CLIME constraint slack")->capture_default_str();
  sub->add_option("--sparsity-epsilon", o.sparsity_epsilon, "Relative snap threshold")->capture_default_str();
  sub->add_flag("--no-polish", o.no_polish, "Skip the support-restricted re-solve");
  sub->add_option("--normalizer", o.normalizer, "Covariance divisor")
      ->check(CLI::IsMember({"by_nodes", "by_samples"}))
      ->capture_default_str();
  sub->add_option("--lp-algorithm", o.lp_algorithm, "LP solver")
      ->check(CLI::IsMember({"interior_point", "simplex"}))
      ->capture_default_str();
  sub->add_flag("--no-repair", o.no_repair, "Do not diagonally load a non-PD Laplacian");
  sub->add_option("--pd-floor", o.pd_floor, "Smallest eigenvalue after repair (default 1e-8 lambda_max)");
  sub->add_flag("--allow-degraded", o.allow_degraded, "Succeed even if some columns are not optimal");
}

void add_sweep_options(CLI::App* sub, EvalOptions& o) {
  add_learn_options(sub, o.learn);
  sub->add_option("--out", o.out, "Output prefix (.json, .txt, .csv)")->capture_default_str();
  sub->add_option("--sample-counts", o.sample_counts, "Observed node counts M")->delimiter(',')->capture_default_str();
  sub->add_option("--trials", o.trials, "Random patterns per M")->capture_default_str();
  sub->add_option("--sweep-seed", o.sweep_seed, "Seed for the sampling patterns")->capture_default_str();
  sub->add_option("--mu", o.mu, "Regularizer weight")->capture_default_str();
  sub->add_option("--cg-tol", o.cg_tol, "CG relative residual target")->capture_default_str();
  sub->add_flag("--jacobi", o.jacobi, "Diagonal preconditioning");
  sub->add_option("--test-limit", o.test_limit, "Test vectors per trial (0 = all)")->capture_default_str();
  sub->add_flag("--no-decompose", o.no_decompose, "Report the complex MSE only");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn sparse Hermitian graph Laplacians from complex data and interpolate missing entries"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file; [subcommand] sections, flags override");
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.fallthrough();

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Sample a synthetic Hermitian GMRF dataset");
  g->add_option("--nodes", gen.nodes, "Node count N")->capture_default_str();
  g->add_option("--samples", gen.samples, "Observations K")->capture_default_str();
  g->add_option("--density", gen.density, "Edge probability")->capture_default_str();
  g->add_option("--phase-spread", gen.phase_spread, "Edge phases drawn from U(-s, s)")->capture_default_str();
  g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  g->add_option("--out-dir", gen.out_dir, "Writes data.csv and model.json here")->capture_default_str();

  LearnOptions learn;
  auto* l = app.add_subcommand("learn", "Learn a Laplacian with complex CLIME");
  add_learn_options(l, learn);
  l->add_option("--out", learn.out, "Graph JSON")->capture_default_str();

  InterpolateOptions interp;
  auto* i = app.add_subcommand("interpolate", "Fill in unobserved entries");
  i->add_option("--graph", interp.graph, "Graph JSON from learn")->required()->check(CLI::ExistingFile);
  i->add_option("--input", interp.input, "CSV rows with N or M values")->required()->check(CLI::ExistingFile);
  i->add_option("--out", interp.out, "Output prefix (.csv, .json)")->capture_default_str();
  auto* obs = i->add_option("--observed", interp.observed, "Observed node indices")->delimiter(',');
  auto* cnt = i->add_option("--observed-count", interp.observed_count, "Draw this many observed nodes at random");
  obs->excludes(cnt);
  i->add_option("--seed", interp.seed, "Seed for --observed-count")->capture_default_str();
  i->add_option("--mu", interp.mu, "Regularizer weight")->capture_default_str();
  i->add_option("--cg-tol", interp.cg_tol, "CG relative residual target")->capture_default_str();
  i->add_option("--cg-max-iters", interp.cg_max_iters, "Iteration cap (0 = 10 N)")->capture_default_str();
  i->add_flag("--jacobi", interp.jacobi, "Diagonal preconditioning");

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "MSE versus observed node count");
  add_sweep_options(e, eval);
  e->add_flag("--ablation", eval.ablation, "Also run the real/imaginary split");
  e->add_option("--covariance-sizes", eval.covariance_sizes, "Training sizes K for the covariance sweep")
      ->delimiter(',');

  EvalOptions rho_sweep;
  auto* sr = app.add_subcommand("sweep-rho", "Eval for each rho");
  add_sweep_options(sr, rho_sweep);
  sr->add_option("--values", rho_sweep.values, "rho grid")->delimiter(',')->required();

  EvalOptions mu_sweep;
  auto* sm = app.add_subcommand("sweep-mu", "Eval for each mu");
  add_sweep_options(sm, mu_sweep);
  sm->add_option("--values", mu_sweep.values, "mu grid")->delimiter(',')->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*l) {
      learn.threads = threads;
      return cmd_learn(learn);
    }
    if (*i) return cmd_interpolate(interp);
    if (*e) {
      eval.learn.threads = threads;
      return cmd_eval(eval);
    }
    if (*sr) {
      rho_sweep.learn.threads = threads;
      return cmd_sweep_rho(rho_sweep);
    }
    if (*sm) {
      mu_sweep.learn.threads = threads;
      return cmd_sweep_mu(mu_sweep);
    }
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 2;
}
