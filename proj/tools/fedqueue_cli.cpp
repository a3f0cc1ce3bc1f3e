#include <iostream>

#include <CLI11.hpp>

#include "fedqueue/cli.hpp"

int main(int argc, char** argv) {
  fedqueue::CliOptions opt;
  CLI::App app{"Queue-aware federated learning simulator"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* cmd, bool out_required) {
    cmd->add_option("--config", opt.config, "Experiment config file (defaults when omitted)")->check(CLI::ExistingFile);
    auto* out = cmd->add_option("--out", opt.out, "Output directory (relative paths honor FEDQUEUE_OUTPUT_ROOT)");
    if (out_required) out->required();
    cmd->add_option("--seed", opt.seed, "Override the master seed");
    cmd->add_flag("--force", opt.force, "Overwrite a non-empty output directory");
    cmd->add_option("--jobs", opt.jobs, "Experiments to run concurrently")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Run one experiment");
  common(run, true);

  auto* sweep = app.add_subcommand("sweep", "Sweep one config key over values, methods and seeds");
  common(sweep, true);
  sweep->add_option("--axis", opt.axis, "Config key to sweep (rho is short for queue_rho)")->required();
  sweep->add_option("--values", opt.values, "Comma-separated values")->delimiter(',')->required();
  sweep->add_option("--trials", opt.trials, "Seeds per grid point")->check(CLI::PositiveNumber);
  sweep->add_option("--methods", opt.methods, "Comma-separated algorithms (default: algo.name)")->delimiter(',');

  auto* ablate = app.add_subcommand("ablate", "Baseline and the three single-mechanism ablations");
  common(ablate, false);
  ablate->add_option("--trials", opt.trials, "Seeds per variant")->check(CLI::PositiveNumber);

  auto* bound = app.add_subcommand("check-lemma1", "Staleness-bound verification grid");
  common(bound, false);
  bound->add_option("--trials", opt.trials, "Simulation seeds per grid point")->check(CLI::PositiveNumber);
  bound->add_option("--rho", opt.rho, "Queue noise levels")->delimiter(',');
  bound->add_option("--gamma", opt.gamma, "Admission tolerances")->delimiter(',');
  bound->add_option("--alpha", opt.alpha, "EWMA rates")->delimiter(',');
  bound->add_option("--mc-trials", opt.mc_trials, "Monte Carlo trials per grid point")->check(CLI::Range(100, 100000000));

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return fedqueue::cmd_run(opt, std::cout, std::cerr);
  if (sweep->parsed()) return fedqueue::cmd_sweep(opt, std::cout, std::cerr);
  if (ablate->parsed()) return fedqueue::cmd_ablate(opt, std::cout, std::cerr);
  return fedqueue::cmd_check_lemma1(opt, std::cout, std::cerr);
}
