// Command-line front end: integrate | train | evaluate | full-run.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "esd_pinn/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"PINN and RK45 solvers for the energy supply-demand system"};
  app.require_subcommand(1);

  esd::cli::CommandOptions opts;
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    cmd->add_option("--seed", seed, "Network seed (overrides network.seed)");
    cmd->add_option("--threads", threads, "Worker threads (overrides ESD_PINN_THREADS)");
    cmd->add_flag("--dry-run", opts.dry_run, "Validate the config and exit");
  };

  auto* integrate = app.add_subcommand("integrate", "RK45 reference solution on the output grid");
  add_common(integrate);

  auto* train = app.add_subcommand("train", "Train the network; write history, checkpoint, prediction");
  add_common(train);
  train->add_flag("--resume", opts.resume, "Continue from the checkpoint in the output directory");

  std::string rk_csv;
  std::string pinn_csv;
  auto* evaluate = app.add_subcommand("evaluate", "Compare two solution tables");
  evaluate->add_option("rk_csv", rk_csv, "Reference solution CSV")->required();
  evaluate->add_option("pinn_csv", pinn_csv, "Candidate solution CSV")->required();
  add_common(evaluate);

  auto* full = app.add_subcommand("full-run", "integrate + train + evaluate");
  add_common(full);
  full->add_flag("--resume", opts.resume, "Continue training from an existing checkpoint");

  CLI11_PARSE(app, argc, argv);

  opts.config_path = config;
  for (auto* cmd : {integrate, train, evaluate, full}) {
    if (!*cmd) continue;
    if (cmd->count("--out") > 0) opts.out_dir = out_dir;
    if (cmd->count("--seed") > 0) opts.seed = seed;
    if (cmd->count("--threads") > 0) opts.threads = threads;
  }

  if (*integrate) return esd::cli::cmd_integrate(opts, std::cout, std::cerr);
  if (*train) return esd::cli::cmd_train(opts, std::cout, std::cerr);
  if (*evaluate) return esd::cli::cmd_evaluate(rk_csv, pinn_csv, opts, std::cout, std::cerr);
  return esd::cli::cmd_full_run(opts, std::cout, std::cerr);
}
