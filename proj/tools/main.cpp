#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace dasfm::cli;
  namespace fs = std::filesystem;

  CLI::App app{"Dynamic affine structure from motion: simulate, solve and evaluate"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string config, out;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "Run configuration JSON")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Overrides the configured seed");
    cmd->add_flag("--quiet", flags.quiet, "Suppress the summary on stdout");
  };

  auto* simulate = app.add_subcommand("simulate", "Write a simulated dataset");
  add_common(simulate);
  simulate->add_option("--out", out, "Dataset JSON to write")->required();

  std::string dataset, recon;
  auto* solve = app.add_subcommand("solve", "Reconstruct motion, structure and gravity");
  add_common(solve);
  solve->add_option("--dataset", dataset, "Dataset JSON")->required();
  solve->add_option("--out", out, "Reconstruction JSON to write")->required();

  auto* eval = app.add_subcommand("eval", "Align a reconstruction to ground truth and report errors");
  add_common(eval);
  eval->add_option("--recon", recon, "Reconstruction JSON")->required();
  eval->add_option("--dataset", dataset, "Dataset JSON")->required();
  eval->add_option("--out", out, "Output directory")->required();

  std::string sweep_spec;
  int jobs = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  auto* sweep = app.add_subcommand("sweep", "Run many seeds and noise scales");
  add_common(sweep);
  sweep->add_option("--sweep", sweep_spec, "Sweep spec JSON")->required();
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out, "Output directory")->required();

  auto* pipeline = app.add_subcommand("pipeline", "simulate, solve and eval into one directory");
  add_common(pipeline);
  pipeline->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  if (!config.empty()) flags.config = config;
  for (auto* cmd : app.get_subcommands()) {
    if (cmd->count("--seed") > 0) flags.seed = seed;
  }

  if (simulate->parsed()) return cmd_simulate(flags, out, std::cout, std::cerr);
  if (solve->parsed()) return cmd_solve(flags, dataset, out, std::cout, std::cerr);
  if (eval->parsed()) return cmd_eval(flags, recon, dataset, out, std::cout, std::cerr);
  if (sweep->parsed()) return cmd_sweep(flags, sweep_spec, jobs, out, std::cout, std::cerr);
  if (pipeline->parsed()) return cmd_pipeline(flags, out, std::cout, std::cerr);
  return kConfigError;
}
