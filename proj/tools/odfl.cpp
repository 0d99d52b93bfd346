// odfl: worlds, optimizer, oracle and FL simulations from the command line.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "odfl/commands.hpp"

namespace cli = odfl::cli;

int main(int argc, char** argv) {
  CLI::App app{"On-demand client deployment for federated learning"};
  app.set_version_flag("--version", cli::kToolVersion);
  app.require_subcommand(1);

  // Global flags, shared by every subcommand.
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config;
  app.add_option("--seed", seed, "Overrides the seed of the relevant config");
  app.add_option("--out", out, "Output directory");
  app.add_option("--config", config, "JSON config for the subcommand");

  auto* gen = app.add_subcommand("generate", "Generate a synthetic mobility world");

  auto* opt = app.add_subcommand("optimize", "Run the GA on a problem instance");
  std::string instance;
  opt->add_option("instance", instance, "Problem instance JSON")->required();

  auto* orc = app.add_subcommand("oracle", "Enumerate the exact Pareto front (n <= 20)");
  std::string oracle_instance;
  unsigned oracle_workers = 1;
  orc->add_option("instance", oracle_instance, "Problem instance JSON")->required();
  orc->add_option("--workers", oracle_workers, "Enumeration threads");

  auto* sim = app.add_subcommand("simulate", "Run federated learning rounds on a world");
  std::string sim_world;
  int sim_seeds = 1;
  unsigned sim_jobs = 1;
  std::optional<unsigned> sim_workers;
  sim->add_option("world", sim_world, "Directory written by `generate`")->required();
  sim->add_option("--seeds", sim_seeds, "Number of consecutive seeds to run");
  sim->add_option("--jobs", sim_jobs, "Concurrent runs in batch mode");
  sim->add_option("--workers", sim_workers, "Local training threads per run");

  auto* cmp = app.add_subcommand("compare", "Run several strategies on the same world");
  std::string cmp_world;
  std::vector<std::string> cmp_configs;
  int cmp_seeds = 1;
  unsigned cmp_jobs = 1;
  cmp->add_option("world", cmp_world, "Directory written by `generate`")->required();
  cmp->add_option("configs", cmp_configs, "Two or more SimConfig JSON files")->required();
  cmp->add_option("--seeds", cmp_seeds, "Number of consecutive seeds to run");
  cmp->add_option("--jobs", cmp_jobs, "Concurrent runs");

  // Subcommand options may also follow the subcommand name.
  for (auto* sub : {gen, opt, orc, sim, cmp}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  auto cfg = [&]() -> std::optional<cli::fs::path> {
    if (config.empty()) return std::nullopt;
    return cli::fs::path(config);
  };
  auto out_or = [&](const char* fallback) {
    return cli::fs::path(out.empty() ? fallback : out);
  };

  if (gen->parsed()) {
    return cli::cmd_generate({cfg(), out_or("world"), seed}, std::cerr);
  }
  if (opt->parsed()) {
    return cli::cmd_optimize({instance, cfg(), out_or("optimize"), seed}, std::cerr);
  }
  if (orc->parsed()) {
    return cli::cmd_oracle({oracle_instance, out_or("oracle"), oracle_workers}, std::cerr);
  }
  if (sim->parsed()) {
    return cli::cmd_simulate(
        {sim_world, cfg(), out_or("simulate"), seed, sim_seeds, sim_jobs, sim_workers},
        std::cerr);
  }
  std::vector<cli::fs::path> paths(cmp_configs.begin(), cmp_configs.end());
  if (!config.empty()) paths.insert(paths.begin(), config);
  return cli::cmd_compare({cmp_world, paths, out_or("compare"), seed, cmp_seeds, cmp_jobs},
                          std::cerr);
}
