// SPDX-License-Identifier: Apache-2.0
//
// dnflow <command> --config <path> [--out <dir>] [--seed <u64>] [--quiet]
#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "dnflow/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Minimizing-movement solver for doubly nonlinear flows"};
  app.require_subcommand(1, 1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool quiet = false;
  for (const char* name : {"evolve", "groundstate", "verify", "refine"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory, overrides output.directory");
    sub->add_option("--seed", seed, "seed, overrides the config seed");
    sub->add_flag("--quiet", quiet, "no progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : dnflow::kExitConfig;
  }

  const CLI::App* sub = app.get_subcommands().front();
  dnflow::RunOptions opt;
  if (sub->count("--out")) opt.out_dir = out;
  if (sub->count("--seed")) opt.seed = seed;
  opt.quiet = quiet;
  return dnflow::run_experiment(sub->get_name(), std::filesystem::path(config), opt);
}
