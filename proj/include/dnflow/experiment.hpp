// SPDX-License-Identifier: Apache-2.0
//
// Batch experiments driven by JSON config files. The schema is documented in
// configs/README.md; every table rejects unknown keys and errors name the
// offending key path (for example `psi.p`).
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnflow/convex_models.hpp"
#include "dnflow/grid.hpp"

namespace dnflow {

struct InitialSpec {
  /// Builtin datum name; empty when `snapshot` is set.
  std::string name;
  std::map<std::string, double> params;
  std::filesystem::path snapshot;
};

struct ExperimentConfig {
  std::string command;  // evolve, groundstate, verify, refine
  Grid grid;
  int m = 1;
  DissipationSpec psi;
  EnergySpec F;
  double T = 1.0;
  int N = 0;
  std::vector<int> N_list;
  double residual_tol = 0.0;  // <= 0: solver default
  int max_iter = 200;
  std::vector<double> eps_schedule;
  /// Rate for the scaled_energy column: unset, a number, or computed ("auto").
  std::optional<double> upsilon;
  bool upsilon_auto = false;
  InitialSpec initial;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::vector<std::string> series;  // optional columns to compute
  int snapshot_every = 0;           // 0: final snapshot only
  bool timestamp = false;
};

/// Parses and validates a config document; throws ConfigError. Relative
/// snapshot paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Deterministic initial data: zero, sine_eigenvector, bump, random_seeded,
/// product_sine_2d. Throws UnknownDatum for other names.
///
/// Component c of the deterministic data is scaled by 1 / (c + 1).
///   sine_eigenvector  amplitude * prod_a sin(mode pi x_a / L_a)
///   product_sine_2d   amplitude * sin(k0 pi x / L0) sin(k1 pi y / L1), 2D only
///   bump              amplitude * (1 - |y|^2)^2 on the ball of `radius` around
///                     `center` (in units of the box, default 0.5 and 0.25)
///   random_seeded     uniform in [lo, hi) from std::mt19937_64(seed); the top
///                     53 bits of each draw map to [0, 1). A "seed" parameter
///                     replaces the seed argument.
VectorField builtin_initial(const std::string& name, const std::map<std::string, double>& params,
                            const Grid& grid, int m, std::uint64_t seed = 0);

/// Columns of series.csv in their fixed order.
const std::vector<std::string>& series_columns();

struct SeriesTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;
};

std::string series_to_string(const SeriesTable& table);
SeriesTable series_from_string(const std::string& text);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides output.directory
  std::optional<std::uint64_t> seed;             // overrides the config seed
  bool quiet = false;
  unsigned threads = 0;  // 0: DNFLOW_NUM_THREADS or hardware concurrency
};

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfig = 2,
  kExitNonConvergence = 3,
  kExitIo = 4,
  kExitSolver = 5,
};

/// Runs `command` (which must agree with config.command when that is set).
/// Every failure is reported through error.json in the output directory and
/// mapped to an exit code; this function does not throw.
int run_experiment(const std::string& command, const std::filesystem::path& config_path,
                   const RunOptions& options);

/// Same, for an already parsed config.
int run_experiment(const std::string& command, ExperimentConfig config,
                   const RunOptions& options);

}  // namespace dnflow
