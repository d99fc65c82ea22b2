#pragma once

#include <string>
#include <vector>

#include "dimer/explore.hpp"

namespace dimer {

// Fully resolved front-end configuration. Defaults describe the reference
// working point: J = 2.5, the matching Kerr strength, output coupling 0.4,
// detunings at the closed-form optimum, pump 0.01.
struct RunConfig {
  RunConfig();

  SystemParams system;
  DriveWeighting weighting = DriveWeighting::normalized;
  Engine engine = Engine::analytic;
  int n_max = 5;
  int workers = 1;
  double target_n_out = 1e-3;
  std::string out_dir = "out";

  AxisSpec sweep_e1{-2.0, 2.0, 101};
  AxisSpec sweep_e2{-2.0, 2.0, 101};

  double track_ratio_max = 0.5;
  double track_ratio_step = 0.0125;

  AxisSpec delta_axis{-0.5, 3.5, 41};

  std::vector<double> dephasing_rates;  // processed in the given order

  double validate_mixing = 0.04;  // gamma2 / gamma1 in the comparison run
  int validate_resolution = 41;
  double validate_window = 2.0;

  ExploreOptions explore_options() const;
};

// Outcome of argument and config-file parsing. When parsing already settled
// the process outcome (help or version printed, malformed input rejected),
// exit_code is >= 0 and nothing should run. Otherwise `subcommand` names the
// experiment and `resolved` holds a re-parseable echo of the configuration,
// byte-stable under parse -> serialize -> parse.
struct ParsedRun {
  RunConfig config;
  std::string subcommand;
  std::string resolved;
  int exit_code = -1;
};

// Parse arguments (argv order, program name excluded) plus any --config file.
ParsedRun parse_cli(const std::vector<std::string>& args);

// Parse and execute. Returns 0 on success, 2 on configuration errors, 3 on
// numerical failures. Per-point failures inside a scan are recorded in the
// manifest instead of aborting the run.
int run_cli(const std::vector<std::string>& args);

}  // namespace dimer
