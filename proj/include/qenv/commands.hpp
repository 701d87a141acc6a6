#pragma once

#include <string>

namespace qenv {

// Outcome of one orchestration command. exit_code follows the process
// convention: 0 success, 1 usage error, 2 validation failure, 3 numerical
// failure. summary is human-readable, one fact per line, and is filled on
// failure too.
struct CommandResult {
  int exit_code = 0;
  std::string summary;
};

// Each command takes a JSON configuration object as text. Unknown keys are
// usage errors, so a config file is a complete record of a run.
//
// generate: {"task", "seed", "n_samples", "out", "t_min"?, "jobs"?,
//            "from"?, "n_impurities"?, "energy_halfwidth"?, "n_traj"?,
//            "grid_points"?, "t_max"?, "band_width"?, "band_dos"?,
//            "band_states"?, "band_mu"?}
//   Writes features.csv + labels.csv + manifest.json under "out". "from"
//   relabels an existing reconstruction dataset into its ensemble variant
//   instead of generating anything. Identical configs rerun byte-identically
//   for any "jobs" value.
CommandResult cmd_generate(const std::string& config_json);

// train: {"dataset", "seed", "out", "epochs"?, "batch_size"?,
//         "learning_rate"?}
//   Trains the task's stock network on the dataset directory and writes
//   out/model.json plus out/history.csv (per-epoch losses tagged with the
//   loss name, plus accuracies for classification tasks).
CommandResult cmd_train(const std::string& config_json);

// evaluate: {"model", "dataset", "out", "split"?}
//   split is "test" (default, re-derived from the model's split seed),
//   "train", "validation", or "all". Writes out/report.json and the
//   plot-data CSV for the task: scatter.csv (regression) or confusion.csv
//   (classification).
CommandResult cmd_evaluate(const std::string& config_json);

// validate: {"env", "dt"?}
//   Reads an environment JSON file and prints one line per validity
//   condition with its ratio and pass/fail. exit_code 2 when a hard
//   condition (beta_bandwidth, continuum) fails; soft failures only warn.
CommandResult cmd_validate(const std::string& config_json);

// oracle: {"seed"?, "n_envs"?, "n_states"?, "grid_points"?, "t_max"?}
//   Cross-checks the determinant visibility against the many-body trace on
//   random single-impurity environments small enough to brute-force
//   (n_states <= 11). exit_code 3 when the disagreement exceeds 1e-9.
CommandResult cmd_oracle(const std::string& config_json);

}  // namespace qenv
