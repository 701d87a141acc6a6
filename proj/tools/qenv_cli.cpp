#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <qenv.h>

namespace {

using nlohmann::json;

// ----- config plumbing -----

// Config file first, flags on top: every flag maps to one config key, and a
// flag given on the command line overrides the file.
json file_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open '" + path + "'");
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw CLI::ValidationError("--config", "'" + path + "' is not an object");
    return j;
  } catch (const json::parse_error& e) {
    throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
  }
}

// Summaries go to stdout (validation reports included); usage and numerical
// errors go to stderr.
int run(int (*command)(const char*, char**), const json& config) {
  char* summary = nullptr;
  const int code = command(config.dump().c_str(), &summary);
  if (summary != nullptr) {
    ((code == QENV_ERR_USAGE || code == QENV_ERR_NUMERICAL) ? std::cerr : std::cout)
        << summary << "\n";
    qenv_string_free(summary);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coherence-decay dataset generation and network training"};
  app.require_subcommand(1);
  int rc = 0;

  // ----- generate -----
  auto* gen = app.add_subcommand("generate", "sample environments and write a labeled dataset");
  std::string gen_config, gen_task, gen_out, gen_from;
  std::uint64_t gen_seed = 0;
  int gen_n = 0, gen_jobs = 0, gen_imps = 0, gen_traj = 0, gen_grid = 0;
  double gen_tmin = 0.0, gen_halfwidth = 0.0, gen_tmax = 0.0;
  gen->add_option("--config", gen_config, "JSON config file; flags override its keys");
  gen->add_option("--task", gen_task, "reconstruct | reconstruct_ensemble | classify | hybrid");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--n", gen_n, "number of samples");
  gen->add_option("--out", gen_out, "output dataset directory");
  gen->add_option("--jobs", gen_jobs, "worker threads (seed-deterministic)");
  gen->add_option("--t-min", gen_tmin, "classify window start");
  gen->add_option("--from", gen_from, "derive reconstruct_ensemble from this dataset");
  gen->add_option("--n-impurities", gen_imps, "impurities per environment");
  gen->add_option("--energy-halfwidth", gen_halfwidth, "level splitting range half-width");
  gen->add_option("--n-traj", gen_traj, "telegraph trajectories per classical impurity");
  gen->add_option("--grid-points", gen_grid, "time grid points");
  gen->add_option("--t-max", gen_tmax, "time grid end");
  gen->callback([&] {
    json config = file_config(gen_config);
    if (gen->count("--task")) config["task"] = gen_task;
    if (gen->count("--seed")) config["seed"] = gen_seed;
    if (gen->count("--n")) config["n_samples"] = gen_n;
    if (gen->count("--out")) config["out"] = gen_out;
    if (gen->count("--jobs")) config["jobs"] = gen_jobs;
    if (gen->count("--t-min")) config["t_min"] = gen_tmin;
    if (gen->count("--from")) config["from"] = gen_from;
    if (gen->count("--n-impurities")) config["n_impurities"] = gen_imps;
    if (gen->count("--energy-halfwidth")) config["energy_halfwidth"] = gen_halfwidth;
    if (gen->count("--n-traj")) config["n_traj"] = gen_traj;
    if (gen->count("--grid-points")) config["grid_points"] = gen_grid;
    if (gen->count("--t-max")) config["t_max"] = gen_tmax;
    rc = run(qenv_cmd_generate, config);
  });

  // ----- train -----
  auto* train = app.add_subcommand("train", "fit the task network on a dataset");
  std::string train_config, train_dataset, train_out;
  std::uint64_t train_seed = 0;
  int train_epochs = 0, train_batch = 0;
  double train_lr = 0.0;
  train->add_option("--config", train_config, "JSON config file; flags override its keys");
  train->add_option("--dataset", train_dataset, "dataset directory");
  train->add_option("--seed", train_seed, "split/init/shuffle seed");
  train->add_option("--out", train_out, "output directory for model.json + history.csv");
  train->add_option("--epochs", train_epochs, "override recipe epochs");
  train->add_option("--batch-size", train_batch, "override recipe batch size");
  train->add_option("--learning-rate", train_lr, "override recipe learning rate");
  train->callback([&] {
    json config = file_config(train_config);
    if (train->count("--dataset")) config["dataset"] = train_dataset;
    if (train->count("--seed")) config["seed"] = train_seed;
    if (train->count("--out")) config["out"] = train_out;
    if (train->count("--epochs")) config["epochs"] = train_epochs;
    if (train->count("--batch-size")) config["batch_size"] = train_batch;
    if (train->count("--learning-rate")) config["learning_rate"] = train_lr;
    rc = run(qenv_cmd_train, config);
  });

  // ----- evaluate -----
  auto* eval = app.add_subcommand("evaluate", "score a model and emit report + plot data");
  std::string eval_config, eval_model, eval_dataset, eval_out, eval_split;
  eval->add_option("--config", eval_config, "JSON config file; flags override its keys");
  eval->add_option("--model", eval_model, "model.json path");
  eval->add_option("--dataset", eval_dataset, "dataset directory");
  eval->add_option("--out", eval_out, "output directory for report + CSV");
  eval->add_option("--split", eval_split, "train | validation | test | all");
  eval->callback([&] {
    json config = file_config(eval_config);
    if (eval->count("--model")) config["model"] = eval_model;
    if (eval->count("--dataset")) config["dataset"] = eval_dataset;
    if (eval->count("--out")) config["out"] = eval_out;
    if (eval->count("--split")) config["split"] = eval_split;
    rc = run(qenv_cmd_evaluate, config);
  });

  // ----- validate -----
  auto* val = app.add_subcommand("validate", "check validity conditions for an environment file");
  std::string val_config, val_env;
  double val_dt = 0.0;
  val->add_option("--config", val_config, "JSON config file; flags override its keys");
  val->add_option("--env", val_env, "environment JSON file");
  val->add_option("--dt", val_dt, "trajectory step for the step-rate condition");
  val->callback([&] {
    json config = file_config(val_config);
    if (val->count("--env")) config["env"] = val_env;
    if (val->count("--dt")) config["dt"] = val_dt;
    rc = run(qenv_cmd_validate, config);
  });

  // ----- oracle -----
  auto* oracle = app.add_subcommand("oracle", "cross-check the two decay evaluators");
  std::string oracle_config;
  std::uint64_t oracle_seed = 0;
  int oracle_envs = 0, oracle_states = 0, oracle_grid = 0;
  double oracle_tmax = 0.0;
  oracle->add_option("--config", oracle_config, "JSON config file; flags override its keys");
  oracle->add_option("--seed", oracle_seed, "environment sampling seed");
  oracle->add_option("--n-envs", oracle_envs, "environments to check");
  oracle->add_option("--n-states", oracle_states, "band states (<= 11)");
  oracle->add_option("--grid-points", oracle_grid, "time grid points");
  oracle->add_option("--t-max", oracle_tmax, "time grid end");
  oracle->callback([&] {
    json config = file_config(oracle_config);
    if (oracle->count("--seed")) config["seed"] = oracle_seed;
    if (oracle->count("--n-envs")) config["n_envs"] = oracle_envs;
    if (oracle->count("--n-states")) config["n_states"] = oracle_states;
    if (oracle->count("--grid-points")) config["grid_points"] = oracle_grid;
    if (oracle->count("--t-max")) config["t_max"] = oracle_tmax;
    rc = run(qenv_cmd_oracle, config);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  return rc;
}
