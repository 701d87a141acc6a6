#include <qenv/commands.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "qenv/environment.hpp"
#include "qenv/io.hpp"
#include "qenv/quantum.hpp"
#include "qenv/rng.hpp"
#include "qenv/tasks.hpp"

namespace qenv {

namespace {

using nlohmann::json;

// ----- config plumbing -----

json parse_config(const std::string& text, const char* cmd) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string(cmd) + ": config is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument(std::string(cmd) + ": config must be an object");
  return j;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const char* cmd) {
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return item.key() == k; })) {
      throw std::invalid_argument(std::string(cmd) + ": unknown config key '" + item.key() + "'");
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const char* cmd) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string(cmd) + ": config key '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_required(const json& j, const char* key, const char* cmd) {
  if (!j.contains(key)) {
    throw std::invalid_argument(std::string(cmd) + ": missing config key '" + key + "'");
  }
  return get_or<T>(j, key, T{}, cmd);
}

// Missing inputs are usage errors, not runtime failures.
std::string existing_path(const json& j, const char* key, const char* cmd) {
  const auto path = get_required<std::string>(j, key, cmd);
  if (!std::filesystem::exists(path)) {
    throw std::invalid_argument(std::string(cmd) + ": path does not exist: " + path);
  }
  return path;
}

// Exception-to-exit-code boundary shared by every command.
CommandResult run_guarded(const std::function<CommandResult()>& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    return {1, std::string("error: ") + e.what()};
  } catch (const std::filesystem::filesystem_error& e) {
    return {1, std::string("error: ") + e.what()};
  } catch (const json::exception& e) {
    return {1, std::string("error: ") + e.what()};
  } catch (const std::exception& e) {
    return {3, std::string("error: ") + e.what()};
  }
}

std::string describe_warnings(const std::vector<std::pair<std::string, int>>& counts) {
  if (counts.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i > 0) out += ", ";
    out += counts[i].first + " x" + std::to_string(counts[i].second);
  }
  return out;
}

// ----- generate -----

GenOptions options_from_config(const json& j, TaskTag tag, const char* cmd) {
  GenOptions options = (tag == TaskTag::Hybrid) ? hybrid_defaults() : GenOptions{};
  options.n_impurities = get_or(j, "n_impurities", options.n_impurities, cmd);
  options.energy_halfwidth = get_or(j, "energy_halfwidth", options.energy_halfwidth, cmd);
  options.n_traj = get_or(j, "n_traj", options.n_traj, cmd);
  options.grid_points = get_or(j, "grid_points", options.grid_points, cmd);
  options.t_max = get_or(j, "t_max", options.t_max, cmd);
  options.band.width_W = get_or(j, "band_width", options.band.width_W, cmd);
  options.band.dos_psi = get_or(j, "band_dos", options.band.dos_psi, cmd);
  options.band.n_states = get_or(j, "band_states", options.band.n_states, cmd);
  options.band.chem_potential = get_or(j, "band_mu", options.band.chem_potential, cmd);
  return options;
}

// Contiguous per-worker ranges; classify stays pair-aligned. The per-sample
// seeding makes the assembly independent of this partition.
std::vector<std::pair<int, int>> partition_rows(int n, int jobs, bool pairs) {
  const int unit = pairs ? 2 : 1;
  const int items = n / unit;
  std::vector<std::pair<int, int>> ranges;
  int done = 0;
  for (int w = 0; w < jobs; ++w) {
    const int count = items / jobs + (w < items % jobs ? 1 : 0);
    if (count > 0) ranges.emplace_back(done * unit, count * unit);
    done += count;
  }
  return ranges;
}

LabeledDataset generate_parallel(TaskTag tag, std::uint64_t seed, int n, double t_min,
                                 const GenOptions& options, int jobs) {
  const auto ranges = partition_rows(n, jobs, tag == TaskTag::Classify);
  std::vector<RawBatch> batches(ranges.size());
  std::vector<std::exception_ptr> errors(ranges.size());
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < ranges.size(); ++w) {
    workers.emplace_back([&, w] {
      try {
        batches[w] = gen_raw_range(tag, seed, ranges[w].first, ranges[w].second, t_min, options);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : workers) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return assemble_dataset(tag, seed, std::move(batches), t_min, options);
}

CommandResult generate_body(const std::string& config_json) {
  const char* cmd = "cmd_generate";
  const json j = parse_config(config_json, cmd);

  if (j.contains("from")) {
    reject_unknown_keys(j, {"from", "out", "task"}, cmd);
    const auto task = get_or<std::string>(j, "task", "reconstruct_ensemble", cmd);
    if (task != "reconstruct_ensemble") {
      throw std::invalid_argument("cmd_generate: 'from' only derives reconstruct_ensemble");
    }
    const LabeledDataset source = load_dataset(existing_path(j, "from", cmd));
    const LabeledDataset dataset = derive_ensemble(source);
    const std::string out = get_required<std::string>(j, "out", cmd);
    save_dataset(out, dataset);
    std::ostringstream summary;
    summary << "task: " << task_tag_name(dataset.task_tag) << "\n"
            << "samples: " << dataset.features.rows() << "\n"
            << "derived from: " << get_required<std::string>(j, "from", cmd) << "\n"
            << "wrote: " << out;
    return {0, summary.str()};
  }

  reject_unknown_keys(j,
                      {"task", "seed", "n_samples", "out", "t_min", "jobs", "n_impurities",
                       "energy_halfwidth", "n_traj", "grid_points", "t_max", "band_width",
                       "band_dos", "band_states", "band_mu"},
                      cmd);
  const TaskTag tag = task_tag_from_name(get_required<std::string>(j, "task", cmd));
  const auto seed = get_required<std::uint64_t>(j, "seed", cmd);
  const int n = get_required<int>(j, "n_samples", cmd);
  if (n <= 0) throw std::invalid_argument("cmd_generate: empty dataset (n_samples must be >= 1)");
  const std::string out = get_required<std::string>(j, "out", cmd);
  const double t_min = get_or(j, "t_min", 0.0, cmd);
  if (j.contains("t_min") && tag != TaskTag::Classify) {
    throw std::invalid_argument("cmd_generate: t_min only applies to classify");
  }
  const int jobs = get_or(j, "jobs", 1, cmd);
  if (jobs < 1) throw std::invalid_argument("cmd_generate: jobs must be >= 1");
  const GenOptions options = options_from_config(j, tag, cmd);

  const LabeledDataset dataset = generate_parallel(tag, seed, n, t_min, options, jobs);
  save_dataset(out, dataset);

  std::ostringstream summary;
  summary << "task: " << task_tag_name(tag) << "\n"
          << "samples: " << dataset.features.rows() << "\n"
          << "mean final |D|: "
          << format_double(dataset.features.col(dataset.features.cols() - 1).mean()) << "\n"
          << "warnings: " << describe_warnings(dataset.warning_counts) << "\n"
          << "wrote: " << out;
  return {0, summary.str()};
}

// ----- train -----

CommandResult train_body(const std::string& config_json) {
  const char* cmd = "cmd_train";
  const json j = parse_config(config_json, cmd);
  reject_unknown_keys(j, {"dataset", "seed", "out", "epochs", "batch_size", "learning_rate"},
                      cmd);
  const LabeledDataset dataset = load_dataset(existing_path(j, "dataset", cmd));
  const auto seed = get_required<std::uint64_t>(j, "seed", cmd);
  const std::string out = get_required<std::string>(j, "out", cmd);

  TaskRecipe recipe = task_recipe(dataset.task_tag);
  recipe.epochs = get_or(j, "epochs", recipe.epochs, cmd);
  recipe.batch_size = get_or(j, "batch_size", recipe.batch_size, cmd);
  recipe.learning_rate = get_or(j, "learning_rate", recipe.learning_rate, cmd);
  if (recipe.epochs < 0 || recipe.batch_size < 1 || recipe.learning_rate <= 0.0) {
    throw std::invalid_argument("cmd_train: invalid training overrides");
  }

  const TaskTrainResult result = train_task(dataset, seed, recipe);
  const std::filesystem::path dir(out);
  write_text_file(dir / "model.json", model_to_json(result.model));

  RealMatrix history(static_cast<Eigen::Index>(result.history.size()), 5);
  for (Eigen::Index e = 0; e < history.rows(); ++e) {
    const EpochRecord& rec = result.history[static_cast<std::size_t>(e)];
    history(e, 0) = static_cast<double>(e + 1);
    history(e, 1) = rec.train_loss;
    history(e, 2) = rec.val_loss;
    history(e, 3) = rec.train_accuracy;
    history(e, 4) = rec.val_accuracy;
  }
  const std::string tag = result.model.loss_name;
  write_csv(dir / "history.csv",
            {"epoch", "train_loss (" + tag + ")", "val_loss (" + tag + ")", "train_accuracy",
             "val_accuracy"},
            history);

  std::ostringstream summary;
  summary << "task: " << result.model.task_name << "\n"
          << "loss: " << tag << "\n"
          << "epochs: " << result.history.size() << "\n";
  if (!result.history.empty()) {
    const EpochRecord& last = result.history.back();
    summary << "final train loss: " << format_double(last.train_loss) << "\n"
            << "final val loss: " << format_double(last.val_loss) << "\n";
    if (dataset.task_tag == TaskTag::Classify || dataset.task_tag == TaskTag::Hybrid) {
      summary << "final val accuracy: " << format_double(last.val_accuracy) << "\n";
    }
  }
  summary << "wrote: " << (dir / "model.json").string() << ", "
          << (dir / "history.csv").string();
  return {0, summary.str()};
}

// ----- evaluate -----

std::vector<int> split_rows(const std::string& split, int n, std::uint64_t split_seed,
                            const char* cmd) {
  if (split == "all") {
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
    return rows;
  }
  const SplitIndices parts = split_dataset(n, 0.85, 0.10, 0.05, split_seed);
  if (split == "train") return parts.train;
  if (split == "validation") return parts.validation;
  if (split == "test") return parts.test;
  throw std::invalid_argument(std::string(cmd) +
                              ": split must be train, validation, test, or all");
}

CommandResult evaluate_body(const std::string& config_json) {
  const char* cmd = "cmd_evaluate";
  const json j = parse_config(config_json, cmd);
  reject_unknown_keys(j, {"model", "dataset", "out", "split"}, cmd);
  const ModelBundle model =
      model_from_json(read_text_file(existing_path(j, "model", cmd)));
  const LabeledDataset dataset = load_dataset(existing_path(j, "dataset", cmd));
  const std::string out = get_required<std::string>(j, "out", cmd);
  const auto split = get_or<std::string>(j, "split", "test", cmd);

  if (model.task_name != task_tag_name(dataset.task_tag)) {
    throw std::invalid_argument("cmd_evaluate: model trained for '" + model.task_name +
                                "' but the dataset is '" + task_tag_name(dataset.task_tag) + "'");
  }
  const std::vector<int> rows =
      split_rows(split, static_cast<int>(dataset.features.rows()), model.split_seed, cmd);
  if (rows.empty()) throw std::invalid_argument("cmd_evaluate: selected split is empty");
  const LabeledDataset subset = dataset_rows(dataset, rows);

  const bool classification =
      dataset.task_tag == TaskTag::Classify || dataset.task_tag == TaskTag::Hybrid;
  const std::filesystem::path dir(out);
  json report;
  report["task"] = model.task_name;
  report["split"] = split;
  report["rows"] = rows.size();
  std::ostringstream summary;
  summary << "task: " << model.task_name << "\n"
          << "split: " << split << " (" << rows.size() << " rows)\n";

  if (classification) {
    const EvaluationReport rep = evaluate_classification(model, subset);
    report["accuracy"] = rep.accuracy;
    report["within_one_mass"] = rep.within_one_mass;
    std::vector<std::vector<double>> confusion;
    for (Eigen::Index r = 0; r < rep.confusion.rows(); ++r) {
      confusion.emplace_back(rep.confusion.row(r).begin(), rep.confusion.row(r).end());
    }
    report["confusion"] = confusion;
    const std::vector<std::string> names =
        dataset.class_names.empty() ? dataset.label_names : dataset.class_names;
    write_csv(dir / "confusion.csv", names, rep.confusion);
    summary << "accuracy: " << format_double(rep.accuracy) << "\n"
            << "within one class of diagonal: " << format_double(rep.within_one_mass) << "\n";
    summary << "wrote: " << (dir / "report.json").string() << ", "
            << (dir / "confusion.csv").string();
  } else {
    const EvaluationReport rep = evaluate_regression(model, subset);
    json mae, slope, intercept;
    for (Eigen::Index k = 0; k < rep.mae.size(); ++k) {
      const std::string& name = dataset.label_names[static_cast<std::size_t>(k)];
      mae[name] = rep.mae[k];
      slope[name] = rep.fit_slope[k];
      intercept[name] = rep.fit_intercept[k];
    }
    report["mae"] = mae;
    report["fit_slope"] = slope;
    report["fit_intercept"] = intercept;
    report["pooled_slope"] = rep.pooled_slope;
    report["pooled_intercept"] = rep.pooled_intercept;
    if (rep.eta_log_slope.size() == 3) {
      report["eta_log_slope"] = {{"e", rep.eta_log_slope[0]},
                                 {"t", rep.eta_log_slope[1]},
                                 {"w", rep.eta_log_slope[2]}};
    }
    std::vector<std::string> header;
    for (const std::string& name : dataset.label_names) {
      header.push_back("actual_" + name);
      header.push_back("predicted_" + name);
    }
    write_csv(dir / "scatter.csv", header, prediction_scatter(model, subset));
    summary << "mean MAE: " << format_double(rep.mae.mean()) << "\n"
            << "pooled fit slope: " << format_double(rep.pooled_slope) << "\n";
    summary << "wrote: " << (dir / "report.json").string() << ", "
            << (dir / "scatter.csv").string();
  }
  write_text_file(dir / "report.json", report.dump(2) + "\n");
  return {0, summary.str()};
}

// ----- validate -----

CommandResult validate_body(const std::string& config_json) {
  const char* cmd = "cmd_validate";
  const json j = parse_config(config_json, cmd);
  reject_unknown_keys(j, {"env", "dt"}, cmd);
  const EnvironmentSpec env =
      env_from_json(read_text_file(existing_path(j, "env", cmd)));
  const double dt = get_or(j, "dt", 0.0, cmd);
  if (dt < 0.0) throw std::invalid_argument("cmd_validate: dt must be >= 0");

  const std::vector<ConditionReport> reports = validate_environment(env, dt);
  bool hard_fail = false;
  std::ostringstream summary;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const ConditionReport& r = reports[i];
    if (i > 0) summary << "\n";
    summary << r.name << " ratio=" << format_double(r.ratio) << " "
            << (r.pass ? "pass" : "FAIL");
    if (!r.pass && (r.name == "beta_bandwidth" || r.name == "continuum")) hard_fail = true;
  }
  return {hard_fail ? 2 : 0, summary.str()};
}

// ----- oracle -----

CommandResult oracle_body(const std::string& config_json) {
  const char* cmd = "cmd_oracle";
  const json j = parse_config(config_json, cmd);
  reject_unknown_keys(j, {"seed", "n_envs", "n_states", "grid_points", "t_max"}, cmd);
  const auto seed = get_or<std::uint64_t>(j, "seed", 1, cmd);
  const int n_envs = get_or(j, "n_envs", 20, cmd);
  const int n_states = get_or(j, "n_states", 4, cmd);
  const int grid_points = get_or(j, "grid_points", 50, cmd);
  const double t_max = get_or(j, "t_max", 5.0, cmd);
  if (n_envs < 1) throw std::invalid_argument("cmd_oracle: n_envs must be >= 1");
  if (n_states < 1 || n_states > 11) {
    throw std::invalid_argument(
        "cmd_oracle: n_states must lie in [1, 11] (many-body trace is exponential in it)");
  }
  if (grid_points < 2 || t_max <= 0.0) {
    throw std::invalid_argument("cmd_oracle: need grid_points >= 2 and t_max > 0");
  }

  const auto deviation = [&](EnvironmentSpec env) {
    env.band = BandSpec{static_cast<double>(n_states), 1.0, n_states, 0.0};
    env.time_grid = make_time_grid(grid_points, t_max);
    const VisibilityTrace det = visibility_quantum(env);
    const VisibilityTrace brute = visibility_bruteforce(env);
    return (det.values - brute.values).cwiseAbs().maxCoeff();
  };

  double worst = 0.0;
  for (int k = 0; k < n_envs; ++k) {
    worst = std::max(
        worst, deviation(sample_environment(mix_seed(seed, static_cast<std::uint64_t>(k)), 1,
                                            5.0, KindPolicy::AllQuantum)));
  }

  // Decoupled impurity: both routes must return exactly unit visibility.
  EnvironmentSpec idle = sample_environment(mix_seed(seed, 0), 1, 5.0, KindPolicy::AllQuantum);
  idle.impurities[0].coupling_v = 0.0;
  idle.band = BandSpec{static_cast<double>(n_states), 1.0, n_states, 0.0};
  idle.time_grid = make_time_grid(grid_points, t_max);
  const VisibilityTrace idle_trace = visibility_quantum(idle);
  const double idle_dev = (idle_trace.values.array() - 1.0).abs().maxCoeff();

  const bool pass = worst < 1e-9 && idle_dev < 1e-9;
  std::ostringstream summary;
  summary << "environments: " << n_envs << " (band states: " << n_states << ")\n"
          << "max |D_determinant - D_trace|: " << format_double(worst) << "\n"
          << "zero-coupling deviation from 1: " << format_double(idle_dev) << "\n"
          << (pass ? "pass (tolerance 1e-9)" : "FAIL (tolerance 1e-9)");
  return {pass ? 0 : 3, summary.str()};
}

}  // namespace

CommandResult cmd_generate(const std::string& config_json) {
  return run_guarded([&] { return generate_body(config_json); });
}

CommandResult cmd_train(const std::string& config_json) {
  return run_guarded([&] { return train_body(config_json); });
}

CommandResult cmd_evaluate(const std::string& config_json) {
  return run_guarded([&] { return evaluate_body(config_json); });
}

CommandResult cmd_validate(const std::string& config_json) {
  return run_guarded([&] { return validate_body(config_json); });
}

CommandResult cmd_oracle(const std::string& config_json) {
  return run_guarded([&] { return oracle_body(config_json); });
}

}  // namespace qenv
