#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <qenv/environment.hpp>
#include <qenv/ml.hpp>
#include <qenv/numerics.hpp>

namespace qenv {

// ----- dataset types -----

enum class TaskTag { Reconstruct, ReconstructEnsemble, Classify, Hybrid };

std::string task_tag_name(TaskTag tag);
TaskTag task_tag_from_name(const std::string& name);

struct SampleMeta {
  EnvironmentSpec env;     // as sampled, impurities in draw order
  std::uint64_t seed = 0;  // per-sample seed all of its randomness derives from
};

// Generation knobs. Defaults reproduce the production setup; tests shrink the
// band and trajectory count to stay fast. Classify draws pairs, so its
// n_impurities applies to both members.
struct GenOptions {
  int n_impurities = 5;
  double energy_halfwidth = 5.0;
  int n_traj = 500;  // Monte Carlo trajectories per classical impurity
  BandSpec band{};
  int grid_points = 500;
  double t_max = 25.0;
};

GenOptions hybrid_defaults();  // 8 impurities on [-10, 10]

struct LabeledDataset {
  RealMatrix features;  // n x p, |D(t)| curves (classify: resampled window)
  RealMatrix labels;    // n x q, [0,1]-scaled targets or one-hot classes
  std::vector<SampleMeta> metadata;
  TaskTag task_tag = TaskTag::Reconstruct;

  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;
  std::vector<std::string> class_names;  // classification tags only

  bool has_label_scaler = false;  // regression tags: map from raw label units
  MinMaxScaler label_scaler;

  std::uint64_t seed = 0;
  GenOptions options;
  double window_t_min = 0.0;  // classify only; window is [t_min, 5]

  // Condition-name -> number of samples whose trace carried that warning.
  std::vector<std::pair<std::string, int>> warning_counts;
};

// ----- label rules -----

// Impurity indices sorted by ascending |epsilon0|, ties by original index.
std::vector<int> impurity_order(const EnvironmentSpec& env);

// (e, t, w) per impurity at t_exp = 1, impurity-major, for the first
// n_kept impurities in impurity_order. Raw units (no rescaling).
RealVector reconstruction_label(const EnvironmentSpec& env, int n_kept = 3);

// (sum e, sum t, sum w) over all impurities. Raw units.
RealVector ensemble_label(const EnvironmentSpec& env);

// Number of quantum impurities among the 5 smallest |epsilon0|.
int hybrid_class(const EnvironmentSpec& env);

// ----- generators -----

// Five-impurity quantum environments; features |D(t)| on the full grid,
// labels (e,t,w) of the 3 impurities closest to the band center, then
// MinMax-rescaled per column.
LabeledDataset gen_reconstruction(std::uint64_t seed, int n_samples);
LabeledDataset gen_reconstruction(std::uint64_t seed, int n_samples, const GenOptions& options);

// Same environments and features; labels are the rescaled ensemble sums.
LabeledDataset gen_ensemble(std::uint64_t seed, int n_samples);
LabeledDataset gen_ensemble(std::uint64_t seed, int n_samples, const GenOptions& options);

// Relabels an existing reconstruction dataset without recomputing any curve.
LabeledDataset derive_ensemble(const LabeledDataset& reconstruction);

// Quantum/classical pairs with identical (epsilon0, T, v); rows alternate
// quantum, classical. Features are |D| resampled onto 100 equidistant points
// of [t_min, 5]. n_samples must be even; requires 0 <= t_min < 5.
LabeledDataset gen_classification(std::uint64_t seed, int n_samples, double t_min);
LabeledDataset gen_classification(std::uint64_t seed, int n_samples, double t_min,
                                  const GenOptions& options);

// Mixed environments (default 8 impurities on [-10, 10]); visibility is the
// product of the quantum-subset and classical-subset decays; one-hot label is
// the quantum count among the top-5 impurities.
LabeledDataset gen_hybrid(std::uint64_t seed, int n_samples);
LabeledDataset gen_hybrid(std::uint64_t seed, int n_samples, const GenOptions& options);

// ----- parallel / incremental generation -----

// Rows first..first+count-1 of the dataset that gen_* would produce, with
// labels still in raw units. Per-sample seeds make the result independent of
// how the full range is partitioned; concatenating consecutive batches and
// passing them to assemble_dataset reproduces the one-shot generator bitwise.
struct RawBatch {
  RealMatrix features;
  RealMatrix labels;
  std::vector<SampleMeta> metadata;
  std::vector<std::string> warning_names;  // one entry per (sample, condition)
};

RawBatch gen_raw_range(TaskTag tag, std::uint64_t seed, int first, int count, double t_min,
                       const GenOptions& options);

LabeledDataset assemble_dataset(TaskTag tag, std::uint64_t seed, std::vector<RawBatch> batches,
                                double t_min, const GenOptions& options);

// ----- persistence -----

// dir/features.csv + dir/labels.csv + dir/manifest.json. The manifest holds
// the task tag, seeds, generation options, label scaler, and every sampled
// environment, so load_dataset rebuilds the dataset bitwise.
void save_dataset(const std::filesystem::path& dir, const LabeledDataset& dataset);
LabeledDataset load_dataset(const std::filesystem::path& dir);

// ----- task recipes (architecture and training defaults per task) -----

struct TaskRecipe {
  std::vector<int> widths;
  std::vector<Activation> activations;
  LossKind loss = LossKind::MSE;
  double alpha = 0.2;
  int epochs = 100;
  int pca_components = 64;
  int batch_size = 32;
  double learning_rate = 1e-3;
};

TaskRecipe task_recipe(TaskTag tag);
Network make_task_network(TaskTag tag, std::uint64_t seed);

// ----- training orchestration -----

// Splits 85/10/5 from `seed`, fits PCA and the feature scaler on the training
// rows only, then trains the recipe network. The returned bundle carries the
// whole inference pipeline; `split` locates the held-out rows.
struct TaskTrainResult {
  ModelBundle model;
  std::vector<EpochRecord> history;
  SplitIndices split;
};

TaskTrainResult train_task(const LabeledDataset& dataset, std::uint64_t seed);
TaskTrainResult train_task(const LabeledDataset& dataset, std::uint64_t seed,
                           const TaskRecipe& recipe);

// Rows of `dataset` selected by `rows`, metadata included.
LabeledDataset dataset_rows(const LabeledDataset& dataset, const std::vector<int>& rows);

// ----- evaluation -----

struct EvaluationReport {
  // Regression: per-output MAE and predicted-vs-actual least-squares fits in
  // scaled units, plus one pooled fit across all outputs.
  RealVector mae;
  RealVector fit_slope;
  RealVector fit_intercept;
  double pooled_slope = 0.0;
  double pooled_intercept = 0.0;

  // Reconstruct only: log-log slope of raw-unit relative error vs the
  // coupling measure eta, one entry per parameter family (e, t, w).
  RealVector eta_log_slope;

  // Classification: argmax accuracy, column-stochastic confusion matrix
  // (columns = actual class), and the mean per-column mass within one class
  // of the diagonal.
  double accuracy = -1.0;
  RealMatrix confusion;
  double within_one_mass = -1.0;
};

EvaluationReport evaluate_regression(const ModelBundle& model, const LabeledDataset& test_set);
EvaluationReport evaluate_classification(const ModelBundle& model, const LabeledDataset& test_set);

// Scatter rows for external plotting: actual, predicted per output column.
RealMatrix prediction_scatter(const ModelBundle& model, const LabeledDataset& test_set);

// ----- robustness -----

struct RobustnessPoint {
  int n_impurities = 0;
  double mean_accuracy = 0.0;
  double sd_accuracy = 0.0;
  double mean_loss = 0.0;
  double sd_loss = 0.0;
};

// Accuracy/loss statistics of one impurity count over pre-generated sets.
RobustnessPoint robustness_from_sets(const ModelBundle& model,
                                     const std::vector<LabeledDataset>& sets);

// Generates fresh test sets at each impurity count (classify: {4,5,6} around
// a 5-impurity training count; hybrid: {6,8,10} around 8) for every seed and
// evaluates the model on each.
std::vector<RobustnessPoint> robustness_eval(const ModelBundle& model, TaskTag tag,
                                             const std::vector<std::uint64_t>& seeds,
                                             int n_samples_per_set, double t_min,
                                             const GenOptions& base_options);

// ----- sampled-distribution statistics -----

// Mean weight ratios e_4/sum(e) and e_5/sum(e) (and their squared-weight
// variants) over sampled five-impurity environments.
struct NeglectedWeightStats {
  double mean_ratio4 = 0.0;
  double mean_ratio5 = 0.0;
  double mean_sq_ratio4 = 0.0;
  double mean_sq_ratio5 = 0.0;
};

NeglectedWeightStats neglected_weight_stats(std::uint64_t seed, int n_envs);

}  // namespace qenv
