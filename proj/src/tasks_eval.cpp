#include <qenv/tasks.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qenv/rng.hpp"

namespace qenv {

// ----- task recipes -----

TaskRecipe task_recipe(TaskTag tag) {
  switch (tag) {
    case TaskTag::Reconstruct:
      return {{64, 128, 64, 9},
              {Activation::ReLU, Activation::ReLU, Activation::Identity},
              LossKind::MSE,
              0.2,
              200,
              64};
    case TaskTag::ReconstructEnsemble:
      return {{16, 32, 16, 3},
              {Activation::ReLU, Activation::ReLU, Activation::Identity},
              LossKind::MSE,
              0.2,
              100,
              16};
    case TaskTag::Classify:
      return {{48, 32, 16, 2},
              {Activation::Sigmoid, Activation::Sigmoid, Activation::Softmax},
              LossKind::CrossEntropy,
              0.2,
              100,
              48};
    case TaskTag::Hybrid:
      return {{64, 32, 16, 6},
              {Activation::Sigmoid, Activation::Sigmoid, Activation::Softmax},
              LossKind::Hybrid,
              0.2,
              100,
              64};
  }
  throw std::invalid_argument("task_recipe: unknown tag");
}

Network make_task_network(TaskTag tag, std::uint64_t seed) {
  const TaskRecipe recipe = task_recipe(tag);
  return make_network(recipe.widths, recipe.activations, seed);
}

// ----- training orchestration -----

LabeledDataset dataset_rows(const LabeledDataset& dataset, const std::vector<int>& rows) {
  LabeledDataset out = dataset;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), dataset.features.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()), dataset.labels.cols());
  out.metadata.clear();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    if (r < 0 || r >= dataset.features.rows()) {
      throw std::invalid_argument("dataset_rows: row index out of range");
    }
    out.features.row(static_cast<Eigen::Index>(i)) = dataset.features.row(r);
    out.labels.row(static_cast<Eigen::Index>(i)) = dataset.labels.row(r);
    if (!dataset.metadata.empty()) {
      out.metadata.push_back(dataset.metadata[static_cast<std::size_t>(r)]);
    }
  }
  return out;
}

TaskTrainResult train_task(const LabeledDataset& dataset, std::uint64_t seed,
                           const TaskRecipe& recipe) {
  const auto n = static_cast<int>(dataset.features.rows());
  if (n < 2) throw std::invalid_argument("train_task: need at least two samples");
  if (recipe.widths.empty() || recipe.widths.front() != recipe.pca_components) {
    throw std::invalid_argument("train_task: recipe input width must equal the PCA size");
  }
  if (static_cast<Eigen::Index>(recipe.widths.back()) != dataset.labels.cols()) {
    throw std::invalid_argument("train_task: recipe output width must match the labels");
  }

  TaskTrainResult result;
  result.split = split_dataset(n, 0.85, 0.10, 0.05, seed);

  RealMatrix x_fit(static_cast<Eigen::Index>(result.split.train.size()), dataset.features.cols());
  RealMatrix y_train(x_fit.rows(), dataset.labels.cols());
  for (std::size_t i = 0; i < result.split.train.size(); ++i) {
    x_fit.row(static_cast<Eigen::Index>(i)) = dataset.features.row(result.split.train[i]);
    y_train.row(static_cast<Eigen::Index>(i)) = dataset.labels.row(result.split.train[i]);
  }

  ModelBundle& model = result.model;
  model.task_name = task_tag_name(dataset.task_tag);
  model.loss_name = loss_tag(recipe.loss, recipe.alpha);
  model.split_seed = seed;
  model.train_seed = mix_seed(seed, 2);
  model.pca = pca_fit(x_fit, recipe.pca_components);
  model.feature_scaler = minmax_fit(pca_transform(model.pca, x_fit));
  model.net = make_network(recipe.widths, recipe.activations, mix_seed(seed, 1));

  const RealMatrix x_train = preprocess_features(model, x_fit);
  RealMatrix x_val(static_cast<Eigen::Index>(result.split.validation.size()),
                   dataset.features.cols());
  RealMatrix y_val(x_val.rows(), dataset.labels.cols());
  for (std::size_t i = 0; i < result.split.validation.size(); ++i) {
    x_val.row(static_cast<Eigen::Index>(i)) = dataset.features.row(result.split.validation[i]);
    y_val.row(static_cast<Eigen::Index>(i)) = dataset.labels.row(result.split.validation[i]);
  }
  const RealMatrix x_val_t = x_val.rows() > 0 ? preprocess_features(model, x_val) : RealMatrix(0, recipe.pca_components);

  TrainConfig config;
  config.epochs = recipe.epochs;
  config.batch_size = recipe.batch_size;
  config.loss = recipe.loss;
  config.alpha = recipe.alpha;
  config.seed = model.train_seed;
  config.adam.lr = recipe.learning_rate;
  result.history = train_network(model.net, x_train, y_train, x_val_t, y_val, config);
  return result;
}

TaskTrainResult train_task(const LabeledDataset& dataset, std::uint64_t seed) {
  return train_task(dataset, seed, task_recipe(dataset.task_tag));
}

// ----- evaluation -----

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(const RealVector& x, const RealVector& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_line: need two points");
  }
  const double mx = x.mean(), my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  if (sxx == 0.0) return {0.0, my};
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  return {sxy / sxx, my - sxy / sxx * mx};
}

RealMatrix predict(const ModelBundle& model, const LabeledDataset& test_set) {
  if (test_set.features.rows() == 0) {
    throw std::invalid_argument("evaluate: empty test set");
  }
  return forward(model.net, preprocess_features(model, test_set.features));
}

int argmax_row(const RealMatrix& m, Eigen::Index i) {
  int best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(i, j) > m(i, best)) best = static_cast<int>(j);
  }
  return best;
}

}  // namespace

EvaluationReport evaluate_regression(const ModelBundle& model, const LabeledDataset& test_set) {
  if (test_set.task_tag != TaskTag::Reconstruct &&
      test_set.task_tag != TaskTag::ReconstructEnsemble) {
    throw std::invalid_argument("evaluate_regression: not a regression dataset");
  }
  const RealMatrix pred = predict(model, test_set);
  const RealMatrix& actual = test_set.labels;
  if (pred.cols() != actual.cols()) {
    throw std::invalid_argument("evaluate_regression: output width mismatch");
  }
  const Eigen::Index q = actual.cols();

  EvaluationReport report;
  report.mae = (pred - actual).cwiseAbs().colwise().mean();
  report.fit_slope.resize(q);
  report.fit_intercept.resize(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const LineFit fit = fit_line(actual.col(j), pred.col(j));
    report.fit_slope[j] = fit.slope;
    report.fit_intercept[j] = fit.intercept;
  }
  {
    RealVector all_actual(actual.size()), all_pred(pred.size());
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < q; ++j) {
      all_actual.segment(k, actual.rows()) = actual.col(j);
      all_pred.segment(k, pred.rows()) = pred.col(j);
      k += actual.rows();
    }
    const LineFit fit = fit_line(all_actual, all_pred);
    report.pooled_slope = fit.slope;
    report.pooled_intercept = fit.intercept;
  }

  // Relative error vs coupling measure, in raw label units; one log-log fit
  // per parameter family. Needs per-sample environments and the label scaler.
  if (test_set.task_tag == TaskTag::Reconstruct && !test_set.metadata.empty() &&
      test_set.has_label_scaler && q == 9) {
    const RealMatrix raw_actual = minmax_inverse(test_set.label_scaler, actual);
    const RealMatrix raw_pred = minmax_inverse(test_set.label_scaler, pred);
    report.eta_log_slope.resize(3);
    for (int family = 0; family < 3; ++family) {
      std::vector<double> lx, ly;
      for (Eigen::Index i = 0; i < actual.rows(); ++i) {
        const EnvironmentSpec& env = test_set.metadata[static_cast<std::size_t>(i)].env;
        const std::vector<int> order = impurity_order(env);
        for (int k = 0; k < 3; ++k) {
          const Impurity& imp = env.impurities[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
          const double gamma = decay_rate(imp.tunneling_T, env.band.dos_psi);
          const double eta = coupling_measure(imp.coupling_v, gamma, env.beta, imp.epsilon0);
          const Eigen::Index col = 3 * k + family;
          const double denom = std::abs(raw_actual(i, col));
          if (eta <= 0.0 || denom < 1e-12) continue;
          const double rel = std::abs(raw_pred(i, col) - raw_actual(i, col)) / denom;
          if (rel < 1e-300) continue;
          lx.push_back(std::log(eta));
          ly.push_back(std::log(rel));
        }
      }
      const auto m = static_cast<Eigen::Index>(lx.size());
      if (m < 2) throw std::runtime_error("evaluate_regression: too few points for the eta fit");
      report.eta_log_slope[family] =
          fit_line(Eigen::Map<const RealVector>(lx.data(), m),
                   Eigen::Map<const RealVector>(ly.data(), m))
              .slope;
    }
  }
  return report;
}

EvaluationReport evaluate_classification(const ModelBundle& model, const LabeledDataset& test_set) {
  if (test_set.task_tag != TaskTag::Classify && test_set.task_tag != TaskTag::Hybrid) {
    throw std::invalid_argument("evaluate_classification: not a classification dataset");
  }
  const RealMatrix pred = predict(model, test_set);
  const RealMatrix& actual = test_set.labels;
  if (pred.cols() != actual.cols()) {
    throw std::invalid_argument("evaluate_classification: class count mismatch");
  }
  const Eigen::Index k = actual.cols();

  EvaluationReport report;
  report.accuracy = accuracy_score(pred, actual);
  RealMatrix counts = RealMatrix::Zero(k, k);
  for (Eigen::Index i = 0; i < actual.rows(); ++i) {
    counts(argmax_row(pred, i), argmax_row(actual, i)) += 1.0;
  }
  report.confusion = RealMatrix::Zero(k, k);
  double within = 0.0;
  int seen_classes = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    const double total = counts.col(c).sum();
    if (total == 0.0) continue;  // class absent from the test set
    report.confusion.col(c) = counts.col(c) / total;
    ++seen_classes;
    for (Eigen::Index r = std::max<Eigen::Index>(0, c - 1); r <= std::min<Eigen::Index>(k - 1, c + 1);
         ++r) {
      within += report.confusion(r, c);
    }
  }
  report.within_one_mass = seen_classes > 0 ? within / seen_classes : 0.0;
  return report;
}

RealMatrix prediction_scatter(const ModelBundle& model, const LabeledDataset& test_set) {
  const RealMatrix pred = predict(model, test_set);
  RealMatrix scatter(pred.rows(), 2 * pred.cols());
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    scatter.col(2 * j) = test_set.labels.col(j);
    scatter.col(2 * j + 1) = pred.col(j);
  }
  return scatter;
}

// ----- robustness -----

RobustnessPoint robustness_from_sets(const ModelBundle& model,
                                     const std::vector<LabeledDataset>& sets) {
  if (sets.empty()) throw std::invalid_argument("robustness_from_sets: no sets");
  const TaskRecipe recipe = task_recipe(task_tag_from_name(model.task_name));
  RobustnessPoint point;
  point.n_impurities = sets.front().options.n_impurities;
  std::vector<double> accs, losses;
  for (const LabeledDataset& set : sets) {
    if (set.options.n_impurities != point.n_impurities) {
      throw std::invalid_argument("robustness_from_sets: mixed impurity counts");
    }
    const EvaluationReport report = evaluate_classification(model, set);
    accs.push_back(report.accuracy);
    losses.push_back(loss_value(recipe.loss, predict(model, set), set.labels, recipe.alpha));
  }
  const auto mean_sd = [](const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::pair<double, double>{mean, n > 1 ? std::sqrt(var / (n - 1)) : 0.0};
  };
  std::tie(point.mean_accuracy, point.sd_accuracy) = mean_sd(accs);
  std::tie(point.mean_loss, point.sd_loss) = mean_sd(losses);
  return point;
}

std::vector<RobustnessPoint> robustness_eval(const ModelBundle& model, TaskTag tag,
                                             const std::vector<std::uint64_t>& seeds,
                                             int n_samples_per_set, double t_min,
                                             const GenOptions& base_options) {
  if (seeds.empty()) throw std::invalid_argument("robustness_eval: need at least one seed");
  const std::vector<int> counts =
      (tag == TaskTag::Classify) ? std::vector<int>{4, 5, 6} : std::vector<int>{6, 8, 10};
  std::vector<RobustnessPoint> points;
  for (int count : counts) {
    GenOptions options = base_options;
    options.n_impurities = count;
    std::vector<LabeledDataset> sets;
    for (std::uint64_t seed : seeds) {
      sets.push_back(tag == TaskTag::Classify
                         ? gen_classification(seed, n_samples_per_set, t_min, options)
                         : gen_hybrid(seed, n_samples_per_set, options));
    }
    points.push_back(robustness_from_sets(model, sets));
  }
  return points;
}

}  // namespace qenv
