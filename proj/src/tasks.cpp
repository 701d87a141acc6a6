#include <qenv/tasks.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

#include "qenv/classical.hpp"
#include "qenv/io.hpp"
#include "qenv/quantum.hpp"
#include "qenv/rng.hpp"

namespace qenv {

namespace {

// Classification windows always resample onto this many equidistant points of
// [t_min, kWindowEnd], so the feature width never depends on t_min.
constexpr int kWindowPoints = 100;
constexpr double kWindowEnd = 5.0;

// sample_environment burns streams 0 and 1 of the per-sample seed; classical
// trajectories draw from stream 2 so the two never overlap.
constexpr std::uint64_t kTrajectoryStream = 2;

constexpr int kHybridTopCount = 5;
constexpr int kHybridClasses = kHybridTopCount + 1;

}  // namespace

// ----- dataset types -----

std::string task_tag_name(TaskTag tag) {
  switch (tag) {
    case TaskTag::Reconstruct: return "reconstruct";
    case TaskTag::ReconstructEnsemble: return "reconstruct_ensemble";
    case TaskTag::Classify: return "classify";
    case TaskTag::Hybrid: return "hybrid";
  }
  throw std::invalid_argument("task_tag_name: unknown tag");
}

TaskTag task_tag_from_name(const std::string& name) {
  if (name == "reconstruct") return TaskTag::Reconstruct;
  if (name == "reconstruct_ensemble") return TaskTag::ReconstructEnsemble;
  if (name == "classify") return TaskTag::Classify;
  if (name == "hybrid") return TaskTag::Hybrid;
  throw std::invalid_argument("task_tag_from_name: unknown task '" + name + "'");
}

GenOptions hybrid_defaults() {
  GenOptions options;
  options.n_impurities = 8;
  options.energy_halfwidth = 10.0;
  return options;
}

// ----- label rules -----

std::vector<int> impurity_order(const EnvironmentSpec& env) {
  std::vector<int> order(env.impurities.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double fa = std::abs(env.impurities[static_cast<std::size_t>(a)].epsilon0);
    const double fb = std::abs(env.impurities[static_cast<std::size_t>(b)].epsilon0);
    if (fa != fb) return fa < fb;
    return a < b;
  });
  return order;
}

RealVector reconstruction_label(const EnvironmentSpec& env, int n_kept) {
  if (n_kept < 1 || static_cast<std::size_t>(n_kept) > env.impurities.size()) {
    throw std::invalid_argument("reconstruction_label: n_kept exceeds the impurity count");
  }
  const std::vector<int> order = impurity_order(env);
  RealVector label(3 * n_kept);
  for (int i = 0; i < n_kept; ++i) {
    const Impurity& imp = env.impurities[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    const NormalizedParams np = normalized_params(imp, env.beta, 1.0);
    label[3 * i] = np.e;
    label[3 * i + 1] = np.t;
    label[3 * i + 2] = np.w;
  }
  return label;
}

RealVector ensemble_label(const EnvironmentSpec& env) {
  RealVector label = RealVector::Zero(3);
  for (const Impurity& imp : env.impurities) {
    const NormalizedParams np = normalized_params(imp, env.beta, 1.0);
    label[0] += np.e;
    label[1] += np.t;
    label[2] += np.w;
  }
  return label;
}

int hybrid_class(const EnvironmentSpec& env) {
  const std::vector<int> order = impurity_order(env);
  const int top = std::min<int>(kHybridTopCount, static_cast<int>(order.size()));
  int quantum = 0;
  for (int i = 0; i < top; ++i) {
    if (env.impurities[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].kind ==
        ImpurityKind::Quantum) {
      ++quantum;
    }
  }
  return quantum;
}

// ----- generation core -----

namespace {

EnvironmentSpec apply_options(EnvironmentSpec env, const GenOptions& options) {
  env.band = options.band;
  env.time_grid = make_time_grid(options.grid_points, options.t_max);
  return env;
}

void collect_warnings(const VisibilityTrace& trace, std::vector<std::string>& names) {
  for (const std::string& w : trace.warnings) {
    names.push_back(w.substr(0, w.find(' ')));
  }
}

RealVector window_resample(const std::vector<double>& grid, const ComplexVector& values,
                           double t_min) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (n < 2 || grid.back() < kWindowEnd - 1e-12) {
    throw std::invalid_argument("window_resample: grid must reach t = 5");
  }
  const double h = grid[1] - grid[0];
  RealVector out(kWindowPoints);
  for (int j = 0; j < kWindowPoints; ++j) {
    const double t = t_min + (kWindowEnd - t_min) * j / (kWindowPoints - 1);
    const double pos = t / h;
    const auto i0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), n - 2);
    const double frac = pos - static_cast<double>(i0);
    out[j] = (1.0 - frac) * std::abs(values[i0]) + frac * std::abs(values[i0 + 1]);
  }
  return out;
}

// Splits a mixed environment by impurity kind; the empty subset contributes a
// unit factor to the visibility product.
EnvironmentSpec kind_subset(const EnvironmentSpec& env, ImpurityKind kind) {
  EnvironmentSpec sub = env;
  sub.impurities.clear();
  for (const Impurity& imp : env.impurities) {
    if (imp.kind == kind) sub.impurities.push_back(imp);
  }
  return sub;
}

void validate_common(std::uint64_t, int count, const GenOptions& options) {
  if (count < 1) throw std::invalid_argument("dataset generation: need at least one sample");
  if (options.n_impurities < 1 || options.energy_halfwidth <= 0.0 || options.n_traj < 1 ||
      options.grid_points < 2 || options.t_max <= 0.0) {
    throw std::invalid_argument("dataset generation: invalid options");
  }
}

}  // namespace

RawBatch gen_raw_range(TaskTag tag, std::uint64_t seed, int first, int count, double t_min,
                       const GenOptions& options) {
  validate_common(seed, count, options);
  if (first < 0) throw std::invalid_argument("gen_raw_range: negative start index");

  RawBatch batch;
  switch (tag) {
    case TaskTag::Reconstruct:
    case TaskTag::ReconstructEnsemble: {
      const bool full = tag == TaskTag::Reconstruct;
      if (full && options.n_impurities < 3) {
        throw std::invalid_argument("gen_raw_range: reconstruction needs at least 3 impurities");
      }
      batch.features.resize(count, options.grid_points);
      batch.labels.resize(count, full ? 9 : 3);
      for (int r = 0; r < count; ++r) {
        const std::uint64_t env_seed = mix_seed(seed, static_cast<std::uint64_t>(first + r));
        const EnvironmentSpec env = apply_options(
            sample_environment(env_seed, options.n_impurities, options.energy_halfwidth,
                               KindPolicy::AllQuantum),
            options);
        const VisibilityTrace trace = visibility_quantum(env);
        batch.features.row(r) = trace.values.cwiseAbs().transpose();
        batch.labels.row(r) = (full ? reconstruction_label(env, 3) : ensemble_label(env)).transpose();
        batch.metadata.push_back({env, env_seed});
        collect_warnings(trace, batch.warning_names);
      }
      return batch;
    }
    case TaskTag::Classify: {
      if (first % 2 != 0 || count % 2 != 0) {
        throw std::invalid_argument("gen_raw_range: classify ranges must align to pairs");
      }
      if (t_min < 0.0 || t_min >= kWindowEnd) {
        throw std::invalid_argument("gen_raw_range: need 0 <= t_min < 5");
      }
      batch.features.resize(count, kWindowPoints);
      batch.labels.resize(count, 2);
      for (int r = 0; r < count; r += 2) {
        const int pair = (first + r) / 2;
        const std::uint64_t env_seed = mix_seed(seed, static_cast<std::uint64_t>(pair));
        const EnvironmentSpec env_q = apply_options(
            sample_environment(env_seed, options.n_impurities, options.energy_halfwidth,
                               KindPolicy::AllQuantum),
            options);
        const EnvironmentSpec env_c = apply_options(
            sample_environment(env_seed, options.n_impurities, options.energy_halfwidth,
                               KindPolicy::AllClassical),
            options);
        const VisibilityTrace trace_q = visibility_quantum(env_q);
        const VisibilityTrace trace_c =
            visibility_classical(env_c, options.n_traj, mix_seed(env_seed, kTrajectoryStream));
        batch.features.row(r) = window_resample(env_q.time_grid, trace_q.values, t_min).transpose();
        batch.features.row(r + 1) = window_resample(env_c.time_grid, trace_c.values, t_min).transpose();
        batch.labels.row(r) << 1.0, 0.0;
        batch.labels.row(r + 1) << 0.0, 1.0;
        batch.metadata.push_back({env_q, env_seed});
        batch.metadata.push_back({env_c, env_seed});
        collect_warnings(trace_q, batch.warning_names);
        collect_warnings(trace_c, batch.warning_names);
      }
      return batch;
    }
    case TaskTag::Hybrid: {
      batch.features.resize(count, options.grid_points);
      batch.labels = RealMatrix::Zero(count, kHybridClasses);
      for (int r = 0; r < count; ++r) {
        const std::uint64_t env_seed = mix_seed(seed, static_cast<std::uint64_t>(first + r));
        const EnvironmentSpec env = apply_options(
            sample_environment(env_seed, options.n_impurities, options.energy_halfwidth,
                               KindPolicy::RandomMix),
            options);
        const EnvironmentSpec env_q = kind_subset(env, ImpurityKind::Quantum);
        const EnvironmentSpec env_c = kind_subset(env, ImpurityKind::Classical);
        ComplexVector product = ComplexVector::Ones(options.grid_points);
        if (!env_q.impurities.empty()) {
          const VisibilityTrace trace = visibility_quantum(env_q);
          product.array() *= trace.values.array();
          collect_warnings(trace, batch.warning_names);
        }
        if (!env_c.impurities.empty()) {
          const VisibilityTrace trace =
              visibility_classical(env_c, options.n_traj, mix_seed(env_seed, kTrajectoryStream));
          product.array() *= trace.values.array();
          collect_warnings(trace, batch.warning_names);
        }
        batch.features.row(r) = product.cwiseAbs().transpose();
        batch.labels(r, hybrid_class(env)) = 1.0;
        batch.metadata.push_back({env, env_seed});
      }
      return batch;
    }
  }
  throw std::invalid_argument("gen_raw_range: unknown task tag");
}

LabeledDataset assemble_dataset(TaskTag tag, std::uint64_t seed, std::vector<RawBatch> batches,
                                double t_min, const GenOptions& options) {
  if (batches.empty()) throw std::invalid_argument("assemble_dataset: no batches");
  Eigen::Index n = 0;
  const Eigen::Index p = batches.front().features.cols();
  const Eigen::Index q = batches.front().labels.cols();
  for (const RawBatch& b : batches) {
    if (b.features.cols() != p || b.labels.cols() != q ||
        b.features.rows() != b.labels.rows() ||
        b.features.rows() != static_cast<Eigen::Index>(b.metadata.size())) {
      throw std::invalid_argument("assemble_dataset: inconsistent batch shapes");
    }
    n += b.features.rows();
  }

  LabeledDataset dataset;
  dataset.task_tag = tag;
  dataset.seed = seed;
  dataset.options = options;
  dataset.window_t_min = (tag == TaskTag::Classify) ? t_min : 0.0;
  dataset.features.resize(n, p);
  dataset.labels.resize(n, q);
  dataset.metadata.reserve(static_cast<std::size_t>(n));
  std::vector<std::string> warning_names;
  Eigen::Index row = 0;
  for (RawBatch& b : batches) {
    dataset.features.middleRows(row, b.features.rows()) = b.features;
    dataset.labels.middleRows(row, b.labels.rows()) = b.labels;
    row += b.features.rows();
    std::move(b.metadata.begin(), b.metadata.end(), std::back_inserter(dataset.metadata));
    std::move(b.warning_names.begin(), b.warning_names.end(), std::back_inserter(warning_names));
  }

  std::sort(warning_names.begin(), warning_names.end());
  for (std::size_t i = 0; i < warning_names.size();) {
    std::size_t j = i;
    while (j < warning_names.size() && warning_names[j] == warning_names[i]) ++j;
    dataset.warning_counts.emplace_back(warning_names[i], static_cast<int>(j - i));
    i = j;
  }

  const bool regression = tag == TaskTag::Reconstruct || tag == TaskTag::ReconstructEnsemble;
  if (regression) {
    dataset.label_scaler = minmax_fit(dataset.labels);
    dataset.labels = minmax_transform(dataset.label_scaler, dataset.labels);
    dataset.has_label_scaler = true;
  }

  dataset.feature_names.reserve(static_cast<std::size_t>(p));
  if (tag == TaskTag::Classify) {
    for (int j = 0; j < kWindowPoints; ++j) {
      const double t = t_min + (kWindowEnd - t_min) * j / (kWindowPoints - 1);
      dataset.feature_names.push_back("t" + format_double(t));
    }
    dataset.label_names = {"p_quantum", "p_classical"};
    dataset.class_names = {"quantum", "classical"};
  } else {
    const std::vector<double> grid = make_time_grid(options.grid_points, options.t_max);
    for (double t : grid) dataset.feature_names.push_back("t" + format_double(t));
    if (tag == TaskTag::Reconstruct) {
      for (int i = 1; i <= 3; ++i) {
        const std::string k = std::to_string(i);
        dataset.label_names.push_back("e" + k);
        dataset.label_names.push_back("t" + k);
        dataset.label_names.push_back("w" + k);
      }
    } else if (tag == TaskTag::ReconstructEnsemble) {
      dataset.label_names = {"sum_e", "sum_t", "sum_w"};
    } else {
      for (int c = 0; c < kHybridClasses; ++c) {
        dataset.label_names.push_back("c" + std::to_string(c));
        dataset.class_names.push_back(std::to_string(c));
      }
    }
  }
  return dataset;
}

// ----- one-shot generators -----

LabeledDataset gen_reconstruction(std::uint64_t seed, int n_samples, const GenOptions& options) {
  std::vector<RawBatch> batches;
  batches.push_back(gen_raw_range(TaskTag::Reconstruct, seed, 0, n_samples, 0.0, options));
  return assemble_dataset(TaskTag::Reconstruct, seed, std::move(batches), 0.0, options);
}

LabeledDataset gen_reconstruction(std::uint64_t seed, int n_samples) {
  return gen_reconstruction(seed, n_samples, GenOptions{});
}

LabeledDataset gen_ensemble(std::uint64_t seed, int n_samples, const GenOptions& options) {
  std::vector<RawBatch> batches;
  batches.push_back(gen_raw_range(TaskTag::ReconstructEnsemble, seed, 0, n_samples, 0.0, options));
  return assemble_dataset(TaskTag::ReconstructEnsemble, seed, std::move(batches), 0.0, options);
}

LabeledDataset gen_ensemble(std::uint64_t seed, int n_samples) {
  return gen_ensemble(seed, n_samples, GenOptions{});
}

LabeledDataset derive_ensemble(const LabeledDataset& reconstruction) {
  if (reconstruction.task_tag != TaskTag::Reconstruct) {
    throw std::invalid_argument("derive_ensemble: needs a reconstruction dataset");
  }
  if (reconstruction.features.rows() !=
      static_cast<Eigen::Index>(reconstruction.metadata.size())) {
    throw std::invalid_argument("derive_ensemble: dataset is missing its environments");
  }
  LabeledDataset dataset = reconstruction;
  dataset.task_tag = TaskTag::ReconstructEnsemble;
  dataset.labels.resize(reconstruction.features.rows(), 3);
  for (Eigen::Index r = 0; r < dataset.labels.rows(); ++r) {
    dataset.labels.row(r) =
        ensemble_label(reconstruction.metadata[static_cast<std::size_t>(r)].env).transpose();
  }
  dataset.label_scaler = minmax_fit(dataset.labels);
  dataset.labels = minmax_transform(dataset.label_scaler, dataset.labels);
  dataset.has_label_scaler = true;
  dataset.label_names = {"sum_e", "sum_t", "sum_w"};
  return dataset;
}

LabeledDataset gen_classification(std::uint64_t seed, int n_samples, double t_min,
                                  const GenOptions& options) {
  if (n_samples % 2 != 0) {
    throw std::invalid_argument("gen_classification: n_samples must be even (balanced pairs)");
  }
  std::vector<RawBatch> batches;
  batches.push_back(gen_raw_range(TaskTag::Classify, seed, 0, n_samples, t_min, options));
  return assemble_dataset(TaskTag::Classify, seed, std::move(batches), t_min, options);
}

LabeledDataset gen_classification(std::uint64_t seed, int n_samples, double t_min) {
  return gen_classification(seed, n_samples, t_min, GenOptions{});
}

LabeledDataset gen_hybrid(std::uint64_t seed, int n_samples, const GenOptions& options) {
  std::vector<RawBatch> batches;
  batches.push_back(gen_raw_range(TaskTag::Hybrid, seed, 0, n_samples, 0.0, options));
  return assemble_dataset(TaskTag::Hybrid, seed, std::move(batches), 0.0, options);
}

LabeledDataset gen_hybrid(std::uint64_t seed, int n_samples) {
  return gen_hybrid(seed, n_samples, hybrid_defaults());
}

// ----- persistence -----

namespace {

nlohmann::json scaler_to_json(const MinMaxScaler& scaler) {
  nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
  for (Eigen::Index i = 0; i < scaler.lo.size(); ++i) {
    lo.push_back(scaler.lo[i]);
    hi.push_back(scaler.hi[i]);
  }
  return nlohmann::json{{"lo", std::move(lo)}, {"hi", std::move(hi)}};
}

MinMaxScaler scaler_from_json(const nlohmann::json& j) {
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto hi = j.at("hi").get<std::vector<double>>();
  if (lo.size() != hi.size()) {
    throw std::invalid_argument("load_dataset: scaler bounds disagree in length");
  }
  MinMaxScaler scaler;
  scaler.lo = Eigen::Map<const RealVector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  scaler.hi = Eigen::Map<const RealVector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  return scaler;
}

std::string kind_name(ImpurityKind k) {
  return k == ImpurityKind::Quantum ? "Quantum" : "Classical";
}

ImpurityKind kind_from_name(const std::string& s) {
  if (s == "Quantum") return ImpurityKind::Quantum;
  if (s == "Classical") return ImpurityKind::Classical;
  throw std::invalid_argument("load_dataset: unknown impurity kind '" + s + "'");
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const LabeledDataset& dataset) {
  if (dataset.features.rows() != dataset.labels.rows() ||
      dataset.features.rows() != static_cast<Eigen::Index>(dataset.metadata.size())) {
    throw std::invalid_argument("save_dataset: inconsistent dataset");
  }
  std::filesystem::create_directories(dir);
  write_csv(dir / "features.csv", dataset.feature_names, dataset.features);
  write_csv(dir / "labels.csv", dataset.label_names, dataset.labels);

  nlohmann::json j;
  j["format"] = "qenv-dataset-v1";
  j["task"] = task_tag_name(dataset.task_tag);
  j["seed"] = dataset.seed;
  j["n_samples"] = dataset.features.rows();
  j["options"] = {{"n_impurities", dataset.options.n_impurities},
                  {"energy_halfwidth", dataset.options.energy_halfwidth},
                  {"n_traj", dataset.options.n_traj},
                  {"grid_points", dataset.options.grid_points},
                  {"t_max", dataset.options.t_max},
                  {"band",
                   {{"width_W", dataset.options.band.width_W},
                    {"dos_psi", dataset.options.band.dos_psi},
                    {"n_states", dataset.options.band.n_states},
                    {"chem_potential", dataset.options.band.chem_potential}}}};
  if (dataset.task_tag == TaskTag::Classify) {
    j["window"] = {{"t_min", dataset.window_t_min},
                   {"t_max", kWindowEnd},
                   {"points", kWindowPoints},
                   {"method", "linear-resample"}};
  }
  if (dataset.has_label_scaler) j["label_scaler"] = scaler_to_json(dataset.label_scaler);
  if (!dataset.class_names.empty()) j["class_names"] = dataset.class_names;
  nlohmann::json warnings = nlohmann::json::object();
  for (const auto& [name, count] : dataset.warning_counts) warnings[name] = count;
  j["warning_counts"] = std::move(warnings);

  double beta = 1.0;
  nlohmann::json envs = nlohmann::json::array();
  for (const SampleMeta& meta : dataset.metadata) {
    beta = meta.env.beta;
    nlohmann::json imps = nlohmann::json::array();
    for (const Impurity& imp : meta.env.impurities) {
      imps.push_back(nlohmann::json::array(
          {imp.epsilon0, imp.tunneling_T, imp.coupling_v, kind_name(imp.kind)}));
    }
    envs.push_back({{"seed", meta.seed}, {"impurities", std::move(imps)}});
  }
  j["beta"] = beta;
  j["environments"] = std::move(envs);
  write_text_file(dir / "manifest.json", j.dump(2));
}

LabeledDataset load_dataset(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("load_dataset: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "qenv-dataset-v1") {
      throw std::runtime_error("load_dataset: unknown manifest format");
    }
    LabeledDataset dataset;
    dataset.task_tag = task_tag_from_name(j.at("task").get<std::string>());
    dataset.seed = j.at("seed").get<std::uint64_t>();
    const nlohmann::json& jo = j.at("options");
    dataset.options.n_impurities = jo.at("n_impurities").get<int>();
    dataset.options.energy_halfwidth = jo.at("energy_halfwidth").get<double>();
    dataset.options.n_traj = jo.at("n_traj").get<int>();
    dataset.options.grid_points = jo.at("grid_points").get<int>();
    dataset.options.t_max = jo.at("t_max").get<double>();
    const nlohmann::json& jb = jo.at("band");
    dataset.options.band.width_W = jb.at("width_W").get<double>();
    dataset.options.band.dos_psi = jb.at("dos_psi").get<double>();
    dataset.options.band.n_states = jb.at("n_states").get<int>();
    dataset.options.band.chem_potential = jb.at("chem_potential").get<double>();
    if (dataset.task_tag == TaskTag::Classify) {
      dataset.window_t_min = j.at("window").at("t_min").get<double>();
    }
    if (j.contains("label_scaler")) {
      dataset.label_scaler = scaler_from_json(j.at("label_scaler"));
      dataset.has_label_scaler = true;
    }
    if (j.contains("class_names")) {
      dataset.class_names = j.at("class_names").get<std::vector<std::string>>();
    }
    for (const auto& [name, count] : j.at("warning_counts").items()) {
      dataset.warning_counts.emplace_back(name, count.get<int>());
    }

    const double beta = j.at("beta").get<double>();
    const std::vector<double> grid =
        make_time_grid(dataset.options.grid_points, dataset.options.t_max);
    for (const nlohmann::json& je : j.at("environments")) {
      SampleMeta meta;
      meta.seed = je.at("seed").get<std::uint64_t>();
      meta.env.beta = beta;
      meta.env.band = dataset.options.band;
      meta.env.time_grid = grid;
      for (const nlohmann::json& ji : je.at("impurities")) {
        Impurity imp;
        imp.epsilon0 = ji.at(0).get<double>();
        imp.tunneling_T = ji.at(1).get<double>();
        imp.coupling_v = ji.at(2).get<double>();
        imp.kind = kind_from_name(ji.at(3).get<std::string>());
        meta.env.impurities.push_back(imp);
      }
      dataset.metadata.push_back(std::move(meta));
    }

    const CsvTable features = read_csv(dir / "features.csv");
    const CsvTable labels = read_csv(dir / "labels.csv");
    dataset.features = features.values;
    dataset.labels = labels.values;
    dataset.feature_names = features.header;
    dataset.label_names = labels.header;
    const auto n = j.at("n_samples").get<Eigen::Index>();
    if (dataset.features.rows() != n || dataset.labels.rows() != n ||
        static_cast<Eigen::Index>(dataset.metadata.size()) != n) {
      throw std::runtime_error("load_dataset: row counts disagree with the manifest");
    }
    return dataset;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("load_dataset: ") + e.what());
  }
}

// ----- sampled-distribution statistics -----

NeglectedWeightStats neglected_weight_stats(std::uint64_t seed, int n_envs) {
  if (n_envs < 1) throw std::invalid_argument("neglected_weight_stats: need n_envs >= 1");
  NeglectedWeightStats stats;
  for (int k = 0; k < n_envs; ++k) {
    const EnvironmentSpec env =
        sample_environment(mix_seed(seed, static_cast<std::uint64_t>(k)), 5, 5.0,
                           KindPolicy::AllQuantum);
    const std::vector<int> order = impurity_order(env);
    double e[5], sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < 5; ++i) {
      const Impurity& imp = env.impurities[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      e[i] = 1.0 / std::cosh(env.beta * imp.epsilon0);
      sum += e[i];
      sum_sq += e[i] * e[i];
    }
    stats.mean_ratio4 += e[3] / sum;
    stats.mean_ratio5 += e[4] / sum;
    stats.mean_sq_ratio4 += e[3] * e[3] / sum_sq;
    stats.mean_sq_ratio5 += e[4] * e[4] / sum_sq;
  }
  stats.mean_ratio4 /= n_envs;
  stats.mean_ratio5 /= n_envs;
  stats.mean_sq_ratio4 /= n_envs;
  stats.mean_sq_ratio5 /= n_envs;
  return stats;
}

}  // namespace qenv
