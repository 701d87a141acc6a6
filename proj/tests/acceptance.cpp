// Acceptance gate: one numbered criterion per invocation, one PASS/FAIL line
// with the measured value and the pinned tolerance. Exit 0 iff the criterion
// holds.
//
//   acceptance <criterion 1..13> [cache_dir]
//
// Criteria that train on large corpora load them from cache_dir (environment
// variable QENV_CACHE_DIR overrides the argument) and regenerate on a miss;
// regeneration is hours of work, the check itself is unchanged either way.
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qenv/classical.hpp"
#include "qenv/environment.hpp"
#include "qenv/ml.hpp"
#include "qenv/quantum.hpp"
#include "qenv/rng.hpp"
#include "qenv/tasks.hpp"

namespace fs = std::filesystem;
using namespace qenv;

namespace {

// ----- shared helpers -----

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

RealMatrix random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

RealMatrix one_hot_rows(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  RealMatrix m = RealMatrix::Zero(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, rng.uniform_int(cols)) = 1.0;
  return m;
}

// Least-squares slope of log(y) against t over the strictly positive tail.
double log_slope(const std::vector<double>& t, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (y[k] <= 0.0) continue;
    const double ly = std::log(y[k]);
    sx += t[k];
    sy += ly;
    sxx += t[k] * t[k];
    sxy += t[k] * ly;
    ++n;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Cached corpus: accept only an exact (task, seed, rows) match, else rebuild
// and store for the remaining criteria.
LabeledDataset cached_dataset(const fs::path& cache, const std::string& name, TaskTag tag,
                              std::uint64_t seed, int n,
                              const std::function<LabeledDataset()>& generate) {
  const fs::path dir = cache / name;
  try {
    LabeledDataset ds = load_dataset(dir);
    if (ds.task_tag == tag && ds.seed == seed && ds.features.rows() == n) return ds;
    std::printf("  [cache] %s: stale entry, regenerating\n", name.c_str());
  } catch (const std::exception&) {
    std::printf("  [cache] %s: miss, generating\n", name.c_str());
  }
  std::fflush(stdout);
  LabeledDataset ds = generate();
  save_dataset(dir, ds);
  return ds;
}

LabeledDataset corpus_reconstruct(const fs::path& cache) {
  return cached_dataset(cache, "recon_10k", TaskTag::Reconstruct, 20260818ull, 10000,
                        [] { return gen_reconstruction(20260818ull, 10000); });
}

LabeledDataset corpus_classify(const fs::path& cache) {
  return cached_dataset(cache, "classify_10k", TaskTag::Classify, 7ull, 10000,
                        [] { return gen_classification(7ull, 10000, 0.0); });
}

LabeledDataset corpus_hybrid(const fs::path& cache) {
  return cached_dataset(cache, "hybrid_5k", TaskTag::Hybrid, 11ull, 5000,
                        [] { return gen_hybrid(11ull, 5000); });
}

LabeledDataset corpus_robust(const fs::path& cache, int n_impurities, std::uint64_t seed) {
  GenOptions options;
  options.n_impurities = n_impurities;
  const std::string name =
      "robust_c" + std::to_string(n_impurities) + "_s" + std::to_string(seed);
  return cached_dataset(cache, name, TaskTag::Classify, seed, 200, [&] {
    return gen_classification(seed, 200, 0.0, options);
  });
}

// Held-out evaluation of a freshly trained task model.
struct TrainedEval {
  ModelBundle model;
  EvaluationReport report;
  int test_rows = 0;
};

TrainedEval train_and_evaluate(const LabeledDataset& dataset, std::uint64_t seed) {
  const TaskTrainResult result = train_task(dataset, seed);
  const LabeledDataset test = dataset_rows(dataset, result.split.test);
  const bool classification =
      dataset.task_tag == TaskTag::Classify || dataset.task_tag == TaskTag::Hybrid;
  TrainedEval out;
  out.model = result.model;
  out.report = classification ? evaluate_classification(result.model, test)
                              : evaluate_regression(result.model, test);
  out.test_rows = static_cast<int>(result.split.test.size());
  return out;
}

// ----- criteria -----

bool criterion_1(const fs::path&, std::string& detail) {
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    EnvironmentSpec env = sample_environment(mix_seed(1, static_cast<std::uint64_t>(k)), 1, 5.0,
                                             KindPolicy::AllQuantum);
    env.band = BandSpec{5.0, 1.0, 5, 0.0};
    env.time_grid = make_time_grid(50, 5.0);
    const VisibilityTrace det = visibility_quantum(env);
    const VisibilityTrace brute = visibility_bruteforce(env);
    worst = std::max(worst, (det.values - brute.values).cwiseAbs().maxCoeff());
  }
  detail = "max |D_determinant - D_trace| = " + fmt(worst) +
           " over 20 single-impurity environments (5 band states, 50-point grid), tolerance 1e-9";
  return worst < 1e-9;
}

bool criterion_2(const fs::path&, std::string& detail) {
  const int n_traj = 500;
  const double quantum_bound = 1.0 + 1e-9;
  const double classical_bound = 1.0 + 3.0 / std::sqrt(static_cast<double>(n_traj));
  double worst_q = 0.0, worst_c = 0.0;
  bool start_exact = true;
  for (int k = 0; k < 50; ++k) {
    const EnvironmentSpec env = sample_environment(mix_seed(2, static_cast<std::uint64_t>(k)), 5,
                                                   5.0, KindPolicy::AllQuantum);
    const VisibilityTrace tr = visibility_quantum(env);
    start_exact = start_exact && tr.values[0] == Complex{1.0, 0.0};
    worst_q = std::max(worst_q, tr.values.cwiseAbs().maxCoeff());
  }
  for (int k = 50; k < 100; ++k) {
    const std::uint64_t seed = mix_seed(2, static_cast<std::uint64_t>(k));
    const EnvironmentSpec env = sample_environment(seed, 5, 5.0, KindPolicy::AllClassical);
    const VisibilityTrace tr = visibility_classical(env, n_traj, seed);
    start_exact = start_exact && tr.values[0] == Complex{1.0, 0.0};
    worst_c = std::max(worst_c, tr.values.cwiseAbs().maxCoeff());
  }
  detail = "100 sampled environments: D(0) exactly 1 " +
           std::string(start_exact ? "everywhere" : "VIOLATED") +
           "; max quantum |D| = " + fmt(worst_q) + " (bound " + fmt(quantum_bound) +
           "), max classical |D| = " + fmt(worst_c) + " (bound " + fmt(classical_bound) + ")";
  return start_exact && worst_q <= quantum_bound && worst_c <= classical_bound;
}

bool criterion_3(const fs::path&, std::string& detail) {
  Rng draw(313);
  double worst_z = 0.0;
  for (int s = 0; s < 10; ++s) {
    const double beta = draw.uniform(0.5, 2.0);
    const double epsilon0 = draw.uniform(-2.0, 2.0);
    const double gamma = draw.uniform(0.5, 5.0);
    const SwitchingRates r = switching_rates(gamma, beta, epsilon0);
    const double dt = 0.1 / (r.gamma_plus + r.gamma_minus);
    const int n = 2000;
    double mean = 0.0;
    for (int k = 0; k < n; ++k) {
      mean += sample_trajectory(mix_seed(3, static_cast<std::uint64_t>(1000 * s + k)),
                                r.gamma_plus, r.gamma_minus, beta, epsilon0, dt, 150)
                  .values.back();
    }
    mean /= n;
    const double target = r.gamma_minus / (r.gamma_plus + r.gamma_minus);
    const double se = std::sqrt(target * (1.0 - target) / n);
    worst_z = std::max(worst_z, std::abs(mean - target) / se);
  }
  detail = "10 random (beta, epsilon0, Gamma): max |<xi> - gamma_-/(gamma_+ + gamma_-)| = " +
           fmt(worst_z) + " binomial standard errors (limit 3, 2000 trajectories each)";
  return worst_z <= 3.0;
}

bool criterion_4(const fs::path&, std::string& detail) {
  // Gamma = 2 pi psi T^2 = 20 with the default band, v = 1 so Gamma/v = 20.
  EnvironmentSpec env;
  env.beta = 1.0;
  env.band = BandSpec{};
  const double tunneling = std::sqrt(20.0 / (2.0 * M_PI * env.band.dos_psi));
  env.impurities = {{0.0, tunneling, 1.0, ImpurityKind::Classical}};
  env.time_grid = make_time_grid(500, 25.0);
  const double gamma = decay_rate(tunneling, env.band.dos_psi);

  const VisibilityTrace tr = visibility_classical(env, 500, 1);
  std::vector<double> mag2(tr.values.size());
  for (Eigen::Index k = 0; k < tr.values.size(); ++k) {
    mag2[static_cast<std::size_t>(k)] = std::norm(tr.values[k]);
  }
  // |D|^2 relaxes at v^2/(2 Gamma) to leading order in v/Gamma, the
  // motional-narrowing decoherence rate of a single weakly coupled fluctuator.
  const double rate = -log_slope(tr.time_grid, mag2);
  const double expected = 1.0 / (2.0 * gamma);
  const double rel = std::abs(rate - expected) / expected;
  detail = "single fluctuator, Gamma/v = 20: fitted |D|^2 decay rate " + fmt(rate) +
           " vs v^2/(2 Gamma) = " + fmt(expected) + ", relative error " + fmt(rel) +
           " (tolerance 0.10, 500 trajectories)";
  return rel <= 0.10;
}

bool criterion_5(const fs::path&, std::string& detail) {
  const Impurity imp{0.0, 0.3, 1.0, ImpurityKind::Quantum};
  const SingleParticleSystem sys = build_single_particle(imp, BandSpec{}, 1.0);
  const LorentzianReport rep = lorentzian_check(sys);
  detail = "impurity weights vs analytic profile (T = 0.3, default band): max deviation " +
           fmt(rep.max_rel_dev) + " of the peak over " + std::to_string(rep.n_window) +
           " window states (tolerance 0.05); weight-sum defect " + fmt(rep.weight_sum_defect) +
           " (tolerance 1e-10)";
  return rep.max_rel_dev < 0.05 && rep.weight_sum_defect < 1e-10;
}

bool criterion_6(const fs::path&, std::string& detail) {
  const RealMatrix data = random_matrix(50, 6, 606);
  const PcaModel model = pca_fit(data, 6);

  const RealMatrix centered = data.rowwise() - data.colwise().mean();
  const RealMatrix cov = centered.transpose() * centered / (data.rows() - 1.0);
  const Eigen::SelfAdjointEigenSolver<RealMatrix> eig(cov);

  double worst = 0.0;
  for (int k = 0; k < 6; ++k) {
    const RealVector ref = eig.eigenvectors().col(5 - k);  // descending variance
    const RealVector got = model.components.row(k).transpose();
    worst = std::max(worst, std::min((got - ref).cwiseAbs().maxCoeff(),
                                     (got + ref).cwiseAbs().maxCoeff()));
  }
  bool ordered = true;
  for (int k = 1; k < 6; ++k) {
    ordered =
        ordered && model.explained_variance_ratio[k] <= model.explained_variance_ratio[k - 1];
  }
  detail = "components vs covariance eigenvectors on random 50x6 data: max deviation " +
           fmt(worst) + " up to sign (tolerance 1e-8); explained-variance ratios " +
           std::string(ordered ? "non-increasing" : "OUT OF ORDER");
  return worst < 1e-8 && ordered;
}

bool criterion_7(const fs::path&, std::string& detail) {
  const TaskTag tags[4] = {TaskTag::Reconstruct, TaskTag::ReconstructEnsemble, TaskTag::Classify,
                           TaskTag::Hybrid};
  double worst = 0.0;
  std::uint64_t seed = 7000;
  for (const TaskTag tag : tags) {
    const TaskRecipe recipe = task_recipe(tag);
    const Network net = make_task_network(tag, seed++);
    const RealMatrix x = random_matrix(8, recipe.widths.front(), seed++);
    const RealMatrix y = (recipe.loss == LossKind::MSE)
                             ? random_matrix(8, recipe.widths.back(), seed++)
                             : one_hot_rows(8, recipe.widths.back(), seed++);
    worst = std::max(worst, gradient_check(net, x, y, recipe.loss, recipe.alpha));
  }
  detail = "backprop vs central finite differences across all four task networks: max relative "
           "error " +
           fmt(worst) + " (tolerance 1e-5)";
  return worst < 1e-5;
}

bool criterion_8(const fs::path& cache, std::string& detail) {
  const LabeledDataset ds = corpus_classify(cache);
  const TrainedEval ev = train_and_evaluate(ds, 1);
  detail = "quantum-vs-classical classifier: held-out accuracy " + fmt(ev.report.accuracy) +
           " on " + std::to_string(ev.test_rows) + " test rows (threshold 0.90; 10000 samples, "
           "100 epochs)";
  return ev.report.accuracy >= 0.90;
}

bool criterion_9(const fs::path& cache, std::string& detail) {
  const LabeledDataset ds = corpus_hybrid(cache);
  const TrainedEval ev = train_and_evaluate(ds, 1);
  detail = "quantum-count classifier: exact-match accuracy " + fmt(ev.report.accuracy) +
           " (threshold 0.40), mean within-one-class column mass " +
           fmt(ev.report.within_one_mass) + " (threshold 0.80) on " +
           std::to_string(ev.test_rows) + " test rows";
  return ev.report.accuracy >= 0.40 && ev.report.within_one_mass >= 0.80;
}

bool criterion_10(const fs::path& cache, std::string& detail) {
  const LabeledDataset recon = corpus_reconstruct(cache);
  const TrainedEval ev_recon = train_and_evaluate(recon, 1);
  const double worst_mae = ev_recon.report.mae.maxCoeff();

  const LabeledDataset ensemble = derive_ensemble(recon);
  const TrainedEval ev_ens = train_and_evaluate(ensemble, 1);
  const double worst_ens = ev_ens.report.mae.maxCoeff();

  const double slope = ev_recon.report.pooled_slope;
  detail = "scaled-target MAE: per-parameter max " + fmt(worst_mae) +
           " (threshold 0.08), ensemble max " + fmt(worst_ens) +
           " (threshold 0.04); pooled prediction-vs-actual slope " + fmt(slope) +
           " (window [0.8, 1.1])";
  return worst_mae <= 0.08 && worst_ens <= 0.04 && slope >= 0.8 && slope <= 1.1;
}

bool criterion_11(const fs::path& cache, std::string& detail) {
  const LabeledDataset recon = corpus_reconstruct(cache);
  const TrainedEval ev = train_and_evaluate(recon, 1);
  const RealVector& slopes = ev.report.eta_log_slope;
  if (slopes.size() != 3) {
    detail = "expected 3 per-family error-vs-coupling slopes, got " +
             std::to_string(slopes.size());
    return false;
  }
  detail = "log-log slope of relative error vs coupling measure: e " + fmt(slopes[0]) + ", t " +
           fmt(slopes[1]) + ", w " + fmt(slopes[2]) + " (all must be negative)";
  return slopes[0] < 0.0 && slopes[1] < 0.0 && slopes[2] < 0.0;
}

bool criterion_12(const fs::path& cache, std::string& detail) {
  const LabeledDataset ds = corpus_classify(cache);
  const TaskTrainResult trained = train_task(ds, 1);

  double mean_acc[3] = {0, 0, 0};
  const int counts[3] = {4, 5, 6};
  for (int c = 0; c < 3; ++c) {
    std::vector<LabeledDataset> sets;
    for (std::uint64_t s = 101; s <= 105; ++s) {
      sets.push_back(corpus_robust(cache, counts[c], s));
    }
    mean_acc[c] = robustness_from_sets(trained.model, sets).mean_accuracy;
  }
  const double drop4 = mean_acc[1] - mean_acc[0];
  const double drop6 = mean_acc[1] - mean_acc[2];
  detail = "classifier trained at 5 impurities: accuracy " + fmt(mean_acc[1]) +
           " at 5, " + fmt(mean_acc[0]) + " at 4 (drop " + fmt(drop4) + "), " + fmt(mean_acc[2]) +
           " at 6 (drop " + fmt(drop6) + "); allowed drop 0.05 (5 fresh 200-sample sets each)";
  return drop4 <= 0.05 && drop6 <= 0.05;
}

bool criterion_13(const fs::path&, std::string& detail) {
  const NeglectedWeightStats stats = neglected_weight_stats(13, 10000);
  const bool pass4 = stats.mean_ratio4 >= 0.01 && stats.mean_ratio4 <= 0.04;
  const bool pass5 = stats.mean_ratio5 >= 0.0025 && stats.mean_ratio5 <= 0.01;
  detail = "10000 sampled environments: mean e4/sum(e) = " + fmt(stats.mean_ratio4) +
           " (window [0.01, 0.04]), mean e5/sum(e) = " + fmt(stats.mean_ratio5) +
           " (window [0.0025, 0.01]); squared-weight variant gives " + fmt(stats.mean_sq_ratio4) +
           " and " + fmt(stats.mean_sq_ratio5);
  return pass4 && pass5;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <criterion 1..13> [cache_dir]\n");
    return 1;
  }
  const int criterion = std::atoi(argv[1]);
  if (criterion < 1 || criterion > 13) {
    std::fprintf(stderr, "usage: acceptance <criterion 1..13> [cache_dir]\n");
    return 1;
  }
  const char* env_cache = std::getenv("QENV_CACHE_DIR");
  const fs::path cache = (env_cache != nullptr && env_cache[0] != '\0') ? fs::path(env_cache)
                         : argc > 2 ? fs::path(argv[2])
                                    : fs::path("acceptance_cache");

  using Criterion = bool (*)(const fs::path&, std::string&);
  const Criterion criteria[13] = {criterion_1, criterion_2,  criterion_3,  criterion_4,
                                  criterion_5, criterion_6,  criterion_7,  criterion_8,
                                  criterion_9, criterion_10, criterion_11, criterion_12,
                                  criterion_13};
  std::string detail;
  bool pass = false;
  try {
    pass = criteria[criterion - 1](cache, detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
    pass = false;
  }
  std::printf("criterion %d: %s - %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  return pass ? 0 : 1;
}
