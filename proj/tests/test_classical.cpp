#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "qenv/classical.hpp"
#include "qenv/environment.hpp"
#include "qenv/rng.hpp"

using namespace qenv;

namespace {

EnvironmentSpec single_fluctuator(double epsilon0, double tunneling, double v) {
  EnvironmentSpec env;
  env.beta = 1.0;
  env.band = {40.0, 10.0, 400, 0.0};
  env.impurities = {{epsilon0, tunneling, v, ImpurityKind::Classical}};
  env.time_grid = make_time_grid(500, 25.0);
  return env;
}

// Least-squares slope of log(y) against t.
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

}  // namespace

// ----- trajectory sampling -----

TEST_CASE("frozen fluctuator stays in its initial state") {
  const RtnTrajectory hot = sample_trajectory(3, 0.0, 0.0, 1.0, -40.0, 0.05, 200);
  REQUIRE(hot.values.size() == 201);
  for (int v : hot.values) CHECK(v == 1);  // thermal start, level far below mu

  const RtnTrajectory cold = sample_trajectory(3, 0.0, 0.0, 1.0, 40.0, 0.05, 200);
  for (int v : cold.values) CHECK(v == 0);
}

TEST_CASE("trajectories reproduce bit-for-bit from the seed") {
  const RtnTrajectory a = sample_trajectory(42, 0.4, 0.6, 1.0, -0.5, 0.1, 24);
  const RtnTrajectory b = sample_trajectory(42, 0.4, 0.6, 1.0, -0.5, 0.1, 24);
  CHECK(a.values == b.values);
  CHECK(a.dt == 0.1);
  CHECK(a.seed == 42);

  const int pinned[25] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1,
                          1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  for (int k = 0; k < 25; ++k) CHECK(a.values[k] == pinned[k]);

  const RtnTrajectory c = sample_trajectory(43, 0.4, 0.6, 1.0, -0.5, 0.1, 24);
  CHECK(c.values != a.values);
}

TEST_CASE("flip frequencies follow the switching rates") {
  const double p_down = 0.08, p_up = 0.02;
  const RtnTrajectory tr = sample_trajectory(9, 0.8, 0.2, 1.0, 0.0, 0.1, 200000);
  long in_one = 0, in_zero = 0, down = 0, up = 0;
  for (std::size_t k = 0; k + 1 < tr.values.size(); ++k) {
    if (tr.values[k] == 1) {
      ++in_one;
      if (tr.values[k + 1] == 0) ++down;
    } else {
      ++in_zero;
      if (tr.values[k + 1] == 1) ++up;
    }
  }
  const double f_down = static_cast<double>(down) / in_one;
  const double f_up = static_cast<double>(up) / in_zero;
  CHECK(std::abs(f_down - p_down) < 3.0 * std::sqrt(p_down * (1 - p_down) / in_one));
  CHECK(std::abs(f_up - p_up) < 3.0 * std::sqrt(p_up * (1 - p_up) / in_zero));
}

TEST_CASE("time average matches the stationary occupation") {
  // Symmetric rates: <xi> = 1/2.
  const RtnTrajectory sym = sample_trajectory(5, 0.5, 0.5, 1.0, 0.0, 0.1, 100000);
  double mean = 0.0;
  for (int v : sym.values) mean += v;
  mean /= sym.values.size();
  CHECK(std::abs(mean - 0.5) < 3.0 * std::sqrt(0.25 / 1e5));

  // beta epsilon0 = ln 3: stationary value gamma_-/(gamma_+ + gamma_-) = 1/4.
  const double ln3 = std::log(3.0);
  const RtnTrajectory tilted = sample_trajectory(5, 0.75, 0.25, 1.0, ln3, 0.1, 100000);
  mean = 0.0;
  for (int v : tilted.values) mean += v;
  mean /= tilted.values.size();
  CHECK(std::abs(mean - 0.25) < 3.0 * std::sqrt(0.1875 / 1e5));
}

TEST_CASE("ensemble occupation is stationary for several parameter sets") {
  struct Params {
    double beta, epsilon0, gamma;
  };
  const Params sets[3] = {{1.0, 0.0, 2.0}, {2.0, 0.7, 5.0}, {0.5, -1.2, 1.0}};
  for (const Params& p : sets) {
    const SwitchingRates r = switching_rates(p.gamma, p.beta, p.epsilon0);
    const double dt = 0.1 / (r.gamma_plus + r.gamma_minus);
    const int n = 2000;
    double mean = 0.0;
    for (int k = 0; k < n; ++k) {
      mean += sample_trajectory(mix_seed(11, k), r.gamma_plus, r.gamma_minus, p.beta,
                                p.epsilon0, dt, 150)
                  .values.back();
    }
    mean /= n;
    const double target = 1.0 / (1.0 + std::exp(p.beta * p.epsilon0));
    CHECK(std::abs(mean - target) < 3.0 * std::sqrt(target * (1.0 - target) / n));
  }
}

TEST_CASE("coarse steps and bad arguments are rejected") {
  CHECK_THROWS_AS(sample_trajectory(1, 1.0, 0.2, 1.0, 0.0, 0.1, 10), std::invalid_argument);
  CHECK_THROWS_AS(sample_trajectory(1, -0.1, 0.2, 1.0, 0.0, 0.01, 10), std::invalid_argument);
  CHECK_THROWS_AS(sample_trajectory(1, 0.1, 0.2, 1.0, 0.0, 0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(sample_trajectory(1, 0.1, 0.2, 1.0, 0.0, 0.01, -1), std::invalid_argument);
}

// ----- averaged visibility -----

TEST_CASE("visibility starts at one and respects the statistical bound") {
  EnvironmentSpec env = single_fluctuator(0.3, 0.2, 0.8);
  env.impurities.push_back({-0.6, 0.15, 1.2, ImpurityKind::Classical});
  const VisibilityTrace tr = visibility_classical(env, 200, 17);
  CHECK(tr.values[0] == Complex{1.0, 0.0});
  const double bound = 1.0 + 3.0 / std::sqrt(200.0);
  for (const Complex& v : tr.values) CHECK(std::abs(v) <= bound);
  CHECK(std::abs(tr.values[499]) < 1.0);  // decays under two coupled fluctuators
}

TEST_CASE("zero coupling gives exactly unit visibility") {
  EnvironmentSpec env = single_fluctuator(0.3, 0.2, 0.0);
  const VisibilityTrace tr = visibility_classical(env, 50, 1);
  for (const Complex& v : tr.values) CHECK(v == Complex{1.0, 0.0});
}

TEST_CASE("one trajectory reproduces its left-endpoint Riemann phase") {
  const EnvironmentSpec env = single_fluctuator(0.3, 0.2, 0.8);
  const VisibilityTrace vis = visibility_classical(env, 1, 7);

  const double gamma = decay_rate(0.2, env.band.dos_psi);
  const SwitchingRates r = switching_rates(gamma, env.beta, 0.3);
  const double spacing = env.time_grid[1] - env.time_grid[0];
  const int refine = static_cast<int>(std::ceil(gamma * spacing / 0.05));
  const double dt = spacing / refine;
  const RtnTrajectory traj =
      sample_trajectory(mix_seed(mix_seed(7, 0), 0), r.gamma_plus, r.gamma_minus, env.beta,
                        0.3, dt, 499 * refine);

  double phase = 0.0;
  for (int g = 1; g < 500; ++g) {
    for (int s = (g - 1) * refine; s < g * refine; ++s) {
      phase += 0.8 * traj.values[s] * dt;
    }
    CHECK(std::abs(vis.values[g] - std::exp(Complex{0.0, phase})) < 1e-12);
  }
}

TEST_CASE("weak-coupling decay rate matches both analytic routes") {
  // Gamma = 2 pi psi T^2 = 20 with psi = 10; v = 1, epsilon0 = 0.
  const double tunneling = std::sqrt(20.0 / (2.0 * M_PI * 10.0));
  const EnvironmentSpec env = single_fluctuator(0.0, tunneling, 1.0);
  const double gamma = decay_rate(tunneling, env.band.dos_psi);
  REQUIRE(gamma == doctest::Approx(20.0).epsilon(1e-12));

  const VisibilityTrace tr = visibility_classical(env, 500, 1);
  std::vector<double> mag(500), mag2(500);
  for (int k = 0; k < 500; ++k) {
    mag[k] = std::abs(tr.values[k]);
    mag2[k] = mag[k] * mag[k];
  }

  // |D| decays with the exact slow mode of the two-state generator;
  // |D|^2 decays with v^2/(2 Gamma) to leading order in v/Gamma.
  const double slow_mode = 0.5 * (gamma - std::sqrt(gamma * gamma - 1.0));
  const double rate_mag = -log_slope(tr.time_grid, mag);
  CHECK(std::abs(rate_mag - slow_mode) <= 0.1 * slow_mode);

  const double rate_sq = -log_slope(tr.time_grid, mag2);
  CHECK(std::abs(rate_sq - 1.0 / (2.0 * gamma)) <= 0.1 / (2.0 * gamma));
}

TEST_CASE("doubling the trajectory count halves the estimator variance") {
  EnvironmentSpec env = single_fluctuator(0.0, std::sqrt(1.0 / (2.0 * M_PI * 10.0)), 1.0);
  env.time_grid = make_time_grid(50, 10.0);
  const int reps = 60;
  double m1 = 0, m2 = 0;
  std::vector<double> a1(reps), a2(reps);
  for (int r = 0; r < reps; ++r) {
    a1[r] = std::abs(visibility_classical(env, 100, 100 + 2 * r).values[49]);
    a2[r] = std::abs(visibility_classical(env, 200, 101 + 2 * r).values[49]);
    m1 += a1[r];
    m2 += a2[r];
  }
  m1 /= reps;
  m2 /= reps;
  double v1 = 0, v2 = 0;
  for (int r = 0; r < reps; ++r) {
    v1 += (a1[r] - m1) * (a1[r] - m1);
    v2 += (a2[r] - m2) * (a2[r] - m2);
  }
  CHECK(v1 / v2 == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("visibility rejects bad inputs") {
  EnvironmentSpec env = single_fluctuator(0.3, 0.2, 0.8);
  CHECK_THROWS_AS(visibility_classical(env, 0, 1), std::invalid_argument);

  EnvironmentSpec quantum = env;
  quantum.impurities[0].kind = ImpurityKind::Quantum;
  CHECK_THROWS_AS(visibility_classical(quantum, 10, 1), std::invalid_argument);

  EnvironmentSpec skewed = env;
  skewed.time_grid = {0.0, 1.0, 3.0, 4.0};
  CHECK_THROWS_AS(visibility_classical(skewed, 10, 1), std::invalid_argument);
}
