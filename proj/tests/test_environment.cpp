#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qenv/environment.hpp"

using namespace qenv;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Asymptotic Kolmogorov tail probability Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_pvalue(double d_stat, int n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d_stat;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace

TEST_CASE("band levels match the closed form") {
  BandSpec tiny{3.0, 1.0, 3, 0.0};
  const std::vector<double> lv = tiny.levels();
  REQUIRE(lv.size() == 3);
  CHECK(lv[0] == doctest::Approx(-1.5).epsilon(1e-15));
  CHECK(lv[1] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(lv[2] == doctest::Approx(0.5).epsilon(1e-15));

  BandSpec def;
  const std::vector<double> dl = def.levels();
  REQUIRE(dl.size() == 400);
  CHECK(dl.front() == doctest::Approx(-20.0).epsilon(1e-15));
  CHECK(dl.back() == doctest::Approx(19.9).epsilon(1e-12));
  for (std::size_t k = 1; k < dl.size(); ++k) {
    CHECK(dl[k] - dl[k - 1] == doctest::Approx(0.1).epsilon(1e-12));
  }

  BandSpec bad{40.0, 10.0, 399, 0.0};
  CHECK_THROWS_AS(bad.levels(), std::invalid_argument);
}

TEST_CASE("time grid is uniform, starts at zero, ends at t_max") {
  const std::vector<double> g = make_time_grid(500, 25.0);
  REQUIRE(g.size() == 500);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == doctest::Approx(25.0).epsilon(1e-15));
  const double dt = 25.0 / 499.0;
  for (std::size_t k = 1; k < g.size(); ++k) {
    CHECK(g[k] - g[k - 1] == doctest::Approx(dt).epsilon(1e-10));
  }
  CHECK_THROWS_AS(make_time_grid(1, 25.0), std::invalid_argument);
  CHECK_THROWS_AS(make_time_grid(10, -1.0), std::invalid_argument);
}

TEST_CASE("environment invariant checks") {
  EnvironmentSpec env = sample_environment(3, 5, 5.0, KindPolicy::AllQuantum);
  CHECK_NOTHROW(check_environment(env));

  EnvironmentSpec bad = env;
  bad.beta = 0.0;
  CHECK_THROWS_AS(check_environment(bad), std::invalid_argument);

  // No impurities is a valid degenerate environment (unit visibility).
  bad = env;
  bad.impurities.clear();
  CHECK_NOTHROW(check_environment(bad));

  bad = env;
  bad.impurities[0].tunneling_T = -0.1;
  CHECK_THROWS_AS(check_environment(bad), std::invalid_argument);

  bad = env;
  bad.time_grid = {0.0, 1.0, 1.0};
  CHECK_THROWS_AS(check_environment(bad), std::invalid_argument);

  bad = env;
  bad.time_grid = {0.5, 1.0};
  CHECK_THROWS_AS(check_environment(bad), std::invalid_argument);

  bad = env;
  bad.band.n_states = 123;
  CHECK_THROWS_AS(check_environment(bad), std::invalid_argument);
}

TEST_CASE("sampling is deterministic and policy-independent in the parameters") {
  const EnvironmentSpec a = sample_environment(77, 5, 5.0, KindPolicy::AllQuantum);
  const EnvironmentSpec b = sample_environment(77, 5, 5.0, KindPolicy::AllQuantum);
  const EnvironmentSpec c = sample_environment(77, 5, 5.0, KindPolicy::AllClassical);
  const EnvironmentSpec d = sample_environment(77, 5, 5.0, KindPolicy::RandomMix);
  REQUIRE(a.impurities.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(a.impurities[i].epsilon0 == b.impurities[i].epsilon0);
    CHECK(a.impurities[i].epsilon0 == c.impurities[i].epsilon0);
    CHECK(a.impurities[i].epsilon0 == d.impurities[i].epsilon0);
    CHECK(a.impurities[i].tunneling_T == c.impurities[i].tunneling_T);
    CHECK(a.impurities[i].tunneling_T == d.impurities[i].tunneling_T);
    CHECK(a.impurities[i].coupling_v == c.impurities[i].coupling_v);
    CHECK(a.impurities[i].coupling_v == d.impurities[i].coupling_v);
    CHECK(a.impurities[i].kind == ImpurityKind::Quantum);
    CHECK(c.impurities[i].kind == ImpurityKind::Classical);
  }
  const EnvironmentSpec e = sample_environment(78, 5, 5.0, KindPolicy::AllQuantum);
  CHECK(a.impurities[0].epsilon0 != e.impurities[0].epsilon0);

  CHECK(a.beta == 1.0);
  CHECK(a.band.n_states == 400);
  CHECK(a.time_grid.size() == 500);
  CHECK(a.time_grid.back() == doctest::Approx(25.0).epsilon(1e-15));
}

TEST_CASE("sampled parameters stay inside their supports") {
  const double t_lo = 0.3 * std::exp(-1.7);
  int quantum = 0, classical = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const EnvironmentSpec env = sample_environment(seed, 5, 5.0, KindPolicy::RandomMix);
    for (const Impurity& imp : env.impurities) {
      CHECK(imp.epsilon0 >= -5.0);
      CHECK(imp.epsilon0 <= 5.0);
      CHECK(imp.tunneling_T >= t_lo - 1e-12);
      CHECK(imp.tunneling_T <= 0.3 + 1e-12);
      CHECK(std::abs(imp.coupling_v - 1.0) < 1.0);  // ~10 sigma
      (imp.kind == ImpurityKind::Quantum ? quantum : classical)++;
    }
  }
  CHECK(quantum > 500);
  CHECK(classical > 500);
}

TEST_CASE("relaxation rate distribution is log-uniform (KS)") {
  // T = 0.3 exp(-1.7 z) with z ~ U[0,1] makes log Gamma uniform on
  // [log(1.8 pi) - 3.4, log(1.8 pi)].
  std::vector<double> gammas;
  for (std::uint64_t seed = 1000; seed < 1400; ++seed) {
    const EnvironmentSpec env = sample_environment(seed, 5, 5.0, KindPolicy::AllQuantum);
    for (const Impurity& imp : env.impurities) {
      gammas.push_back(decay_rate(imp.tunneling_T, env.band.dos_psi));
    }
  }
  std::sort(gammas.begin(), gammas.end());
  const int n = static_cast<int>(gammas.size());
  const double g_hi = 1.8 * kPi;
  double d_stat = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = std::clamp(1.0 + std::log(gammas[i] / g_hi) / 3.4, 0.0, 1.0);
    d_stat = std::max(d_stat, std::abs(cdf - (i + 1.0) / n));
    d_stat = std::max(d_stat, std::abs(cdf - static_cast<double>(i) / n));
  }
  const double p = kolmogorov_pvalue(d_stat, n);
  CHECK(p > 0.01);
}

TEST_CASE("relaxation and switching rates") {
  CHECK(decay_rate(0.3, 10.0) == doctest::Approx(1.8 * kPi).epsilon(1e-14));
  CHECK(decay_rate(0.1, 10.0) == doctest::Approx(0.2 * kPi).epsilon(1e-14));
  CHECK_THROWS_AS(decay_rate(-0.1, 10.0), std::invalid_argument);

  const double gamma = 2.0;
  SUBCASE("symmetric point splits evenly") {
    const SwitchingRates r = switching_rates(gamma, 1.0, 0.0);
    CHECK(r.gamma_plus == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.gamma_minus == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("detailed balance and exact sum") {
    for (const double eps : {-3.0, -0.5, 0.7, 2.5}) {
      const SwitchingRates r = switching_rates(gamma, 1.3, eps);
      CHECK(r.gamma_plus + r.gamma_minus == gamma);
      CHECK(r.gamma_plus / r.gamma_minus == doctest::Approx(std::exp(1.3 * eps)).epsilon(1e-12));
    }
  }
  SUBCASE("deep level decays at the full rate") {
    const SwitchingRates r = switching_rates(gamma, 1.0, 50.0);
    CHECK(r.gamma_plus == doctest::Approx(gamma).epsilon(1e-15));
    CHECK(r.gamma_minus >= 0.0);
  }
}

TEST_CASE("coupling measure and normalized parameters") {
  CHECK(coupling_measure(0.5, 2.0, 1.0, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(coupling_measure(1.0, 2.0, 1.0, 3.0) ==
        doctest::Approx(coupling_measure(1.0, 2.0, 1.0, -3.0)).epsilon(1e-15));

  Impurity imp;
  imp.epsilon0 = 0.0;
  imp.tunneling_T = std::exp(-2.0);
  imp.coupling_v = 0.5;
  const NormalizedParams np = normalized_params(imp, 1.0, 1.0);
  CHECK(np.e == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(np.t == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(np.w == doctest::Approx(0.5).epsilon(1e-15));

  imp.epsilon0 = std::acosh(2.0);  // cosh(beta eps0) = 2
  const NormalizedParams np2 = normalized_params(imp, 1.0, 1.0);
  CHECK(np2.e == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(np2.t == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(np2.w == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("regime validation thresholds") {
  EnvironmentSpec env;
  env.beta = 1.0;
  Impurity imp;
  imp.epsilon0 = 1.0;
  imp.tunneling_T = 0.15;
  imp.coupling_v = 0.3;
  env.impurities = {imp};
  env.time_grid = make_time_grid(500, 25.0);

  SUBCASE("representative environment passes every condition") {
    // beta W = 40, Gamma ~ 1.41: margin (1 + Gamma)/40 ~ 0.060, continuum
    // pi^2 psi^2 T^2 ~ 22.2, perturbative v^2/(2 Gamma) ~ 0.032.
    for (const ConditionReport& r : validate_environment(env, 0.0)) {
      INFO(r.name, " ratio=", r.ratio);
      CHECK(r.pass);
    }
    const auto reports = validate_environment(env, 0.0);
    CHECK(reports.size() == 4);
  }

  SUBCASE("fast switching fails the step-rate condition") {
    // Gamma = 5 at dt = 0.05 gives Gamma dt = 0.25 > 0.1.
    env.impurities[0].tunneling_T = std::sqrt(5.0 / (2.0 * kPi * 10.0));
    const auto reports = validate_environment(env, 0.05);
    REQUIRE(reports.size() == 5);
    bool found = false;
    for (const ConditionReport& r : reports) {
      if (r.name == "step_rate") {
        found = true;
        CHECK(r.ratio == doctest::Approx(0.25).epsilon(1e-12));
        CHECK_FALSE(r.pass);
      }
    }
    CHECK(found);
  }

  SUBCASE("levels near the band edge fail the margin condition") {
    env.impurities[0].epsilon0 = 10.0;
    bool margin_fail = false;
    for (const ConditionReport& r : validate_environment(env, 0.0)) {
      if (r.name == "band_margin") margin_fail = !r.pass;
    }
    CHECK(margin_fail);
  }

  SUBCASE("narrow band fails the thermal condition") {
    env.band = BandSpec{5.0, 10.0, 50, 0.0};
    bool thermal_fail = false;
    for (const ConditionReport& r : validate_environment(env, 0.0)) {
      if (r.name == "beta_bandwidth") thermal_fail = !r.pass;
    }
    CHECK(thermal_fail);
  }

  SUBCASE("strong coupling fails the perturbative condition") {
    env.impurities[0].coupling_v = 3.0;
    env.impurities[0].tunneling_T = 0.1;
    bool weak_fail = false;
    for (const ConditionReport& r : validate_environment(env, 0.0)) {
      if (r.name == "weak_coupling") weak_fail = !r.pass;
    }
    CHECK(weak_fail);
  }
}

TEST_CASE("json round trip preserves the environment exactly") {
  EnvironmentSpec env = sample_environment(9, 5, 5.0, KindPolicy::RandomMix);
  const std::string text = env_to_json(env);
  const EnvironmentSpec back = env_from_json(text);
  CHECK(back.beta == env.beta);
  REQUIRE(back.impurities.size() == env.impurities.size());
  for (std::size_t i = 0; i < env.impurities.size(); ++i) {
    CHECK(back.impurities[i].epsilon0 == env.impurities[i].epsilon0);
    CHECK(back.impurities[i].tunneling_T == env.impurities[i].tunneling_T);
    CHECK(back.impurities[i].coupling_v == env.impurities[i].coupling_v);
    CHECK(back.impurities[i].kind == env.impurities[i].kind);
  }
  CHECK(back.band.width_W == env.band.width_W);
  CHECK(back.band.dos_psi == env.band.dos_psi);
  CHECK(back.band.n_states == env.band.n_states);
  CHECK(back.band.chem_potential == env.band.chem_potential);
  REQUIRE(back.time_grid.size() == env.time_grid.size());
  for (std::size_t k = 0; k < env.time_grid.size(); ++k) {
    CHECK(back.time_grid[k] == env.time_grid[k]);
  }

  CHECK_THROWS_AS(env_from_json("not json"), std::invalid_argument);
  CHECK_THROWS_AS(env_from_json("{\"beta\": 1.0}"), std::invalid_argument);
}
