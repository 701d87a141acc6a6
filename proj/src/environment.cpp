#include "qenv/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qenv/rng.hpp"

namespace qenv {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

std::vector<double> BandSpec::levels() const {
  if (n_states == 0) return {};  // isolated impurities: no band levels
  if (n_states < 0 || dos_psi <= 0.0 || width_W <= 0.0) {
    throw std::invalid_argument("BandSpec: width_W, dos_psi, n_states must be positive");
  }
  if (n_states != static_cast<int>(std::lround(width_W * dos_psi))) {
    throw std::invalid_argument("BandSpec: n_states must equal round(width_W * dos_psi)");
  }
  std::vector<double> out(static_cast<std::size_t>(n_states));
  for (int k = 0; k < n_states; ++k) {
    out[static_cast<std::size_t>(k)] = -width_W / 2.0 + k / dos_psi;
  }
  return out;
}

std::vector<double> make_time_grid(int n, double t_max) {
  if (n < 2 || t_max <= 0.0) {
    throw std::invalid_argument("make_time_grid: need n >= 2 and t_max > 0");
  }
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    grid[static_cast<std::size_t>(k)] = t_max * k / (n - 1);
  }
  grid[0] = 0.0;
  return grid;
}

void check_environment(const EnvironmentSpec& env) {
  if (env.beta <= 0.0) {
    throw std::invalid_argument("EnvironmentSpec: beta must be positive");
  }
  env.band.levels();
  for (const Impurity& imp : env.impurities) {
    if (imp.tunneling_T <= 0.0) {
      throw std::invalid_argument("EnvironmentSpec: tunneling_T must be positive");
    }
  }
  if (env.time_grid.empty() || env.time_grid.front() != 0.0) {
    throw std::invalid_argument("EnvironmentSpec: time grid must start at 0");
  }
  for (std::size_t k = 1; k < env.time_grid.size(); ++k) {
    if (env.time_grid[k] <= env.time_grid[k - 1]) {
      throw std::invalid_argument("EnvironmentSpec: time grid must be strictly increasing");
    }
  }
}

EnvironmentSpec sample_environment(std::uint64_t seed, int n_imp, double energy_halfwidth,
                                   KindPolicy policy) {
  if (n_imp < 1 || energy_halfwidth <= 0.0) {
    throw std::invalid_argument("sample_environment: need n_imp >= 1 and energy_halfwidth > 0");
  }
  EnvironmentSpec env;
  env.beta = 1.0;
  env.band = BandSpec{};
  env.time_grid = make_time_grid(500, 25.0);
  env.impurities.resize(static_cast<std::size_t>(n_imp));

  // Parameter draws come from a stream independent of the kind policy so that
  // equal seeds give pairwise identical (epsilon0, T, v) across policies.
  Rng params(mix_seed(seed, 0));
  for (Impurity& imp : env.impurities) {
    imp.epsilon0 = params.uniform(-energy_halfwidth, energy_halfwidth);
    imp.tunneling_T = 0.3 * std::exp(-1.7 * params.uniform());
    imp.coupling_v = 1.0 + 0.1 * params.normal();
  }
  Rng kinds(mix_seed(seed, 1));
  for (Impurity& imp : env.impurities) {
    switch (policy) {
      case KindPolicy::AllQuantum:
        imp.kind = ImpurityKind::Quantum;
        break;
      case KindPolicy::AllClassical:
        imp.kind = ImpurityKind::Classical;
        break;
      case KindPolicy::RandomMix:
        imp.kind = kinds.uniform() < 0.5 ? ImpurityKind::Quantum : ImpurityKind::Classical;
        break;
    }
  }
  return env;
}

double decay_rate(double T, double psi) {
  if (T < 0.0 || psi <= 0.0) {
    throw std::invalid_argument("decay_rate: need T >= 0 and psi > 0");
  }
  return 2.0 * kPi * psi * T * T;
}

SwitchingRates switching_rates(double Gamma, double beta, double epsilon0) {
  if (Gamma < 0.0) {
    throw std::invalid_argument("switching_rates: Gamma must be nonnegative");
  }
  const double gp = Gamma / (1.0 + std::exp(-beta * epsilon0));
  return {gp, Gamma - gp};
}

double coupling_measure(double v, double Gamma, double beta, double epsilon0) {
  if (Gamma <= 0.0) {
    throw std::invalid_argument("coupling_measure: Gamma must be positive");
  }
  return v / (Gamma * std::cosh(beta * epsilon0));
}

NormalizedParams normalized_params(const Impurity& imp, double beta, double t_exp) {
  if (imp.tunneling_T * t_exp <= 0.0) {
    throw std::invalid_argument("normalized_params: T * t_exp must be positive");
  }
  const double c = std::cosh(beta * imp.epsilon0);
  return {1.0 / c, -std::log(imp.tunneling_T * t_exp) / c, imp.coupling_v / c};
}

std::vector<ConditionReport> validate_environment(const EnvironmentSpec& env, double dt) {
  check_environment(env);
  std::vector<ConditionReport> out;
  const double W = env.band.width_W;
  const double psi = env.band.dos_psi;

  const double beta_w = env.beta * W;
  out.push_back({"beta_bandwidth", beta_w, beta_w >= 10.0});

  double edge = 0.0, min_cont = std::numeric_limits<double>::infinity();
  double vmax = 0.0, gmax = 0.0;
  for (const Impurity& imp : env.impurities) {
    const double g = decay_rate(imp.tunneling_T, psi);
    edge = std::max(edge, std::max(std::abs(imp.epsilon0 + g), std::abs(imp.epsilon0 - g)));
    min_cont = std::min(min_cont, kPi * kPi * psi * psi * imp.tunneling_T * imp.tunneling_T);
    vmax = std::max(vmax, std::abs(imp.coupling_v));
    gmax = std::max(gmax, g);
  }
  if (!env.impurities.empty()) {
    out.push_back({"band_margin", edge / W, edge / W <= 0.1});
    out.push_back({"continuum", min_cont, min_cont >= 10.0});
    if (gmax > 0.0) {
      const double weak = vmax * vmax / (2.0 * gmax);
      out.push_back({"weak_coupling", weak, weak <= 0.1});
    }
    if (dt > 0.0) {
      out.push_back({"step_rate", gmax * dt, gmax * dt <= 0.1});
    }
  }
  return out;
}

// ----- JSON interchange -----

namespace {
std::string kind_name(ImpurityKind k) {
  return k == ImpurityKind::Quantum ? "Quantum" : "Classical";
}

ImpurityKind kind_from_name(const std::string& s) {
  if (s == "Quantum") return ImpurityKind::Quantum;
  if (s == "Classical") return ImpurityKind::Classical;
  throw std::invalid_argument("env_from_json: unknown impurity kind '" + s + "'");
}
}  // namespace

std::string env_to_json(const EnvironmentSpec& env) {
  nlohmann::json j;
  j["beta"] = env.beta;
  j["impurities"] = nlohmann::json::array();
  for (const Impurity& imp : env.impurities) {
    j["impurities"].push_back({{"epsilon0", imp.epsilon0},
                               {"tunneling_T", imp.tunneling_T},
                               {"coupling_v", imp.coupling_v},
                               {"kind", kind_name(imp.kind)}});
  }
  j["band"] = {{"width_W", env.band.width_W},
               {"dos_psi", env.band.dos_psi},
               {"n_states", env.band.n_states},
               {"chem_potential", env.band.chem_potential}};
  j["time_grid"] = env.time_grid;
  return j.dump(2);
}

EnvironmentSpec env_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("env_from_json: ") + e.what());
  }
  EnvironmentSpec env;
  try {
    env.beta = j.at("beta").get<double>();
    env.impurities.clear();
    for (const auto& ji : j.at("impurities")) {
      Impurity imp;
      imp.epsilon0 = ji.at("epsilon0").get<double>();
      imp.tunneling_T = ji.at("tunneling_T").get<double>();
      imp.coupling_v = ji.at("coupling_v").get<double>();
      imp.kind = kind_from_name(ji.at("kind").get<std::string>());
      env.impurities.push_back(imp);
    }
    const auto& jb = j.at("band");
    env.band.width_W = jb.at("width_W").get<double>();
    env.band.dos_psi = jb.at("dos_psi").get<double>();
    env.band.n_states = jb.at("n_states").get<int>();
    env.band.chem_potential = jb.at("chem_potential").get<double>();
    env.time_grid = j.at("time_grid").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("env_from_json: ") + e.what());
  }
  check_environment(env);
  return env;
}

}  // namespace qenv
