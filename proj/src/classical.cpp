#include "qenv/classical.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qenv/numerics.hpp"
#include "qenv/rng.hpp"

namespace qenv {

// ----- trajectory sampling -----

RtnTrajectory sample_trajectory(std::uint64_t seed, double gamma_plus, double gamma_minus,
                                double beta, double epsilon0, double dt, int n_steps) {
  if (gamma_plus < 0.0 || gamma_minus < 0.0) {
    throw std::invalid_argument("sample_trajectory: switching rates must be non-negative");
  }
  if (!(dt > 0.0) || n_steps < 0) {
    throw std::invalid_argument("sample_trajectory: dt must be positive and n_steps >= 0");
  }
  if ((gamma_plus + gamma_minus) * dt > 0.1) {
    throw std::invalid_argument(
        "sample_trajectory: (gamma_plus + gamma_minus) dt exceeds 0.1, refine the step");
  }

  RtnTrajectory out;
  out.dt = dt;
  out.seed = seed;
  out.values.resize(static_cast<std::size_t>(n_steps) + 1);

  Rng rng(seed);
  const double p_occupied = 1.0 / (1.0 + std::exp(beta * epsilon0));
  int state = rng.uniform() < p_occupied ? 1 : 0;
  out.values[0] = state;

  const double p_down = gamma_plus * dt;
  const double p_up = gamma_minus * dt;
  for (int k = 1; k <= n_steps; ++k) {
    const double u = rng.uniform();
    if (state == 1) {
      if (u < p_down) state = 0;
    } else {
      if (u < p_up) state = 1;
    }
    out.values[k] = state;
  }
  return out;
}

// ----- averaged visibility -----

namespace {

// Compensated accumulator: the trajectory average must not depend on how a
// parallel schedule would group the terms.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

VisibilityTrace visibility_classical(const EnvironmentSpec& env, int n_traj,
                                     std::uint64_t seed) {
  check_environment(env);
  for (const Impurity& imp : env.impurities) {
    if (imp.kind != ImpurityKind::Classical) {
      throw std::invalid_argument("visibility_classical: impurity kind must be Classical");
    }
  }
  if (n_traj < 1) throw std::invalid_argument("visibility_classical: n_traj must be >= 1");

  const int nt = static_cast<int>(env.time_grid.size());
  VisibilityTrace trace;
  trace.time_grid = env.time_grid;
  trace.values = ComplexVector::Ones(nt);
  if (nt == 1 || env.impurities.empty()) return trace;

  const double spacing = env.time_grid[1] - env.time_grid[0];
  for (int k = 1; k + 1 < nt; ++k) {
    if (std::abs(env.time_grid[k + 1] - env.time_grid[k] - spacing) > 1e-9 * spacing) {
      throw std::invalid_argument("visibility_classical: time grid must be uniform");
    }
  }

  double gamma_max = 0.0;
  for (const Impurity& imp : env.impurities) {
    gamma_max = std::max(gamma_max, decay_rate(imp.tunneling_T, env.band.dos_psi));
  }
  const int refine = std::max(1, static_cast<int>(std::ceil(gamma_max * spacing / 0.05)));
  const double dt = spacing / refine;
  const int n_steps = (nt - 1) * refine;

  for (std::size_t i = 0; i < env.impurities.size(); ++i) {
    const Impurity& imp = env.impurities[i];
    if (imp.coupling_v == 0.0) continue;
    const double gamma = decay_rate(imp.tunneling_T, env.band.dos_psi);
    const SwitchingRates rates = switching_rates(gamma, env.beta, imp.epsilon0);
    const std::uint64_t imp_seed = mix_seed(seed, i);

    std::vector<KahanSum> acc_re(nt), acc_im(nt);
    for (int r = 0; r < n_traj; ++r) {
      const RtnTrajectory traj =
          sample_trajectory(mix_seed(imp_seed, static_cast<std::uint64_t>(r)),
                            rates.gamma_plus, rates.gamma_minus, env.beta, imp.epsilon0,
                            dt, n_steps);
      acc_re[0].add(1.0);
      double phase = 0.0;
      for (int g = 1; g < nt; ++g) {
        for (int s = (g - 1) * refine; s < g * refine; ++s) {
          phase += imp.coupling_v * traj.values[s] * dt;
        }
        acc_re[g].add(std::cos(phase));
        acc_im[g].add(std::sin(phase));
      }
    }
    for (int g = 0; g < nt; ++g) {
      trace.values[g] *= Complex{acc_re[g].sum / n_traj, acc_im[g].sum / n_traj};
    }
  }

  const double bound = 1.0 + 3.0 / std::sqrt(static_cast<double>(n_traj));
  for (int g = 0; g < nt; ++g) {
    if (std::abs(trace.values[g]) > bound) {
      throw std::runtime_error(
          "visibility_classical: trajectory average exceeded the statistical bound");
    }
  }
  return trace;
}

}  // namespace qenv
