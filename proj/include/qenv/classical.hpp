#pragma once

#include <cstdint>
#include <vector>

#include <qenv/environment.hpp>
#include <qenv/trace.hpp>

namespace qenv {

// One discrete-step telegraph realization: values[k] = xi(k dt) in {0, 1} for
// k = 0..n_steps, reproducible bit-for-bit from the seed.
struct RtnTrajectory {
  std::vector<int> values;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

// Markov sampling of the telegraph process: per-step flip probability
// gamma_plus*dt out of state 1 and gamma_minus*dt out of state 0; the initial
// state is thermal, P(xi(0) = 1) = 1/(1 + e^{beta epsilon0}). Requires
// (gamma_plus + gamma_minus)*dt <= 0.1 so single-step flip probabilities stay
// in the first-order regime.
RtnTrajectory sample_trajectory(std::uint64_t seed, double gamma_plus, double gamma_minus,
                                double beta, double epsilon0, double dt, int n_steps);

// Coherence of a qubit dephased by classical telegraph fluctuators:
// D(t) = prod_i <e^{i v_i int_0^t xi_i dt'}>, each factor averaged over n_traj
// independent trajectories with the phase integral taken as a left-endpoint
// Riemann sum. The trajectory step refines the grid spacing until
// Gamma*dt <= 0.05 for the fastest fluctuator. Trajectory streams are derived
// per (impurity, trajectory) pair from the master seed, so results do not
// depend on evaluation order. D(0) = 1 exactly and |D| <= 1 + 3/sqrt(n_traj).
VisibilityTrace visibility_classical(const EnvironmentSpec& env, int n_traj = 500,
                                     std::uint64_t seed = 0);

}  // namespace qenv
