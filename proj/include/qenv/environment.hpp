#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qenv {

enum class ImpurityKind { Quantum, Classical };

// One two-level defect. epsilon0 is the level energy in units of 1/beta,
// tunneling_T the impurity-band tunneling amplitude (quantum model), and
// coupling_v the dephasing shift it imprints on the qubit.
struct Impurity {
  double epsilon0 = 0.0;
  double tunneling_T = 0.1;  // > 0
  double coupling_v = 1.0;
  ImpurityKind kind = ImpurityKind::Quantum;
};

// Discretized electronic band: n_states levels evenly spaced by 1/dos_psi,
// level k at -width_W/2 + k/dos_psi. n_states must equal
// round(width_W * dos_psi); n_states = 0 is the degenerate no-band case used
// for isolated impurities.
struct BandSpec {
  double width_W = 40.0;
  double dos_psi = 10.0;
  int n_states = 400;
  double chem_potential = 0.0;

  std::vector<double> levels() const;
};

struct EnvironmentSpec {
  double beta = 1.0;  // > 0
  std::vector<Impurity> impurities;
  BandSpec band;
  std::vector<double> time_grid;  // strictly increasing, starts at 0
};

enum class KindPolicy { AllQuantum, AllClassical, RandomMix };

// Uniform time grid of n points covering [0, t_max].
std::vector<double> make_time_grid(int n, double t_max);

// Checks the EnvironmentSpec invariants; throws std::invalid_argument with a
// description of the first violation.
void check_environment(const EnvironmentSpec& env);

// Draws an environment: energies uniform on [-energy_halfwidth,
// +energy_halfwidth], tunneling T = 0.3 exp(-1.7 z) with z uniform on [0,1],
// couplings v = 1 + 0.1 * standard normal; beta = 1, default band, 500 grid
// points on [0, 25]. The (epsilon0, T, v) draws depend only on (seed, n_imp),
// never on the kind policy, so AllQuantum and AllClassical calls with equal
// seeds give pairwise identical parameters.
EnvironmentSpec sample_environment(std::uint64_t seed, int n_imp, double energy_halfwidth,
                                   KindPolicy policy);

// Fermi golden rule relaxation rate Gamma = 2 pi psi T^2.
double decay_rate(double T, double psi);

// Telegraph switching rates gamma_plus = Gamma / (1 + exp(-beta epsilon0))
// (decay of the occupied state) and gamma_minus = Gamma - gamma_plus
// (excitation), so the pair sums to Gamma exactly and satisfies detailed
// balance gamma_plus/gamma_minus = exp(beta epsilon0).
struct SwitchingRates {
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;
};
SwitchingRates switching_rates(double Gamma, double beta, double epsilon0);

// Coupling measure eta = v / (Gamma cosh(beta epsilon0)); even in epsilon0.
double coupling_measure(double v, double Gamma, double beta, double epsilon0);

// Normalized impurity parameters e = 1/cosh(beta epsilon0),
// t = -log(T t_exp)/cosh(beta epsilon0), w = v/cosh(beta epsilon0).
struct NormalizedParams {
  double e = 0.0;
  double t = 0.0;
  double w = 0.0;
};
NormalizedParams normalized_params(const Impurity& imp, double beta, double t_exp);

// One validity condition: the regime holds when ratio >= 10 for lower-bounded
// conditions and ratio <= 0.1 for upper-bounded ones.
struct ConditionReport {
  std::string name;
  double ratio = 0.0;
  bool pass = false;
};

// Evaluates the band-continuum and sampling-regime conditions:
// beta*W >= 10, max|epsilon0 +- Gamma|/W <= 0.1, min pi^2 psi^2 T^2 >= 10,
// (max v)^2/(2 max Gamma) <= 0.1, and, when dt > 0, max Gamma * dt <= 0.1.
std::vector<ConditionReport> validate_environment(const EnvironmentSpec& env, double dt);

// ----- JSON interchange -----

std::string env_to_json(const EnvironmentSpec& env);
EnvironmentSpec env_from_json(const std::string& json_text);

}  // namespace qenv
