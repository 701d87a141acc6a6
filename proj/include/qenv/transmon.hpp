#pragma once

namespace qenv {

// Transmon circuit parameters in angular-frequency units (hbar = 1).
struct TransmonParams {
  double E_C = 1.0;    // charging energy, > 0
  double E_J = 50.0;   // Josephson energy, > 0
  double n_g = 0.0;    // dimensionless gate charge
  double I_c = 1.0;    // critical current, > 0
  double Phi = 0.0;    // external flux
  double Phi0 = 1.0;   // flux quantum

  // The closed-form dispersions below assume this regime.
  bool in_transmon_regime() const { return E_J / E_C >= 20.0; }
};

// Qubit energy splitting sqrt(8 E_C E_J) - E_C.
double energy_splitting(const TransmonParams& p);

// dE01/dn_g = pi * eps1 * sin(2 pi n_g), with the exponentially small charge
// dispersion amplitude eps1 = -2^9 E_C sqrt(2/pi) (E_J/2E_C)^{5/4}
// exp(-sqrt(8 E_J/E_C)). Vanishes at n_g in {0, 1/2}.
double charge_dispersion(const TransmonParams& p);

// dE01/dI_c = (sqrt(8 E_J E_C) - E_C) / (2 I_c) = energy_splitting / (2 I_c).
double current_dispersion(const TransmonParams& p);

// dE01/dPhi = (2 pi / Phi0) sqrt(E_C E_J |sin(pi Phi/Phi0) tan(pi Phi/Phi0)|).
// Rejected within 1e-6 * Phi0 of half-integer flux where tan diverges.
double flux_dispersion(const TransmonParams& p);

// Qubit-impurity coupling v = dispersion * delta_lambda (first-order shift of
// the splitting under a parameter fluctuation of size delta_lambda).
double coupling_strength(double dispersion, double delta_lambda);

}  // namespace qenv
