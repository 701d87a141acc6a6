#include "qenv/transmon.hpp"

#include <cmath>
#include <stdexcept>

namespace qenv {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;

void require_positive_energies(const TransmonParams& p) {
  if (p.E_C <= 0.0 || p.E_J <= 0.0) {
    throw std::invalid_argument("transmon: E_C and E_J must be positive");
  }
}
}  // namespace

double energy_splitting(const TransmonParams& p) {
  require_positive_energies(p);
  return std::sqrt(8.0 * p.E_C * p.E_J) - p.E_C;
}

double charge_dispersion(const TransmonParams& p) {
  require_positive_energies(p);
  const double eps1 = -512.0 * p.E_C * std::sqrt(2.0 / kPi) *
                      std::pow(p.E_J / (2.0 * p.E_C), 1.25) *
                      std::exp(-std::sqrt(8.0 * p.E_J / p.E_C));
  return kPi * eps1 * std::sin(2.0 * kPi * p.n_g);
}

double current_dispersion(const TransmonParams& p) {
  if (p.I_c <= 0.0) {
    throw std::invalid_argument("transmon: I_c must be positive");
  }
  return energy_splitting(p) / (2.0 * p.I_c);
}

double flux_dispersion(const TransmonParams& p) {
  require_positive_energies(p);
  const double x = p.Phi / p.Phi0;
  const double frac = x - std::round(x);  // in [-0.5, 0.5]
  if (std::abs(std::abs(frac) - 0.5) < 1e-6) {
    throw std::invalid_argument("transmon: sweet-spot divergence, flux within 1e-6*Phi0 of half-integer");
  }
  const double s = std::sin(kPi * x);
  const double t = std::tan(kPi * x);
  return (2.0 * kPi / p.Phi0) * std::sqrt(p.E_C * p.E_J * std::abs(s * t));
}

double coupling_strength(double dispersion, double delta_lambda) {
  if (!std::isfinite(dispersion) || !std::isfinite(delta_lambda)) {
    throw std::invalid_argument("coupling_strength: inputs must be finite");
  }
  return dispersion * delta_lambda;
}

}  // namespace qenv
