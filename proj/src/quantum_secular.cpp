#include <qenv/quantum.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qenv {

namespace {

// Secular function f(x) = x - epsilon0 - T^2 sum_k 1/(x - lev_k) and its
// derivative; strictly increasing on every open interval between poles, so
// each interval brackets exactly one eigenvalue.
struct SecularEval {
  double f = 0.0;
  double df = 0.0;
};

SecularEval secular(double x, double epsilon0, double T2, const std::vector<double>& lev) {
  double s = 0.0;
  double s2 = 0.0;
  for (double l : lev) {
    const double inv = 1.0 / (x - l);
    s += inv;
    s2 += inv * inv;
  }
  return {x - epsilon0 - T2 * s, 1.0 + T2 * s2};
}

// Root of the secular function inside the open bracket (lo, hi), where
// f(lo+) = -inf and f(hi-) = +inf (or the finite outer bounds). Bisection
// narrows the bracket, Newton polishes; every Newton step is clipped to the
// current bracket so hugging roots stay enclosed.
double secular_root(double lo, double hi, double epsilon0, double T2,
                    const std::vector<double>& lev) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 12; ++it) {
    if (secular(x, epsilon0, T2, lev).f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    x = 0.5 * (lo + hi);
  }
  for (int it = 0; it < 60; ++it) {
    const SecularEval e = secular(x, epsilon0, T2, lev);
    if (e.f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double next = x - e.f / e.df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * 2.220446049250313e-16 * (std::abs(x) + 1.0)) return next;
    x = next;
  }
  return x;
}

ArrowheadEigen decoupled_eigensystem(double epsilon0, const std::vector<double>& lev) {
  const int n = static_cast<int>(lev.size());
  ArrowheadEigen out;
  out.omega.resize(n + 1);
  out.d = RealVector::Zero(n + 1);
  const auto pos = std::lower_bound(lev.begin(), lev.end(), epsilon0) - lev.begin();
  for (int k = 0; k < pos; ++k) out.omega[k] = lev[k];
  out.omega[pos] = epsilon0;
  out.d[pos] = 1.0;
  for (int k = static_cast<int>(pos); k < n; ++k) out.omega[k + 1] = lev[k];
  return out;
}

}  // namespace

// ----- arrowhead eigensystem -----

ArrowheadEigen arrowhead_eigensystem(double epsilon0, double T, const std::vector<double>& lev) {
  const int n = static_cast<int>(lev.size());
  if (!std::is_sorted(lev.begin(), lev.end())) {
    throw std::invalid_argument("arrowhead_eigensystem: levels must be ascending");
  }
  if (n == 0) {
    ArrowheadEigen out;
    out.omega = RealVector::Constant(1, epsilon0);
    out.d = RealVector::Constant(1, 1.0);
    return out;
  }
  if (std::abs(T) < 1e-300) return decoupled_eigensystem(epsilon0, lev);

  const double T2 = T * T;
  const double reach = std::abs(T) * std::sqrt(static_cast<double>(n)) + 1.0;
  const double lo_outer = std::min(epsilon0, lev.front()) - reach;
  const double hi_outer = std::max(epsilon0, lev.back()) + reach;

  ArrowheadEigen out;
  out.omega.resize(n + 1);
  out.d.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double lo = (i == 0) ? lo_outer : lev[i - 1];
    const double hi = (i == n) ? hi_outer : lev[i];
    const double root = secular_root(lo, hi, epsilon0, T2, lev);
    out.omega[i] = root;
    // Unit-eigenvector impurity component: d_i^2 = 1/f'(omega_i), a sum of
    // positive terms, so no cancellation enters the weights.
    out.d[i] = std::sqrt(1.0 / secular(root, epsilon0, T2, lev).df);
  }
  return out;
}

// ----- single-particle assembly -----

SingleParticleSystem build_single_particle(const Impurity& imp, const BandSpec& band, double beta) {
  if (imp.kind != ImpurityKind::Quantum) {
    throw std::invalid_argument("build_single_particle: impurity kind must be Quantum");
  }
  const std::vector<double> lev = band.levels();
  const int dim = 1 + band.n_states;

  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  h(0, 0) = imp.epsilon0;
  for (int k = 0; k < band.n_states; ++k) {
    h(0, k + 1) = imp.tunneling_T;
    h(k + 1, 0) = imp.tunneling_T;
    h(k + 1, k + 1) = lev[k];
  }

  ComplexMatrix q = ComplexMatrix::Zero(dim, dim);
  q(0, 0) = imp.coupling_v;

  HermitianMatrix h_env{h};
  HermitianMatrix occupation = fermi_occupation(h_env, beta, band.chem_potential);
  return {std::move(h_env), HermitianMatrix{q}, std::move(occupation)};
}

HermitianMatrix fermi_occupation(const HermitianMatrix& h, double beta, double mu) {
  if (!(beta > 0.0)) throw std::invalid_argument("fermi_occupation: beta must be positive");
  const Eigensystem es = eig_hermitian(h);
  RealVector f(es.values.size());
  for (int k = 0; k < f.size(); ++k) {
    // 1/(1 + e^x) saturates cleanly at both overflow ends.
    f[k] = 1.0 / (1.0 + std::exp(beta * (es.values[k] - mu)));
  }
  ComplexMatrix n = es.vectors * f.asDiagonal() * es.vectors.adjoint();
  // Symmetrize away the eigendecomposition round-off so construction passes
  // the Hermiticity gate exactly.
  n = 0.5 * (n + n.adjoint()).eval();
  return HermitianMatrix{std::move(n)};
}

}  // namespace qenv
