#pragma once

#include <vector>

#include <qenv/environment.hpp>
#include <qenv/numerics.hpp>
#include <qenv/trace.hpp>

namespace qenv {

// Single-particle description of one quantum impurity coupled to its band:
// h_env is the (1+n_states)-dimensional arrowhead Hamiltonian with the
// impurity level on slot 0 and the tunneling amplitude on the first
// row/column, q_op is the qubit-coupling operator (coupling_v on the impurity
// slot, zero elsewhere, rank 1), and occupation is the thermal single-particle
// density f_FD(h_env) at the construction (beta, mu).
struct SingleParticleSystem {
  HermitianMatrix h_env;
  HermitianMatrix q_op;
  HermitianMatrix occupation;
};

// Assembles the single-particle system for one quantum impurity. beta enters
// only through the occupation; mu is taken from band.chem_potential.
SingleParticleSystem build_single_particle(const Impurity& imp, const BandSpec& band,
                                           double beta = 1.0);

// Fermi-Dirac function of a Hermitian matrix, V f((lambda - mu) beta) V^dagger.
// Spectrum lands in (0, 1) and the result commutes with h.
HermitianMatrix fermi_occupation(const HermitianMatrix& h, double beta, double mu);

// Eigensystem of the arrowhead matrix [[epsilon0, T 1^T], [T 1, diag(levels)]]
// computed through its secular equation: omega holds the 1+levels.size()
// eigenvalues ascending (strictly interlacing the levels for T != 0), d the
// impurity component of each unit eigenvector, with sum d_i^2 = 1.
struct ArrowheadEigen {
  RealVector omega;
  RealVector d;
};
ArrowheadEigen arrowhead_eigensystem(double epsilon0, double T, const std::vector<double>& levels);

// Coherence of a qubit dephased by quantum impurities:
// D(t) = det{1 - n + e^{i(H-Q)t} e^{-i(H+Q)t} n} evaluated per impurity and
// multiplied (each impurity owns a distinct band copy, so the joint
// determinant factorizes exactly). D(0) = 1 exactly and |D(t)| <= 1 + 1e-9.
// Failures of the beta-bandwidth or continuum validity conditions are
// attached as warnings, not rejections.
VisibilityTrace visibility_quantum(const EnvironmentSpec& env);

// Same determinant evaluated densely: one Hermitian eigendecomposition of
// H +- Q per impurity, explicit propagator products and an LU log-determinant
// per time point. Shares no code path with visibility_quantum past the
// environment types; O(dim^3) per point, so meant for validation runs.
VisibilityTrace visibility_quantum_dense(const EnvironmentSpec& env);

// Many-body oracle: the same coherence computed as a trace over the joint
// 2^dim Fock space with the thermal environment state, where dim is the total
// single-particle dimension across impurities. Requires dim <= 12.
VisibilityTrace visibility_bruteforce(const EnvironmentSpec& env);

// Agreement between the diagonalized impurity weights d_i^2 and the analytic
// band profile L(omega) = [1 + pi^2 psi^2 T^2 + (omega - epsilon0)^2/T^2]^{-1}
// over eigenstates within +-3 widths of the impurity level.
struct LorentzianReport {
  double max_rel_dev = 0.0;        // max|d_i^2 - L| / max L over the window
  double max_pointwise_dev = 0.0;  // max|d_i^2 - L| / L over the window
  double weight_sum_defect = 0.0;  // |sum_i d_i^2 - 1|
  double top_weight = 0.0;         // largest single d_i^2
  double width = 0.0;              // 2|T| sqrt(1 + pi^2 psi^2 T^2)
  int n_window = 0;                // eigenstates inside the window
};
LorentzianReport lorentzian_check(const SingleParticleSystem& sys);

}  // namespace qenv
