#include <qenv/quantum.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qenv {

namespace {

constexpr Complex kI{0.0, 1.0};

// Lifts a single-particle operator h to the 2^dim Fock space through
// sum_{ij} h_ij c^dagger_i c_j with Jordan-Wigner parity signs. Enumerating
// bit masks keeps this implementation free of any shared code with the
// determinant route.
RealMatrix lift_to_fock(const RealMatrix& h) {
  const int dim = static_cast<int>(h.rows());
  const std::uint32_t fock = 1u << dim;
  RealMatrix out = RealMatrix::Zero(fock, fock);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      if (h(i, j) == 0.0) continue;
      for (std::uint32_t s = 0; s < fock; ++s) {
        if (!(s & (1u << j))) continue;
        const std::uint32_t mid = s ^ (1u << j);
        if (mid & (1u << i)) continue;
        const std::uint32_t t = mid | (1u << i);
        const int parity = std::popcount(s & ((1u << j) - 1u)) +
                           std::popcount(mid & ((1u << i) - 1u));
        out(t, s) += (parity % 2 == 0 ? 1.0 : -1.0) * h(i, j);
      }
    }
  }
  return out;
}

}  // namespace

VisibilityTrace visibility_bruteforce(const EnvironmentSpec& env) {
  check_environment(env);
  const std::vector<double> lev = env.band.levels();
  const int block = 1 + env.band.n_states;
  const int dim = block * static_cast<int>(env.impurities.size());
  if (dim > 12) {
    throw std::invalid_argument("visibility_bruteforce: total single-particle dimension exceeds 12");
  }
  for (const Impurity& imp : env.impurities) {
    if (imp.kind != ImpurityKind::Quantum) {
      throw std::invalid_argument("visibility_bruteforce: all impurities must be Quantum");
    }
  }

  // Joint single-particle matrices: one arrowhead block per impurity (each
  // impurity owns a distinct band copy), qubit coupling on the impurity slots.
  RealMatrix h_env = RealMatrix::Zero(dim, dim);
  RealMatrix q_op = RealMatrix::Zero(dim, dim);
  for (std::size_t m = 0; m < env.impurities.size(); ++m) {
    const int off = static_cast<int>(m) * block;
    h_env(off, off) = env.impurities[m].epsilon0;
    for (int k = 0; k < env.band.n_states; ++k) {
      h_env(off, off + 1 + k) = env.impurities[m].tunneling_T;
      h_env(off + 1 + k, off) = env.impurities[m].tunneling_T;
      h_env(off + 1 + k, off + 1 + k) = lev[static_cast<std::size_t>(k)];
    }
    q_op(off, off) = env.impurities[m].coupling_v;
  }

  const RealMatrix fock_minus = lift_to_fock(h_env - q_op);
  const RealMatrix fock_plus = lift_to_fock(h_env + q_op);
  const RealMatrix fock_grand =
      lift_to_fock(h_env - env.band.chem_potential * RealMatrix::Identity(dim, dim));

  Eigen::SelfAdjointEigenSolver<RealMatrix> esm(fock_minus), esp(fock_plus), esg(fock_grand);
  const RealVector lam_minus = esm.eigenvalues();
  const RealVector lam_plus = esp.eigenvalues();

  // Thermal weights shifted by the ground state so the exponentials stay
  // finite at any beta.
  RealVector gibbs =
      (-env.beta * (esg.eigenvalues().array() - esg.eigenvalues().minCoeff())).exp().matrix();
  gibbs /= gibbs.sum();

  // D(t) = sum_{ab} e^{i lam-_a t} e^{-i lam+_b t} P_ab R_ba with
  // P = V-^T V+ and R = V+^T rho V-; both are real, so each time point is two
  // real matrix-vector products.
  const RealMatrix cross = esm.eigenvectors().transpose() * esp.eigenvectors();
  const RealMatrix gm = esg.eigenvectors().transpose() * esm.eigenvectors();
  const RealMatrix gp = esg.eigenvectors().transpose() * esp.eigenvectors();
  const RealMatrix rho_mixed = gp.transpose() * gibbs.asDiagonal() * gm;  // R, indexed (b, a)
  const RealMatrix kernel = cross.cwiseProduct(rho_mixed.transpose());

  const int nt = static_cast<int>(env.time_grid.size());
  VisibilityTrace trace{env.time_grid, ComplexVector(nt), {}};
  const int fock = static_cast<int>(kernel.rows());
  ComplexVector u(fock);
  RealVector wr(fock), wi(fock);
  for (int i = 0; i < nt; ++i) {
    const double t = env.time_grid[i];
    for (int k = 0; k < fock; ++k) {
      u[k] = std::exp(kI * lam_minus[k] * t);
      wr[k] = std::cos(lam_plus[k] * t);
      wi[k] = -std::sin(lam_plus[k] * t);
    }
    const RealVector kwr = kernel * wr;
    const RealVector kwi = kernel * wi;
    Complex acc{0.0, 0.0};
    for (int k = 0; k < fock; ++k) acc += u[k] * Complex{kwr[k], kwi[k]};
    trace.values[i] = acc;
  }
  return trace;
}

}  // namespace qenv
