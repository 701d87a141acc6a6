#include <qenv/quantum.hpp>

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <vector>

// Fortran entry points used on the hot path; OpenBLAS's zgemm3m does a
// complex product in three real multiplies. Eigen stores column-major, so
// matrices pass straight through.
extern "C" {
void zgemm3m_(const char* transa, const char* transb, const int* m, const int* n, const int* k,
              const std::complex<double>* alpha, const std::complex<double>* a, const int* lda,
              const std::complex<double>* b, const int* ldb, const std::complex<double>* beta,
              std::complex<double>* c, const int* ldc);
void zgetrf_(const int* m, const int* n, std::complex<double>* a, const int* lda, int* ipiv,
             int* info);
void zgetrs_(const char* trans, const int* n, const int* nrhs, const std::complex<double>* a,
             const int* lda, const int* ipiv, std::complex<double>* b, const int* ldb, int* info);
void dstev_(const char* jobz, const int* n, double* d, double* e, double* z, const int* ldz,
            double* work, int* info);
}

namespace qenv {

namespace {

constexpr int kBlockSteps = 32;     // grid steps advanced per anchored block
constexpr int kKrylovDepth = 56;    // truncation error ~2.5e-12; drops ~100x per +4 depth
constexpr double kBreakdown = 1e-13;
constexpr double kSeriesCut = 1e-4;  // |delta * tau| below which E uses its Taylor form
constexpr Complex kI{0.0, 1.0};

void gemm3m(char ta, char tb, int m, int n, int k, Complex alpha, const Complex* a, int lda,
            const Complex* b, int ldb, Complex beta, Complex* c, int ldc) {
  zgemm3m_(&ta, &tb, &m, &n, &k, &alpha, a, &lda, b, &ldb, &beta, c, &ldc);
}

// log det of a square matrix through its LU factorization; the matrix is
// overwritten with the factors and ipiv so the caller can reuse them for
// solves. Any 2 pi branch mismatch cancels when the caller exponentiates.
Complex lu_logdet(ComplexMatrix& a, std::vector<int>& ipiv) {
  const int n = static_cast<int>(a.rows());
  ipiv.resize(n);
  int info = 0;
  zgetrf_(&n, &n, a.data(), &n, ipiv.data(), &info);
  if (info < 0) throw std::runtime_error("lu_logdet: illegal argument to zgetrf");
  Complex ld{0.0, 0.0};
  int swaps = 0;
  for (int i = 0; i < n; ++i) {
    ld += std::log(a(i, i));
    if (ipiv[i] != i + 1) ++swaps;
  }
  if (swaps % 2 == 1) ld += Complex{0.0, 3.141592653589793238462643383279};
  return ld;
}

struct LanczosBasis {
  RealMatrix q;      // n x depth, orthonormal columns
  RealVector alpha;  // depth
  RealVector beta;   // depth - 1
};

// Lanczos on diag(omega) + sign v d d^T seeded with d, fully
// reorthogonalized each step; stops early on breakdown.
LanczosBasis lanczos(const RealVector& omega, const RealVector& d, double v, double sign,
                     int depth) {
  const int n = static_cast<int>(omega.size());
  RealMatrix q(n, depth);
  RealVector alpha(depth), beta(depth);
  RealVector vec = d / d.norm();
  int used = depth;
  for (int j = 0; j < depth; ++j) {
    q.col(j) = vec;
    RealVector hq = omega.cwiseProduct(vec) + (sign * v * d.dot(vec)) * d;
    alpha[j] = vec.dot(hq);
    RealVector r = hq - alpha[j] * vec;
    if (j > 0) r -= beta[j - 1] * q.col(j - 1);
    r -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * r);
    const double b = r.norm();
    if (b < kBreakdown) {
      used = j + 1;
      break;
    }
    beta[j] = b;
    vec = r / b;
  }
  return {q.leftCols(used), alpha.head(used), beta.head(std::max(used - 1, 0))};
}

struct TridiagEigen {
  RealVector val;
  RealMatrix vec;
};

TridiagEigen tridiag_eigensystem(const RealVector& alpha, const RealVector& beta) {
  const int n = static_cast<int>(alpha.size());
  TridiagEigen out;
  out.val = alpha;
  out.vec.resize(n, n);
  RealVector off = beta;
  RealVector work(std::max(2 * n - 2, 1));
  int info = 0;
  dstev_("V", &n, out.val.data(), off.data(), out.vec.data(), &n, work.data(), &info);
  if (info != 0) throw std::runtime_error("tridiag_eigensystem: dstev failed");
  return out;
}

// In-place panel update P <- exp(i t (diag(omega) + sign v d d^T)) P via a
// Chebyshev expansion on the spectral interval; the matrix is never formed,
// each term costs one O(n) matvec per column.
void chebyshev_propagate(const RealVector& omega, const ComplexVector& d_c, double v, double sign,
                         double t, ComplexMatrix& p) {
  if (t == 0.0) return;
  const double lo = omega.minCoeff() - std::abs(v) - 0.5;
  const double hi = omega.maxCoeff() + std::abs(v) + 0.5;
  const double center = 0.5 * (hi + lo);
  const double half = 0.5 * (hi - lo);
  const double theta = half * t;
  const double at = std::abs(theta);
  const int deg = static_cast<int>(at + 12.0 * std::cbrt(std::max(at, 1e-9)) + 14.0);

  // c_k = 2 i^k J_k(theta), c_0 halved; J_k(-x) = (-1)^k J_k(x).
  std::vector<Complex> coef(deg + 1);
  const Complex ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int k = 0; k <= deg; ++k) {
    double jk = std::cyl_bessel_j(static_cast<double>(k), at);
    if (theta < 0.0 && k % 2 == 1) jk = -jk;
    coef[k] = 2.0 * ipow[k % 4] * jk;
  }
  coef[0] *= 0.5;

  const ComplexVector scaled = ((omega.array() - center) / half).cast<Complex>();
  const Complex cv{sign * v / half, 0.0};

  ComplexMatrix t0 = p;
  ComplexMatrix t1 = (p.array().colwise() * scaled.array()).matrix() + cv * d_c * (d_c.transpose() * p);
  ComplexMatrix acc = coef[0] * t0 + coef[1] * t1;
  ComplexMatrix t2(p.rows(), p.cols());
  for (int k = 2; k <= deg; ++k) {
    t2 = 2.0 * ((t1.array().colwise() * scaled.array()).matrix() + cv * d_c * (d_c.transpose() * t1)) - t0;
    acc += coef[k] * t2;
    t0.swap(t1);
    t1.swap(t2);
  }
  p = std::exp(kI * center * t) * acc;
}

// One impurity's determinant curve D(t) = det{diag(1-f) + e^{iH_- t} e^{-iH_+ t} diag(f)}
// on the grid ts. U(tau) - 1 lies in the span of the two rank-limited Krylov
// spaces seeded by d, so each block of kBlockSteps grid points needs three
// n^2 l products against the running inverse anchor Z plus an l x l
// determinant per point; block determinants are multiplied as complex
// values, which leaves no phase branch to track.
ComplexVector block_visibility(const RealVector& omega, const RealVector& d, const RealVector& f,
                               double v, const std::vector<double>& ts) {
  const int n = static_cast<int>(omega.size());
  const int nt = static_cast<int>(ts.size());
  ComplexVector out(nt);
  out[0] = Complex{1.0, 0.0};
  if (nt == 1 || std::abs(v) < 1e-14) {
    out.setOnes();
    return out;
  }

  const int depth = std::min(kKrylovDepth, n);
  const LanczosBasis bm = lanczos(omega, d, v, -1.0, depth);
  const LanczosBasis bp = lanczos(omega, d, v, +1.0, depth);
  const TridiagEigen em = tridiag_eigensystem(bm.alpha, bm.beta);
  const TridiagEigen ep = tridiag_eigensystem(bp.alpha, bp.beta);
  const int lm = static_cast<int>(em.val.size());
  const int lp = static_cast<int>(ep.val.size());
  const ComplexMatrix sm = em.vec.cast<Complex>();
  const ComplexMatrix sp = ep.vec.cast<Complex>();
  const RealVector pm = em.vec.row(0);
  const RealVector pp = ep.vec.row(0);
  const ComplexVector d_c = d.cast<Complex>();

  const double dt0 = ts[1] - ts[0];
  bool uniform = true;
  for (int i = 1; i + 1 < nt; ++i) {
    if (std::abs(ts[i + 1] - ts[i] - dt0) > 1e-9 * dt0) uniform = false;
  }

  // Per-entry tables over the mixed spectrum: delta_ab = mu_a - nu_b,
  // pb = -2 i v p-_a p+_b, and for entries whose |delta tau| stays above the
  // Taylor cut across a whole block, E(delta, tau) = (e^{i delta tau} - 1)/(i delta)
  // through the running phase table w (one exp per block step pair).
  RealMatrix delta(lm, lp);
  ComplexMatrix pb(lm, lp), invid(lm, lp), phase_step(lm, lp);
  for (int b = 0; b < lp; ++b) {
    for (int a = 0; a < lm; ++a) {
      const double del = em.val[a] - ep.val[b];
      delta(a, b) = del;
      pb(a, b) = -2.0 * kI * v * pm[a] * pp[b];
      invid(a, b) = (std::abs(del) < 1e-300) ? Complex{0, 0} : pb(a, b) / (kI * del);
      phase_step(a, b) = std::exp(kI * del * dt0);
    }
  }
  auto fill_ct = [&](ComplexMatrix& ct, const ComplexMatrix& w, double tau) {
    for (int b = 0; b < lp; ++b) {
      for (int a = 0; a < lm; ++a) {
        const double x = delta(a, b) * tau;
        if (std::abs(x) < kSeriesCut) {
          ct(a, b) = pb(a, b) * tau * Complex{1.0 - x * x / 6.0, x * (0.5 - x * x / 24.0)};
        } else {
          ct(a, b) = invid(a, b) * (w(a, b) - 1.0);
        }
      }
    }
  };

  ComplexMatrix z = ComplexMatrix::Identity(n, n);
  ComplexMatrix qme = bm.q.cast<Complex>();
  ComplexMatrix qpe = bp.q.cast<Complex>();
  const ComplexVector f_c = f.cast<Complex>();
  ComplexMatrix x(n, lm), fq(n, lp), g(lp, lm), gh(lp, lm);
  ComplexMatrix ct_stack(kBlockSteps * lm, lp), prod_stack(kBlockSteps * lm, lm);
  ComplexMatrix a_mat(lm, lm), w(lm, lp), ct(lm, lp);
  ComplexMatrix vt(lp, n), mv(lm, n), y(lm, lp);
  std::vector<int> ipiv;
  const Complex one{1, 0}, zero{0, 0}, minus_one{-1, 0};

  Complex log_anchor{0.0, 0.0};
  int r = 0;
  while (r < nt - 1) {
    const int k_here = std::min(kBlockSteps, nt - 1 - r);
    gemm3m('N', 'N', n, lm, n, one, z.data(), n, qme.data(), n, zero, x.data(), n);
    fq = qpe.array().colwise() * f_c.array();
    gemm3m('T', 'N', lp, lm, n, one, fq.data(), n, x.data(), n, zero, g.data(), lp);
    gh = sp.transpose() * g * sm;

    // All k_here products Ct_m Gh go through one stacked GEMM; tiny
    // per-point calls waste most of the machine's throughput.
    w.setOnes();
    for (int m = 1; m <= k_here; ++m) {
      const double tau = uniform ? m * dt0 : ts[r + m] - ts[r];
      if (uniform) {
        w = w.cwiseProduct(phase_step);
      } else {
        for (int bb = 0; bb < lp; ++bb)
          for (int aa = 0; aa < lm; ++aa) w(aa, bb) = std::exp(kI * delta(aa, bb) * tau);
      }
      fill_ct(ct, w, tau);
      ct_stack.middleRows((m - 1) * lm, lm) = ct;
    }
    const int stack_rows = k_here * lm;
    const int full_rows = kBlockSteps * lm;
    gemm3m('N', 'N', stack_rows, lm, lp, one, ct_stack.data(), full_rows, gh.data(), lp, zero,
           prod_stack.data(), full_rows);

    Complex log_block{0.0, 0.0};
    for (int m = 1; m <= k_here; ++m) {
      a_mat = prod_stack.middleRows((m - 1) * lm, lm);
      a_mat.diagonal().array() += 1.0;
      log_block = lu_logdet(a_mat, ipiv);
      out[r + m] = std::exp(log_anchor + log_block);
    }

    // Advance the anchor: Woodbury update of Z = M(t_r)^{-1} using the LU
    // factors of the block-final A, then propagate the Krylov panels.
    y = ct_stack.middleRows((k_here - 1) * lm, lm);
    int info = 0;
    zgetrs_("N", &lm, &lp, a_mat.data(), &lm, ipiv.data(), y.data(), &lm, &info);
    if (info != 0) throw std::runtime_error("block_visibility: zgetrs failed");
    const ComplexMatrix mid = sm * y * sp.transpose();
    gemm3m('T', 'N', lp, n, n, one, fq.data(), n, z.data(), n, zero, vt.data(), lp);
    gemm3m('N', 'N', lm, n, lp, one, mid.data(), lm, vt.data(), lp, zero, mv.data(), lm);
    gemm3m('N', 'N', n, n, lm, minus_one, x.data(), n, mv.data(), lm, one, z.data(), n);
    log_anchor += log_block;

    const double tau_block = uniform ? k_here * dt0 : ts[r + k_here] - ts[r];
    chebyshev_propagate(omega, d_c, v, -1.0, +tau_block, qme);
    chebyshev_propagate(omega, d_c, v, +1.0, -tau_block, qpe);
    r += k_here;
  }
  return out;
}

// Isolated impurity (no band, or tunneling numerically zero): the determinant
// reduces to the two-level closed form with occupation nbar = f_FD(epsilon0).
ComplexVector isolated_visibility(double epsilon0, double beta, double mu, double v,
                                  const std::vector<double>& ts) {
  const double nbar = 1.0 / (1.0 + std::exp(beta * (epsilon0 - mu)));
  ComplexVector out(static_cast<int>(ts.size()));
  for (int i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - nbar) + nbar * std::exp(-2.0 * kI * v * ts[i]);
  }
  return out;
}

std::vector<std::string> validity_warnings(const EnvironmentSpec& env) {
  std::vector<std::string> out;
  for (const ConditionReport& c : validate_environment(env, 0.0)) {
    if (!c.pass && (c.name == "beta_bandwidth" || c.name == "continuum")) {
      std::ostringstream msg;
      msg << c.name << " condition failed (ratio " << c.ratio << ")";
      out.push_back(msg.str());
    }
  }
  return out;
}

void require_all_quantum(const EnvironmentSpec& env, const char* who) {
  for (const Impurity& imp : env.impurities) {
    if (imp.kind != ImpurityKind::Quantum) {
      throw std::invalid_argument(std::string(who) + ": all impurities must be Quantum");
    }
  }
}

}  // namespace

// ----- determinant evaluators -----

VisibilityTrace visibility_quantum(const EnvironmentSpec& env) {
  check_environment(env);
  require_all_quantum(env, "visibility_quantum");
  const int nt = static_cast<int>(env.time_grid.size());
  VisibilityTrace trace{env.time_grid, ComplexVector::Ones(nt), validity_warnings(env)};

  const std::vector<double> lev = env.band.levels();
  const double mu = env.band.chem_potential;
  for (const Impurity& imp : env.impurities) {
    if (std::abs(imp.coupling_v) < 1e-14) continue;
    if (env.band.n_states == 0 || imp.tunneling_T < 1e-12) {
      trace.values = trace.values.cwiseProduct(
          isolated_visibility(imp.epsilon0, env.beta, mu, imp.coupling_v, env.time_grid));
      continue;
    }
    const ArrowheadEigen ae = arrowhead_eigensystem(imp.epsilon0, imp.tunneling_T, lev);
    RealVector f(ae.omega.size());
    for (int k = 0; k < f.size(); ++k) {
      f[k] = 1.0 / (1.0 + std::exp(env.beta * (ae.omega[k] - mu)));
    }
    trace.values = trace.values.cwiseProduct(
        block_visibility(ae.omega, ae.d, f, imp.coupling_v, env.time_grid));
  }

  if (trace.values.cwiseAbs().maxCoeff() > 1.0 + 1e-9) {
    throw std::runtime_error("visibility_quantum: determinant bound |D| <= 1 violated");
  }
  return trace;
}

VisibilityTrace visibility_quantum_dense(const EnvironmentSpec& env) {
  check_environment(env);
  require_all_quantum(env, "visibility_quantum_dense");
  const int nt = static_cast<int>(env.time_grid.size());
  VisibilityTrace trace{env.time_grid, ComplexVector::Ones(nt), validity_warnings(env)};

  for (const Impurity& imp : env.impurities) {
    const SingleParticleSystem sys = build_single_particle(imp, env.band, env.beta);
    const int dim = sys.h_env.dim();
    const RealMatrix h = sys.h_env.raw().real();
    RealMatrix h_minus = h, h_plus = h;
    h_minus(0, 0) -= imp.coupling_v;
    h_plus(0, 0) += imp.coupling_v;
    Eigen::SelfAdjointEigenSolver<RealMatrix> esm(h_minus), esp(h_plus);
    const ComplexMatrix vm = esm.eigenvectors().cast<Complex>();
    const ComplexMatrix vp = esp.eigenvectors().cast<Complex>();
    const ComplexMatrix cross = vm.transpose() * vp;
    const ComplexMatrix occ = sys.occupation.raw();
    const ComplexMatrix one_minus = ComplexMatrix::Identity(dim, dim) - occ;

    for (int i = 0; i < nt; ++i) {
      const double t = env.time_grid[i];
      ComplexVector phm(dim), php(dim);
      for (int k = 0; k < dim; ++k) {
        phm[k] = std::exp(kI * esm.eigenvalues()[k] * t);
        php[k] = std::exp(-kI * esp.eigenvalues()[k] * t);
      }
      const ComplexMatrix u = (vm * phm.asDiagonal()) * cross * (php.asDiagonal() * vp.transpose());
      const ComplexMatrix m = one_minus + u * occ;
      Eigen::PartialPivLU<ComplexMatrix> lu(m);
      Complex ld{0.0, 0.0};
      for (int k = 0; k < dim; ++k) ld += std::log(lu.matrixLU()(k, k));
      const Complex det = std::exp(ld) * static_cast<double>(lu.permutationP().determinant());
      trace.values[i] *= (t == 0.0) ? Complex{1.0, 0.0} : det;
    }
  }
  return trace;
}

// ----- band profile diagnostic -----

LorentzianReport lorentzian_check(const SingleParticleSystem& sys) {
  const int dim = sys.h_env.dim();
  if (dim < 3) throw std::invalid_argument("lorentzian_check: band too small");
  const ComplexMatrix& h = sys.h_env.raw();
  const double epsilon0 = h(0, 0).real();
  const double tunneling = h(0, 1).real();
  std::vector<double> lev(dim - 1);
  for (int k = 1; k < dim; ++k) lev[k - 1] = h(k, k).real();

  const ArrowheadEigen ae = arrowhead_eigensystem(epsilon0, tunneling, lev);
  const RealVector weight = ae.d.cwiseAbs2();

  LorentzianReport rep;
  rep.weight_sum_defect = std::abs(weight.sum() - 1.0);
  rep.top_weight = weight.maxCoeff();
  if (tunneling == 0.0) return rep;  // decoupled: the profile degenerates to a point mass

  const double psi = 1.0 / (lev[1] - lev[0]);
  const double t2 = tunneling * tunneling;
  const double body = 1.0 + 3.141592653589793238462643383279 * 3.141592653589793238462643383279 *
                                psi * psi * t2;
  rep.width = 2.0 * std::abs(tunneling) * std::sqrt(body);

  double peak = 0.0, max_abs = 0.0, max_rel = 0.0;
  for (int i = 0; i < weight.size(); ++i) {
    const double det = ae.omega[i] - epsilon0;
    if (std::abs(det) > 3.0 * rep.width) continue;
    ++rep.n_window;
    const double lor = 1.0 / (body + det * det / t2);
    peak = std::max(peak, lor);
    max_abs = std::max(max_abs, std::abs(weight[i] - lor));
    max_rel = std::max(max_rel, std::abs(weight[i] - lor) / lor);
  }
  rep.max_rel_dev = (peak > 0.0) ? max_abs / peak : 0.0;
  rep.max_pointwise_dev = max_rel;
  return rep;
}

}  // namespace qenv
