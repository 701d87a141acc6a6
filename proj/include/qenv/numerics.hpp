#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qenv {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

// ----- hermitian matrix -----

// Dense Hermitian matrix. Construction rejects inputs whose anti-Hermitian
// part exceeds 1e-12 in absolute value, so downstream code may assume
// entries(i,j) == conj(entries(j,i)).
class HermitianMatrix {
 public:
  explicit HermitianMatrix(ComplexMatrix entries);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const ComplexMatrix& raw() const { return entries_; }

 private:
  ComplexMatrix entries_;
};

struct Eigensystem {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // column k pairs with values[k]; unitary
};

// Eigendecomposition of a Hermitian matrix. Guarantees ascending eigenvalues
// and V diag(values) V^dagger == h within 1e-10 relative Frobenius norm.
Eigensystem eig_hermitian(const HermitianMatrix& h);

// exp(-i h t) computed through the eigendecomposition; unitary within 1e-10.
ComplexMatrix propagator(const HermitianMatrix& h, double t);

// Determinant of a square complex matrix via partially pivoted LU.
Complex det_complex(const ComplexMatrix& m);

struct Svd {
  RealMatrix left;             // n x r
  RealVector singular_values;  // descending, nonnegative
  RealMatrix right;            // p x r
};

// Thin singular value decomposition, r = min(n, p).
Svd svd(const RealMatrix& x);

}  // namespace qenv
