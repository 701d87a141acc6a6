#include "qenv/numerics.hpp"

#include <stdexcept>
#include <string>

namespace qenv {

HermitianMatrix::HermitianMatrix(ComplexMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw std::invalid_argument("HermitianMatrix: matrix must be square and nonempty");
  }
  const double dev = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
  if (dev > 2e-12) {
    throw std::invalid_argument("HermitianMatrix: anti-Hermitian part " + std::to_string(dev) +
                                " exceeds tolerance 1e-12");
  }
  entries_ = (entries_ + entries_.adjoint()) / 2.0;
}

Eigensystem eig_hermitian(const HermitianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.raw());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eig_hermitian: eigensolver failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix propagator(const HermitianMatrix& h, double t) {
  if (!std::isfinite(t)) {
    throw std::invalid_argument("propagator: time must be finite");
  }
  const Eigensystem es = eig_hermitian(h);
  ComplexVector phases(es.values.size());
  for (Eigen::Index k = 0; k < es.values.size(); ++k) {
    phases[k] = std::polar(1.0, -es.values[k] * t);
  }
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

Complex det_complex(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("det_complex: matrix must be square");
  }
  return Eigen::PartialPivLU<ComplexMatrix>(m).determinant();
}

Svd svd(const RealMatrix& x) {
  if (!x.allFinite()) {
    throw std::invalid_argument("svd: input has non-finite entries");
  }
  Eigen::BDCSVD<RealMatrix> solver(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

}  // namespace qenv
