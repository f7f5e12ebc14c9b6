#include "locality_lab/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace locality_lab {

DivergenceError::DivergenceError(Index step, double norm)
    : Error("Langevin path diverged at step " + std::to_string(step) + " (|x| = " +
            std::to_string(norm) + ")"),
      step_(step) {}

DominanceViolation::DominanceViolation(Index worst_row, double c)
    : Error("diagonal block dominance violated: c = " + std::to_string(c) + " at row " +
            std::to_string(worst_row + 1)),
      worst_row_(worst_row),
      c_(c) {}

}  // namespace locality_lab

namespace locality_lab::linalg {

Matrix sym_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix sym_inv_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= 0.0) throw NumericalError("matrix is not positive definite");
  const Vector inv_root = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose();
}

std::pair<double, double> spectral_range(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

double op_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double asymmetry(const Matrix& a) { return (a - a.transpose()).cwiseAbs().maxCoeff(); }

Matrix block_norms(const BlockStructure& blocks, const Matrix& a) {
  const Index b = blocks.num_blocks();
  Matrix out(b, b);
  for (Index i = 0; i < b; ++i)
    for (Index j = 0; j < b; ++j) out(i, j) = op_norm(blocks.block(a, i, j));
  return out;
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

Matrix expm(const Matrix& a) { return a.exp(); }

}  // namespace locality_lab::linalg
