#pragma once

#include <utility>

#include "locality_lab/block_structure.hpp"
#include "locality_lab/types.hpp"

namespace locality_lab::linalg {

// Principal square root of a symmetric PSD matrix via V diag(sqrt(l)) V^T.
Matrix sym_sqrt(const Matrix& a);
// Inverse principal square root; throws NumericalError if not positive definite.
Matrix sym_inv_sqrt(const Matrix& a);
// (lambda_min, lambda_max) of a symmetric matrix.
std::pair<double, double> spectral_range(const Matrix& a);
// Largest singular value.
double op_norm(const Matrix& a);
double asymmetry(const Matrix& a);

// b x b table of block operator norms.
Matrix block_norms(const BlockStructure& blocks, const Matrix& a);

bool all_finite(const Matrix& a);

// Dense matrix exponential (scaling and squaring with Pade 13).
Matrix expm(const Matrix& a);

}  // namespace locality_lab::linalg
