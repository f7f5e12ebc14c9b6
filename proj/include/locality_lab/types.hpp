#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace locality_lab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = std::size_t;

// Base for every domain error raised by the library. Precondition violations
// use std::invalid_argument / std::out_of_range directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A Langevin trajectory left the admissible region.
class DivergenceError : public Error {
 public:
  DivergenceError(Index step, double norm);
  Index step() const { return step_; }

 private:
  Index step_;
};

// Lower curvature bound m <= 0 where strong log-concavity is required.
class NotLogConcaveError : public Error {
 public:
  using Error::Error;
};

// Diagonal block dominance fails: c <= 0.
class DominanceViolation : public Error {
 public:
  DominanceViolation(Index worst_row, double c);
  Index worst_row() const { return worst_row_; }
  double c() const { return c_; }

 private:
  Index worst_row_;
  double c_;
};

// Requested quantity is outside what the library can evaluate.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Hypotheses of a verifier are not met by the supplied instance.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered in a model evaluation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace locality_lab
