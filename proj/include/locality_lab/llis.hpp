#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "locality_lab/models.hpp"
#include "locality_lab/types.hpp"

namespace locality_lab {

// log l(x) = -1/2 x^T Q x + q^T x + c
struct QuadraticForm {
  Matrix Q;
  Vector q;
  double c = 0.0;
};

class LogLikelihood {
 public:
  virtual ~LogLikelihood() = default;
  virtual Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Matrix hessian(const Vector& x) const = 0;
  // Present when log l is exactly quadratic.
  virtual std::optional<QuadraticForm> quadratic() const { return std::nullopt; }
};

// log l(x) = -tau/2 ||A x - y||^2
class LinearGaussianLikelihood final : public LogLikelihood {
 public:
  LinearGaussianLikelihood(Matrix A, Vector y, double noise_precision);
  Index dim() const override { return static_cast<Index>(A_.cols()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  std::optional<QuadraticForm> quadratic() const override;
  const Matrix& A() const { return A_; }
  const Vector& y() const { return y_; }
  double noise_precision() const { return tau_; }

 private:
  Matrix A_;
  Vector y_;
  double tau_;
};

// log l(x) = -sum_o w log cosh(a_o^T x - y_o): concave with bounded curvature.
class LogCoshLikelihood final : public LogLikelihood {
 public:
  LogCoshLikelihood(Matrix A, Vector y, double weight);
  Index dim() const override { return static_cast<Index>(A_.cols()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;

 private:
  Matrix A_;
  Vector y_;
  double w_;
};

// pi(x) proportional to l(x) pi_0(x) with pi_0 = N(0, C).
struct PosteriorProblem {
  std::shared_ptr<const GaussianModel> prior;
  std::shared_ptr<const LogLikelihood> likelihood;
  DependencyGraph graph;
  // Locality of the graph and Hessian bounds of prior and posterior.
  double S = 1.0;
  int nu = 1;
  double m = 0.0;
  double M = 0.0;

  const BlockStructure& blocks() const { return prior->blocks(); }
  Index dim() const { return prior->dim(); }
};

// Fills m, M from the exact spectra when the likelihood is quadratic, from
// the probes otherwise (rows of `probes`, required in that case).
PosteriorProblem make_posterior_problem(std::shared_ptr<const GaussianModel> prior,
                                        std::shared_ptr<const LogLikelihood> likelihood, DependencyGraph graph,
                                        double S, int nu, const Matrix& probes = Matrix());

// Linear-Gaussian inverse problem: banded prior precision with spectrum in
// [prior_m, prior_M], obs_per_block observations of each block with noise
// precision tau, data generated from a prior draw.
PosteriorProblem linear_gaussian_problem(Index b, Index block_size, Index bandwidth, Index obs_per_block,
                                         double prior_m, double prior_M, double tau, std::uint64_t seed);

// Likelihood -tau/2 ||B x~_1 - y||^2 depending on the whitened block `block` only.
PosteriorProblem whitened_block_problem(std::shared_ptr<const GaussianModel> prior, Index block, const Matrix& B,
                                        const Vector& y, double tau, double S, int nu);

class PosteriorModel final : public BlockedDensityModel {
 public:
  explicit PosteriorModel(PosteriorProblem problem);
  std::string kind() const override { return "posterior"; }
  double log_density(const Vector& x) const override;
  Vector block_score(const Vector& x, Index j) const override;
  Matrix hessian_block(const Vector& x, Index j, Index k) const override;
  Vector score(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  bool has_constant_hessian() const override;
  const PosteriorProblem& problem() const { return problem_; }

 private:
  PosteriorProblem problem_;
};

// Exact Gaussian posterior; throws UnsupportedError for a non-quadratic likelihood.
GaussianModel exact_posterior(const PosteriorProblem& problem);

Vector whiten(const GaussianModel& prior, const Vector& x);
Vector unwhiten(const GaussianModel& prior, const Vector& x_tilde);

enum class SamplingMeasure { target, approximation };

struct DiagnosticMatrices {
  // diagonal blocks of E[g g^T + H H] in whitened coordinates
  std::vector<Matrix> M_blocks;
  // E[g_k g_k^T]
  std::vector<Matrix> G;
  // H[j][k] = E[H_jk H_kj], a d_j x d_j matrix
  std::vector<std::vector<Matrix>> H;
  Index n_samples = 0;  // 0 for closed-form moments
  SamplingMeasure measure = SamplingMeasure::target;
};

// Monte Carlo over samples (rows, original coordinates) drawn from the
// tagged measure. Summation follows sample order.
DiagnosticMatrices estimate_diagnostics(const PosteriorProblem& problem, const Matrix& samples,
                                        SamplingMeasure measure);
// Closed form for a quadratic likelihood under a Gaussian measure.
DiagnosticMatrices exact_diagnostics(const PosteriorProblem& problem, const GaussianModel& measure_model,
                                     SamplingMeasure measure);

struct LLISBasis {
  BlockStructure blocks;
  double epsilon = 0.0;
  std::vector<Matrix> U;             // d_j x r_j orthonormal columns
  std::vector<Index> ranks;
  std::vector<Vector> eigenvalues;   // descending

  Index total_rank() const;
  // Block-diagonal orthogonal projectors in whitened coordinates.
  Matrix projector() const;
  Matrix complement_projector() const;
};

// Minimal r_j with sum_{k<=r} lambda_k >= (1 - eps) tr; r_j = 0 when the
// block trace is negligible (<= 1e-12 of the largest block trace).
LLISBasis build_basis(const DiagnosticMatrices& diag, double epsilon);
LLISBasis full_rank_basis(const BlockStructure& blocks);

// tr(P_perp C P_perp) for the complement of span(U).
double residue(const Matrix& C, const Matrix& U);

// pi_r(x) proportional to l_r(P_r x) pi_0(x).
class RidgePosterior final : public BlockedDensityModel {
 public:
  RidgePosterior(const PosteriorProblem& problem, LLISBasis basis, Index n_mc = 256, std::uint64_t seed = 0);

  std::string kind() const override { return "ridge_posterior"; }
  double log_density(const Vector& x) const override;
  Vector block_score(const Vector& x, Index j) const override;
  Matrix hessian_block(const Vector& x, Index j, Index k) const override;
  Vector score(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  bool has_constant_hessian() const override { return exact_.has_value(); }

  double log_ridge_likelihood(const Vector& x) const;
  bool exact() const { return exact_.has_value(); }
  const LLISBasis& basis() const { return basis_; }
  // Gaussian form of an exact ridge posterior.
  GaussianModel as_gaussian_model() const;

 private:
  std::shared_ptr<const GaussianModel> prior_;
  std::shared_ptr<const LogLikelihood> likelihood_;
  LLISBasis basis_;
  Matrix sqrt_c_;       // C^{1/2}
  Matrix inv_sqrt_c_;   // C^{-1/2}
  Matrix proj_r_;       // P_r in original coordinates: C^{1/2} P~_r C^{-1/2}
  std::optional<QuadraticForm> exact_;  // averaged form in original coordinates
  std::vector<Vector> offsets_;         // C^{1/2} P~_perp z_s
};

RidgePosterior build_ridge_posterior(const PosteriorProblem& problem, const LLISBasis& basis, Index n_mc = 256,
                                     std::uint64_t seed = 0);

// Quasi-random N(0, I_d) nodes: Halton points mapped through the normal quantile.
Matrix gaussian_halton_nodes(Index n, Index d, Index skip = 1);

struct ErrorCertificate {
  double value = 0.0;
  double residue_factor = 0.0;  // sqrt(max_k term_k)
  double constant = 0.0;        // m^{-3/2} (S nu! kappa^nu)^2
  std::vector<double> per_block_terms;
};

ErrorCertificate error_certificate(const PosteriorProblem& problem, const LLISBasis& basis,
                                   const DiagnosticMatrices& diag_under_approximation);
ErrorCertificate error_certificate(const PosteriorProblem& problem, const RidgePosterior& ridge,
                                   const Matrix& samples_from_pi_r);

}  // namespace locality_lab
