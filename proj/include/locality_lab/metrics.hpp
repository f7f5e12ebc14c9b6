#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "locality_lab/bounds.hpp"
#include "locality_lab/langevin.hpp"
#include "locality_lab/models.hpp"
#include "locality_lab/types.hpp"

namespace locality_lab {

enum class W1Method { empirical_1d, gaussian_exact, gaussian_w2_upper, assignment };

std::string to_string(W1Method m);

struct MarginalW1Report {
  std::vector<double> per_block_w1;
  double max_w1 = 0.0;
  W1Method method = W1Method::empirical_1d;
  Index samples_a = 0;
  Index samples_b = 0;
};

// Exact W1 between empirical measures on the line: the integral of
// |F_a^{-1} - F_b^{-1}| over the merged quantile breakpoints.
double empirical_w1_1d(std::vector<double> a, std::vector<double> b);

// W1(N(mu1, s1^2), N(mu2, s2^2)) = E|(mu1 - mu2) + (s1 - s2) Z|.
double gaussian_w1_1d(double mu1, double sigma1, double mu2, double sigma2);

// Mean of |Y| for Y ~ N(mu, sigma^2).
double folded_normal_mean(double mu, double sigma);

// W2 between Gaussians (Bures metric on covariances), an upper bound on W1.
double gaussian_w2(const Vector& mu1, const Matrix& cov1, const Vector& mu2, const Matrix& cov2);

// Per-block W1 between the marginals of two sample sets (rows = samples).
// Blocks must be scalar.
MarginalW1Report marginal_w1_empirical(const BlockStructure& blocks, const Matrix& a, const Matrix& b);
// Gaussian marginals: exact for scalar blocks, W2 upper bound otherwise.
MarginalW1Report marginal_w1_gaussian(const GaussianModel& a, const GaussianModel& b);

struct ScoreDiscrepancy {
  // E_pi ||grad_j log pi' - grad_j log pi||
  std::vector<double> per_block_l1;
  double max_l1 = 0.0;
  Index argmax_block = 0;
  std::vector<double> mc_standard_errors;
};

// Monte Carlo over the rows of samples_from_pi.
ScoreDiscrepancy score_discrepancy(const BlockedDensityModel& pi, const BlockedDensityModel& pi_prime,
                                   const Matrix& samples_from_pi);

// How both sides are sampled when a model is not Gaussian.
struct SamplingOptions {
  // step_size <= 0 picks 0.05 / M_hat with M_hat from probes near the
  // origin; thin = 0 keeps one state per thin_time; num_steps is derived
  // from the requested sample count.
  LangevinConfig langevin{0.0, 4000, 1000, 8, 0, false, 0};
  double thin_time = 0.5;
  // burn-in covers at least this much diffusion time
  double burn_in_time = 10.0;
  // assignment-solver subsample for multi-block W1
  Index assignment_subsample = 800;
};

struct InequalityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;      // rhs - lhs
  double tolerance = 0.0;  // statistical allowance added to rhs
  bool pass = false;
  double delta = 0.0;
  W1Method lhs_method = W1Method::empirical_1d;
  bool lhs_upper_bounded = false;
  // W1 between independent sample sets of the same law, for sampled LHS
  double sampling_floor = 0.0;
  double rhs_standard_error = 0.0;
  std::vector<double> per_block_w1;
  std::vector<double> per_block_discrepancy;
  std::vector<Index> index_set;
};

// max_i W1(pi_i, pi'_i) <= delta(pi') max_j E_pi ||grad_j log pi' - grad_j log pi||.
InequalityReport verify_marginal_inequality(const BlockedDensityModel& pi, const BlockedDensityModel& pi_prime,
                                            const DeltaBound& delta, Index n_samples, std::uint64_t seed,
                                            const SamplingOptions& opts = {});

// W1(pi_I, pi'_I) <= delta |I| max_j E_pi ||...|| for |I| <= 3 scalar blocks,
// LHS by exact assignment on subsamples.
InequalityReport verify_multiblock_inequality(const BlockedDensityModel& pi, const BlockedDensityModel& pi_prime,
                                              const DeltaBound& delta, const std::vector<Index>& index_set,
                                              Index n_samples, std::uint64_t seed, const SamplingOptions& opts = {});

// Draws n rows from the model: exact for Gaussians, Langevin otherwise.
Matrix sample_model(const BlockedDensityModel& model, Index n, std::uint64_t seed, const SamplingOptions& opts = {});

}  // namespace locality_lab
