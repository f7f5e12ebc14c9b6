#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "locality_lab/models.hpp"
#include "locality_lab/types.hpp"

namespace locality_lab {

struct LangevinConfig {
  double step_size = 0.01;
  Index num_steps = 1000;
  Index burn_in = 0;
  Index num_chains = 1;
  std::uint64_t seed = 0;
  bool propagate_jacobian = false;
  // Keep every thin-th post-burn-in state when drawing samples.
  Index thin = 1;

  void validate() const;
};

// h = 0.01 / M keeps the Jacobian recursion I + h grad^2 log pi contractive.
inline double default_step_size(double upper_curvature) { return 0.01 / upper_curvature; }

constexpr double kDivergenceNorm = 1e8;

struct LangevinPath {
  double step_size = 0.0;
  std::vector<Vector> states;
  // Present iff the config asked for Jacobian propagation; jacobian[0] = I.
  std::optional<std::vector<Matrix>> jacobian;
};

// Euler-Maruyama for dX = grad log pi(X) dt + sqrt(2) dW using stream
// (seed, chain). With Jacobian propagation: J_{t+1} = J_t + h grad^2 log pi(X_t) J_t.
LangevinPath simulate(const BlockedDensityModel& model, const Vector& x0, const LangevinConfig& cfg,
                      Index chain = 0);
std::vector<LangevinPath> simulate_chains(const BlockedDensityModel& model, const Vector& x0,
                                          const LangevinConfig& cfg);

// Post-burn-in states of every chain (chain-major), one per row, without
// storing whole paths.
Matrix draw_samples(const BlockedDensityModel& model, const Vector& x0, const LangevinConfig& cfg);

// `count` points spread along one long run (chain 0) after burn-in.
Matrix default_probe_points(const BlockedDensityModel& model, const Vector& x0, const LangevinConfig& cfg,
                            Index count = 16);

// A 1-Lipschitz function on a single block, with its gradient.
struct TestFunction {
  std::string name;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

TestFunction coordinate_projection(Index coord);
// softplus(s (v.x - shift)) / s along the normalized all-ones direction.
TestFunction softplus_ramp(double shift, double sharpness);
// g(x_0) with g piecewise linear, slopes drawn from [-1, 1].
TestFunction random_piecewise_linear(Index pieces, std::uint64_t seed);
// Coordinate projections of the first coordinate plus ramps and random
// piecewise-linear functions.
std::vector<TestFunction> standard_test_functions(std::uint64_t seed, Index random_count = 2);

struct SteinConfig {
  LangevinConfig langevin;
  // Strong log-concavity constant m; estimated over the probes when absent.
  std::optional<double> decay_rate;
  // Stop once the integrand drops below this fraction of its initial value.
  double relative_threshold = 1e-4;
  // Hard horizon t_max = horizon_factor / m.
  double horizon_factor = 20.0;
};

struct SteinGradientEstimate {
  Index block = 0;
  // sup over probes of int_0^inf E ||grad_{x_j} X_{t,i}|| dt, per block j.
  std::vector<double> per_block_sup;
  double sum = 0.0;
  std::vector<double> standard_errors;
  Matrix probe_points;
  // sup over probes of || int E[ J(i,j)^T grad phi(X_{t,i}) ] dt ||, the
  // gradient of the Stein solution itself for the supplied phi.
  std::vector<double> pathwise_sup;
  double pathwise_sum = 0.0;
  double decay_rate = 0.0;
  double horizon = 0.0;
  // Per-block bound on the truncated tail, e^{-m t_end} / m.
  double tail_bound = 0.0;
  bool converged = true;
  bool reliable = true;
  std::vector<std::string> warnings;
};

SteinGradientEstimate stein_gradient_estimate(const BlockedDensityModel& model, Index block,
                                              const TestFunction& phi, const Matrix& probe_points,
                                              const SteinConfig& cfg);

struct EmpiricalDelta {
  double value = 0.0;
  Index argmax_block = 0;
  // Row sums sum_j sup_x int E||J(i,j)|| dt for each block i.
  std::vector<double> per_block_sums;
  // Standard error of the maximizing row sum.
  double standard_error = 0.0;
  // max over blocks and test functions of the pathwise gradient sums.
  double pathwise_value = 0.0;
  double decay_rate = 0.0;
  double tail_bound = 0.0;
  bool converged = true;
  bool reliable = true;
  std::vector<std::string> warnings;
};

EmpiricalDelta empirical_delta(const BlockedDensityModel& model, const Matrix& probe_points,
                               const std::vector<TestFunction>& test_functions, const SteinConfig& cfg);

}  // namespace locality_lab
