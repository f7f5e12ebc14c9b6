#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "locality_lab/locality_graph.hpp"
#include "locality_lab/models.hpp"
#include "locality_lab/types.hpp"

namespace locality_lab {

// Per-vertex polynomial features of a clique potential u_j. quadratic:
// x_j, -x_j^2/2 and -x_j x_k for neighbors k > j. quartic adds x_j^3 and
// -x_j^4/4. With these signs a Gaussian with precision P and shift h has
// coefficients h_j, P_jj and P_jk.
enum class Dictionary { quadratic, quartic };

std::string to_string(Dictionary d);
Dictionary dictionary_from_string(const std::string& s);

enum class FeatureKind { linear, onsite, pair, cubic, quartic };

struct Feature {
  FeatureKind kind;
  Index vertex;
  Index partner = 0;  // pair features only
};

// Linear-in-parameters clique hypothesis over scalar blocks.
class ScoreHypothesis {
 public:
  // R bounds the C^2 norm of every u_j; it becomes a coefficient ball of
  // radius R / (sqrt(P_j) max_f ||phi_f||_{C^2}) on each clique.
  ScoreHypothesis(DependencyGraph graph, Dictionary dict, double R = 1e3);

  const DependencyGraph& graph() const { return graph_; }
  Dictionary dictionary() const { return dict_; }
  double R() const { return R_; }
  Index num_blocks() const { return graph_.num_vertices(); }
  Index num_params() const { return features_.size(); }
  const std::vector<Feature>& features() const { return features_; }
  // Parameter range [begin, end) owned by clique j.
  std::pair<Index, Index> clique_params(Index j) const { return {starts_[j], starts_[j + 1]}; }
  // Parameters entering s_j: those of cliques k in N_j.
  const std::vector<Index>& local_params(Index j) const { return local_[j]; }
  double ball_radius(Index j) const;

  // s_j(x) = a_j(x)^T theta and d s_j / d x_j = c_j(x)^T theta, both over local_params(j).
  void local_features(const Vector& x, Index j, Vector& a, Vector& c) const;
  double local_score(const Vector& x, Index j, const Vector& theta) const;

  // Projects each clique's coefficients onto its ball.
  Vector project(const Vector& theta) const;

  std::shared_ptr<CliquePotentialModel> to_model(const Vector& theta) const;
  // Precision and mean of the quadratic part; throws NotLogConcaveError if
  // the precision is not positive definite.
  GaussianModel to_gaussian(const Vector& theta) const;
  Vector theta_from_gaussian(const GaussianModel& g) const;

 private:
  DependencyGraph graph_;
  Dictionary dict_;
  double R_;
  std::vector<Feature> features_;
  std::vector<Index> starts_;
  std::vector<std::vector<Index>> local_;
};

// Sufficient statistics of J_j(theta) = theta^T A_j theta + 2 b_j^T theta
// over local_params(j).
struct LocalQuadratic {
  Matrix A;
  Vector b;
};

std::vector<LocalQuadratic> local_quadratics(const ScoreHypothesis& hyp, const Matrix& samples);

// (1/N) sum_i [2 d_j s_{theta,j}(X_i) + s_{theta,j}(X_i)^2]
double local_loss_j(const ScoreHypothesis& hyp, const Vector& theta, const Matrix& samples, Index j);
double local_loss_j(const ScoreHypothesis& hyp, const LocalQuadratic& q, const Vector& theta, Index j);

// lambda_j = max(0, -min J_j) from the unconstrained fit of block j alone,
// the plug-in value of E s_j^2 at that fit.
std::vector<double> lambda_lower_bounds(const ScoreHypothesis& hyp, const Matrix& samples);
std::vector<double> lambda_lower_bounds(const ScoreHypothesis& hyp, const std::vector<LocalQuadratic>& q);

struct OptimizerConfig {
  double temperature_start = 10.0;
  double temperature_end = 0.01;
  Index temperature_stages = 16;
  Index max_newton_steps = 50;
  double tolerance = 1e-10;
  // Relative ridge on singular blocks.
  double ridge = 1e-10;
};

struct FitReport {
  Vector theta;
  std::vector<double> per_block_losses;
  std::vector<double> lambda;
  double saddle_value = 0.0;
  Index argmax_block = 0;
  // smoothed objective at the end of each temperature stage
  std::vector<double> trace;
  Index iterations = 0;
  Index n_samples = 0;
  bool converged = false;
  std::string lambda_rule;
};

// Minimizes max_j (J_j + lambda_j) by log-sum-exp smoothing on a decreasing
// temperature schedule, damped Newton steps with backtracking, and
// projection onto the coefficient balls. Warm start: summed score matching.
FitReport fit(const ScoreHypothesis& hyp, const Matrix& samples, const OptimizerConfig& cfg = {});

// Classical score matching of sum_j J_j.
Vector fit_summed(const ScoreHypothesis& hyp, const std::vector<LocalQuadratic>& q, double ridge = 1e-10);

struct IdentityCheck {
  // mean over samples of sum_j [2 d_j s_{theta,j} + 2 s_{theta,j} s_j]
  double residual = 0.0;
  double standard_error = 0.0;
  std::vector<double> per_block_residual;
  std::vector<double> per_block_se;
};

// J_j(theta) + C_j - E(s_{theta,j} - s_j)^2 vanishes in expectation; this
// returns its Monte Carlo value against the true score of `truth`.
IdentityCheck integration_by_parts_check(const ScoreHypothesis& hyp, const Vector& theta,
                                         const BlockedDensityModel& truth, const Matrix& samples);

// Stationary Gaussian chain: precision diag `diag`, nearest-neighbor `offdiag`.
GaussianModel gaussian_chain(Index b, double diag, double offdiag);

struct LadderRow {
  Index b = 0;
  Index n = 0;
  Index trial = 0;
  double max_w1 = 0.0;
  Index argmax_block = 0;
  double saddle_value = 0.0;
  bool fit_ok = true;
};

struct LadderResult {
  std::vector<LadderRow> rows;
  // mean over trials of max_i W1 per (b, N) cell, in input order
  std::vector<std::pair<std::pair<Index, Index>, double>> cell_means;
};

// Fits the quadratic dictionary to exact draws of a stationary Gaussian
// chain and measures max_i W1(p_i, p_hat_i) by the exact 1D Gaussian formula.
LadderResult dimension_ladder_experiment(const std::vector<Index>& bs, const std::vector<Index>& ns, Index trials,
                                         std::uint64_t seed, double diag = 2.0, double offdiag = -0.8,
                                         const OptimizerConfig& cfg = {});

}  // namespace locality_lab
