#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "locality_lab/block_structure.hpp"
#include "locality_lab/locality_graph.hpp"
#include "locality_lab/rng.hpp"
#include "locality_lab/types.hpp"

namespace locality_lab {

// A differentiable unnormalized log-density over a block decomposition.
// hessian_block(x, j, k) must vanish whenever k is not a neighbor of j in
// graph(); the assembled hessian() relies on it.
class BlockedDensityModel {
 public:
  BlockedDensityModel(BlockStructure blocks, DependencyGraph graph);
  virtual ~BlockedDensityModel() = default;

  const BlockStructure& blocks() const { return blocks_; }
  const DependencyGraph& graph() const { return graph_; }
  Index dim() const { return blocks_.total_dim(); }

  virtual std::string kind() const = 0;
  virtual double log_density(const Vector& x) const = 0;
  virtual Vector block_score(const Vector& x, Index j) const = 0;
  virtual Matrix hessian_block(const Vector& x, Index j, Index k) const = 0;

  // Full gradient of log density.
  virtual Vector score(const Vector& x) const;
  // Dense Hessian of log density.
  virtual Matrix hessian(const Vector& x) const;
  virtual SparseMatrix sparse_hessian(const Vector& x) const;
  virtual bool has_constant_hessian() const { return false; }

 protected:
  void check_point(const Vector& x) const;

 private:
  BlockStructure blocks_;
  DependencyGraph graph_;
};

// N(mean, precision^{-1}). Caches covariance, C^{1/2}, C^{-1/2} and the
// spectral range of the precision.
class GaussianModel final : public BlockedDensityModel {
 public:
  // graph defaults to the block sparsity pattern of the precision.
  GaussianModel(BlockStructure blocks, Matrix precision, Vector mean,
                std::optional<DependencyGraph> graph = std::nullopt);
  static GaussianModel standard(BlockStructure blocks);

  std::string kind() const override { return "gaussian"; }
  double log_density(const Vector& x) const override;
  Vector block_score(const Vector& x, Index j) const override;
  Matrix hessian_block(const Vector& x, Index j, Index k) const override;
  Vector score(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  SparseMatrix sparse_hessian(const Vector& x) const override;
  bool has_constant_hessian() const override { return true; }

  const Matrix& precision() const { return precision_; }
  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  const Matrix& sqrt_covariance() const { return sqrt_cov_; }
  const Matrix& inv_sqrt_covariance() const { return inv_sqrt_cov_; }
  // Extreme eigenvalues (m, M) of the precision.
  double min_eigenvalue() const { return lambda_min_; }
  double max_eigenvalue() const { return lambda_max_; }

  // Exact draws, one sample per row.
  Matrix sample(Index n, Philox& rng) const;
  Matrix sample(Index n, std::uint64_t seed) const;

 private:
  Matrix precision_;
  SparseMatrix sparse_precision_;
  Vector mean_;
  Matrix covariance_;
  Matrix sqrt_cov_;
  Matrix inv_sqrt_cov_;
  Matrix sampling_factor_;  // L^{-T} with precision = L L^T
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

// Chain of n scalar spins with log density
//   -sum_j [ lambda/4 (x_j^2 - m^2)^2 + pinning/2 x_j^2 ] - sum_j beta_j/2 (x_j - x_{j+1})^2.
// The exponent carries the Gibbs sign e^{-H}; pinning = 0 recovers the plain
// double-well chain.
class GinzburgLandauChain final : public BlockedDensityModel {
 public:
  GinzburgLandauChain(Index n, double lambda, double m_param, std::vector<double> bond_beta,
                      double pinning = 0.0);

  std::string kind() const override { return "gl_chain"; }
  double log_density(const Vector& x) const override;
  Vector block_score(const Vector& x, Index j) const override;
  Matrix hessian_block(const Vector& x, Index j, Index k) const override;
  Vector score(const Vector& x) const override;
  SparseMatrix sparse_hessian(const Vector& x) const override;
  bool has_constant_hessian() const override { return lambda_ == 0.0; }

  Index sites() const { return n_; }
  double lambda() const { return lambda_; }
  double m_param() const { return m_param_; }
  double pinning() const { return pinning_; }
  const std::vector<double>& bond_beta() const { return beta_; }

 private:
  double onsite_grad(double x) const;
  double onsite_curv(double x) const;

  Index n_;
  double lambda_;
  double m_param_;
  std::vector<double> beta_;
  double pinning_;
};

GinzburgLandauChain gl_chain(Index n, double lambda, double m_param, double beta, double pinning = 0.0);

// One clique function u_j acting on x_{N_j} (blocks of N_j concatenated in
// ascending vertex order).
class CliquePotential {
 public:
  virtual ~CliquePotential() = default;
  virtual double value(const Vector& local) const = 0;
  virtual Vector gradient(const Vector& local) const = 0;
  virtual Matrix hessian(const Vector& local) const = 0;
};

// log pi(x) = sum_j u_j(x_{N_j}) over the cliques of a dependency graph.
// The reported graph is the interaction graph: j ~ k when some N_l contains
// both. Callers whose potentials only couple adjacent blocks may pass the
// clique graph itself.
class CliquePotentialModel final : public BlockedDensityModel {
 public:
  CliquePotentialModel(BlockStructure blocks, DependencyGraph clique_graph,
                       std::vector<std::shared_ptr<const CliquePotential>> potentials,
                       std::optional<DependencyGraph> interaction_graph = std::nullopt);

  std::string kind() const override { return "clique"; }
  double log_density(const Vector& x) const override;
  Vector block_score(const Vector& x, Index j) const override;
  Matrix hessian_block(const Vector& x, Index j, Index k) const override;
  Vector score(const Vector& x) const override;

  const DependencyGraph& clique_graph() const { return clique_graph_; }
  const CliquePotential& potential(Index j) const { return *potentials_.at(j); }
  Vector local_vector(const Vector& x, Index clique) const;
  // Offset of block j inside the local vector of `clique`, if j is in N_clique.
  std::optional<Index> local_offset(Index clique, Index j) const;

 private:
  DependencyGraph clique_graph_;
  std::vector<std::shared_ptr<const CliquePotential>> potentials_;
};

// Interaction graph of a clique decomposition: j ~ k iff they share a clique.
DependencyGraph clique_closure(const DependencyGraph& g);

// Random symmetric precision with block bandwidth `bandwidth` and spectrum
// mapped affinely onto [m, M]. Graph = banded_graph(b, bandwidth).
GaussianModel gaussian_from_banded_precision(const BlockStructure& blocks, Index bandwidth, double m,
                                             double M, std::uint64_t seed);

// Empirical (min, max) eigenvalue of -Hessian over the points (rows).
std::pair<double, double> convexity_bounds(const BlockedDensityModel& model, const Matrix& points);

// Edge (j,k) iff max over probes of ||hessian_block(x,j,k)|| > tolerance.
DependencyGraph extract_graph(const BlockedDensityModel& model, double tolerance, const Matrix& probes);

// Block sparsity pattern of a dense symmetric matrix.
DependencyGraph graph_from_block_sparsity(const BlockStructure& blocks, const Matrix& a,
                                          double tolerance = 0.0);

const GaussianModel* as_gaussian(const BlockedDensityModel& model);

}  // namespace locality_lab
