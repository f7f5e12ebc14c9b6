#include "locality_lab/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "locality_lab/linalg.hpp"

namespace locality_lab {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

}  // namespace

BlockedDensityModel::BlockedDensityModel(BlockStructure blocks, DependencyGraph graph)
    : blocks_(std::move(blocks)), graph_(std::move(graph)) {
  if (graph_.num_vertices() != blocks_.num_blocks())
    throw std::invalid_argument("graph has " + std::to_string(graph_.num_vertices()) +
                                " vertices but the block structure has " +
                                std::to_string(blocks_.num_blocks()) + " blocks");
}

void BlockedDensityModel::check_point(const Vector& x) const {
  if (static_cast<Index>(x.size()) != dim())
    throw std::invalid_argument("point has length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(dim()));
}

Vector BlockedDensityModel::score(const Vector& x) const {
  check_point(x);
  Vector g(ei(dim()));
  for (Index j = 0; j < blocks_.num_blocks(); ++j) blocks_.embed(g, j, block_score(x, j));
  return g;
}

Matrix BlockedDensityModel::hessian(const Vector& x) const {
  check_point(x);
  Matrix h = Matrix::Zero(ei(dim()), ei(dim()));
  for (Index j = 0; j < blocks_.num_blocks(); ++j)
    for (Index k : graph_.neighbors(j))
      h.block(ei(blocks_.offset(j)), ei(blocks_.offset(k)), ei(blocks_.size(j)), ei(blocks_.size(k))) =
          hessian_block(x, j, k);
  return h;
}

SparseMatrix BlockedDensityModel::sparse_hessian(const Vector& x) const {
  check_point(x);
  std::vector<Eigen::Triplet<double>> trip;
  for (Index j = 0; j < blocks_.num_blocks(); ++j) {
    for (Index k : graph_.neighbors(j)) {
      const Matrix hb = hessian_block(x, j, k);
      for (Eigen::Index r = 0; r < hb.rows(); ++r)
        for (Eigen::Index c = 0; c < hb.cols(); ++c)
          if (hb(r, c) != 0.0)
            trip.emplace_back(ei(blocks_.offset(j)) + r, ei(blocks_.offset(k)) + c, hb(r, c));
    }
  }
  SparseMatrix h(ei(dim()), ei(dim()));
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

// ---------------------------------------------------------------------------
// GaussianModel

GaussianModel::GaussianModel(BlockStructure blocks, Matrix precision, Vector mean,
                             std::optional<DependencyGraph> graph)
    : BlockedDensityModel(blocks, graph ? *graph : graph_from_block_sparsity(blocks, precision)),
      precision_(std::move(precision)),
      mean_(std::move(mean)) {
  const auto d = ei(dim());
  if (precision_.rows() != d || precision_.cols() != d)
    throw std::invalid_argument("precision shape does not match dimension");
  if (mean_.size() != d) throw std::invalid_argument("mean length does not match dimension");
  if (!precision_.allFinite() || !mean_.allFinite()) throw NumericalError("non-finite Gaussian parameters");
  if (linalg::asymmetry(precision_) > 1e-10 * std::max(1.0, precision_.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("precision is not symmetric");
  precision_ = 0.5 * (precision_ + precision_.transpose()).eval();

  const auto& g = this->graph();
  for (Index j = 0; j < this->blocks().num_blocks(); ++j)
    for (Index k = 0; k < this->blocks().num_blocks(); ++k)
      if (!g.adjacent(j, k) && this->blocks().block(precision_, j, k).cwiseAbs().maxCoeff() > 0.0)
        throw std::invalid_argument("precision has a nonzero block outside the declared graph");

  Eigen::SelfAdjointEigenSolver<Matrix> es(precision_);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of precision failed");
  lambda_min_ = es.eigenvalues().minCoeff();
  lambda_max_ = es.eigenvalues().maxCoeff();
  if (lambda_min_ <= 0.0) throw std::invalid_argument("precision is not positive definite");
  const Vector ev = es.eigenvalues();
  const Matrix& V = es.eigenvectors();
  covariance_ = V * ev.cwiseInverse().asDiagonal() * V.transpose();
  sqrt_cov_ = V * ev.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  inv_sqrt_cov_ = V * ev.cwiseSqrt().asDiagonal() * V.transpose();
  Eigen::LLT<Matrix> llt(precision_);
  sampling_factor_ = llt.matrixU().solve(Matrix::Identity(d, d));
  sparse_precision_ = precision_.sparseView();
}

GaussianModel GaussianModel::standard(BlockStructure blocks) {
  const auto d = ei(blocks.total_dim());
  return GaussianModel(blocks, Matrix::Identity(d, d), Vector::Zero(d));
}

double GaussianModel::log_density(const Vector& x) const {
  check_point(x);
  const Vector r = x - mean_;
  return -0.5 * r.dot(sparse_precision_ * r);
}

Vector GaussianModel::block_score(const Vector& x, Index j) const {
  check_point(x);
  const auto& b = blocks();
  return -(precision_.middleRows(ei(b.offset(j)), ei(b.size(j))) * (x - mean_));
}

Matrix GaussianModel::hessian_block(const Vector& x, Index j, Index k) const {
  return -blocks().block(precision_, j, k);
}

Vector GaussianModel::score(const Vector& x) const {
  check_point(x);
  return -(sparse_precision_ * (x - mean_));
}

Matrix GaussianModel::hessian(const Vector&) const { return -precision_; }

SparseMatrix GaussianModel::sparse_hessian(const Vector&) const { return -sparse_precision_; }

Matrix GaussianModel::sample(Index n, Philox& rng) const {
  const auto d = ei(dim());
  Matrix z(ei(n), d);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index c = 0; c < d; ++c) z(i, c) = rng.normal();
  Matrix out = z * sampling_factor_.transpose();
  out.rowwise() += mean_.transpose();
  return out;
}

Matrix GaussianModel::sample(Index n, std::uint64_t seed) const {
  Philox rng(seed, 0);
  return sample(n, rng);
}

// ---------------------------------------------------------------------------
// GinzburgLandauChain

GinzburgLandauChain::GinzburgLandauChain(Index n, double lambda, double m_param,
                                         std::vector<double> bond_beta, double pinning)
    : BlockedDensityModel(BlockStructure::uniform(n, 1), banded_graph(std::max<Index>(n, 1), 1)),
      n_(n),
      lambda_(lambda),
      m_param_(m_param),
      beta_(std::move(bond_beta)),
      pinning_(pinning) {
  if (n < 2) throw std::invalid_argument("GL chain needs at least 2 sites");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!std::isfinite(m_param)) throw std::invalid_argument("m_param must be finite");
  if (!(pinning >= 0.0) || !std::isfinite(pinning)) throw std::invalid_argument("pinning must be >= 0");
  if (beta_.size() != n - 1) throw std::invalid_argument("need one coupling per bond");
  for (double b : beta_)
    if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("couplings must be positive");
}

GinzburgLandauChain gl_chain(Index n, double lambda, double m_param, double beta, double pinning) {
  return GinzburgLandauChain(n, lambda, m_param, std::vector<double>(n >= 1 ? n - 1 : 0, beta), pinning);
}

double GinzburgLandauChain::onsite_grad(double x) const {
  return lambda_ * x * (x * x - m_param_ * m_param_) + pinning_ * x;
}

double GinzburgLandauChain::onsite_curv(double x) const {
  return lambda_ * (3.0 * x * x - m_param_ * m_param_) + pinning_;
}

double GinzburgLandauChain::log_density(const Vector& x) const {
  check_point(x);
  double h = 0.0;
  const double m2 = m_param_ * m_param_;
  for (Index j = 0; j < n_; ++j) {
    const double xj = x[ei(j)];
    const double w = xj * xj - m2;
    h += 0.25 * lambda_ * w * w + 0.5 * pinning_ * xj * xj;
  }
  for (Index j = 0; j + 1 < n_; ++j) {
    const double diff = x[ei(j)] - x[ei(j + 1)];
    h += 0.5 * beta_[j] * diff * diff;
  }
  return -h;
}

Vector GinzburgLandauChain::score(const Vector& x) const {
  check_point(x);
  Vector g(ei(n_));
  for (Index j = 0; j < n_; ++j) g[ei(j)] = -onsite_grad(x[ei(j)]);
  for (Index j = 0; j + 1 < n_; ++j) {
    const double f = beta_[j] * (x[ei(j)] - x[ei(j + 1)]);
    g[ei(j)] -= f;
    g[ei(j + 1)] += f;
  }
  return g;
}

Vector GinzburgLandauChain::block_score(const Vector& x, Index j) const {
  check_point(x);
  if (j >= n_) throw std::out_of_range("site out of range");
  double g = -onsite_grad(x[ei(j)]);
  if (j > 0) g -= beta_[j - 1] * (x[ei(j)] - x[ei(j - 1)]);
  if (j + 1 < n_) g -= beta_[j] * (x[ei(j)] - x[ei(j + 1)]);
  return Vector::Constant(1, g);
}

Matrix GinzburgLandauChain::hessian_block(const Vector& x, Index j, Index k) const {
  check_point(x);
  if (j >= n_ || k >= n_) throw std::out_of_range("site out of range");
  double v = 0.0;
  if (j == k) {
    v = -onsite_curv(x[ei(j)]);
    if (j > 0) v -= beta_[j - 1];
    if (j + 1 < n_) v -= beta_[j];
  } else if (k == j + 1) {
    v = beta_[j];
  } else if (j == k + 1) {
    v = beta_[k];
  }
  return Matrix::Constant(1, 1, v);
}

SparseMatrix GinzburgLandauChain::sparse_hessian(const Vector& x) const {
  check_point(x);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * n_);
  for (Index j = 0; j < n_; ++j) {
    double diag = -onsite_curv(x[ei(j)]);
    if (j > 0) diag -= beta_[j - 1];
    if (j + 1 < n_) diag -= beta_[j];
    trip.emplace_back(ei(j), ei(j), diag);
    if (j + 1 < n_) {
      trip.emplace_back(ei(j), ei(j + 1), beta_[j]);
      trip.emplace_back(ei(j + 1), ei(j), beta_[j]);
    }
  }
  SparseMatrix h(ei(n_), ei(n_));
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

// ---------------------------------------------------------------------------
// CliquePotentialModel

DependencyGraph clique_closure(const DependencyGraph& g) {
  std::vector<std::pair<Index, Index>> edges;
  for (Index l = 0; l < g.num_vertices(); ++l) {
    const auto& nb = g.neighbors(l);
    for (Index a = 0; a < nb.size(); ++a)
      for (Index c = a + 1; c < nb.size(); ++c) edges.emplace_back(nb[a], nb[c]);
  }
  return DependencyGraph::from_edges(g.num_vertices(), edges);
}

CliquePotentialModel::CliquePotentialModel(BlockStructure blocks, DependencyGraph clique_graph,
                                           std::vector<std::shared_ptr<const CliquePotential>> potentials,
                                           std::optional<DependencyGraph> interaction_graph)
    : BlockedDensityModel(blocks, interaction_graph ? *interaction_graph : clique_closure(clique_graph)),
      clique_graph_(std::move(clique_graph)),
      potentials_(std::move(potentials)) {
  if (clique_graph_.num_vertices() != this->blocks().num_blocks())
    throw std::invalid_argument("clique graph does not match the block structure");
  if (potentials_.size() != clique_graph_.num_vertices())
    throw std::invalid_argument("need one potential per vertex");
  for (const auto& p : potentials_)
    if (!p) throw std::invalid_argument("null potential");
}

Vector CliquePotentialModel::local_vector(const Vector& x, Index clique) const {
  const auto& nb = clique_graph_.neighbors(clique);
  Index len = 0;
  for (Index k : nb) len += blocks().size(k);
  Vector local(ei(len));
  Index pos = 0;
  for (Index k : nb) {
    local.segment(ei(pos), ei(blocks().size(k))) = blocks().slice(x, k);
    pos += blocks().size(k);
  }
  return local;
}

std::optional<Index> CliquePotentialModel::local_offset(Index clique, Index j) const {
  Index pos = 0;
  for (Index k : clique_graph_.neighbors(clique)) {
    if (k == j) return pos;
    pos += blocks().size(k);
  }
  return std::nullopt;
}

double CliquePotentialModel::log_density(const Vector& x) const {
  check_point(x);
  double total = 0.0;
  for (Index l = 0; l < potentials_.size(); ++l) total += potentials_[l]->value(local_vector(x, l));
  return total;
}

Vector CliquePotentialModel::block_score(const Vector& x, Index j) const {
  check_point(x);
  Vector s = Vector::Zero(ei(blocks().size(j)));
  // block j appears in clique l exactly when l is a neighbor of j
  for (Index l : clique_graph_.neighbors(j)) {
    const Vector grad = potentials_[l]->gradient(local_vector(x, l));
    s += grad.segment(ei(*local_offset(l, j)), ei(blocks().size(j)));
  }
  return s;
}

Vector CliquePotentialModel::score(const Vector& x) const {
  check_point(x);
  Vector g = Vector::Zero(ei(dim()));
  for (Index l = 0; l < potentials_.size(); ++l) {
    const Vector grad = potentials_[l]->gradient(local_vector(x, l));
    Index pos = 0;
    for (Index k : clique_graph_.neighbors(l)) {
      g.segment(ei(blocks().offset(k)), ei(blocks().size(k))) += grad.segment(ei(pos), ei(blocks().size(k)));
      pos += blocks().size(k);
    }
  }
  return g;
}

Matrix CliquePotentialModel::hessian_block(const Vector& x, Index j, Index k) const {
  check_point(x);
  Matrix h = Matrix::Zero(ei(blocks().size(j)), ei(blocks().size(k)));
  for (Index l : clique_graph_.neighbors(j)) {
    const auto off_k = local_offset(l, k);
    if (!off_k) continue;
    const Matrix hl = potentials_[l]->hessian(local_vector(x, l));
    h += hl.block(ei(*local_offset(l, j)), ei(*off_k), ei(blocks().size(j)), ei(blocks().size(k)));
  }
  return h;
}

// ---------------------------------------------------------------------------

DependencyGraph graph_from_block_sparsity(const BlockStructure& blocks, const Matrix& a, double tolerance) {
  std::vector<std::pair<Index, Index>> edges;
  for (Index j = 0; j < blocks.num_blocks(); ++j)
    for (Index k = j + 1; k < blocks.num_blocks(); ++k) {
      const double nrm = std::max(blocks.block(a, j, k).cwiseAbs().maxCoeff(),
                                  blocks.block(a, k, j).cwiseAbs().maxCoeff());
      if (nrm > tolerance) edges.emplace_back(j, k);
    }
  return DependencyGraph::from_edges(blocks.num_blocks(), edges);
}

GaussianModel gaussian_from_banded_precision(const BlockStructure& blocks, Index bandwidth, double m,
                                             double M, std::uint64_t seed) {
  if (!(m > 0.0) || !(M >= m) || !std::isfinite(M))
    throw std::invalid_argument("infeasible spectrum request: need 0 < m <= M");
  const auto d = ei(blocks.total_dim());
  Philox rng(seed, 0);
  Matrix a = Matrix::Zero(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const Index br = blocks.block_of(static_cast<Index>(r));
    for (Eigen::Index c = r; c < d; ++c) {
      const Index bc = blocks.block_of(static_cast<Index>(c));
      if (bc - br > bandwidth) break;
      const double v = rng.normal();
      a(r, c) = v;
      a(c, r) = v;
    }
  }
  const auto [lo, hi] = linalg::spectral_range(a);
  Matrix precision;
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi)) || M == m) {
    // flat spectrum (M == m, or a multiple of I such as d = 1)
    precision = m * Matrix::Identity(d, d);
  } else {
    const double scale = (M - m) / (hi - lo);
    precision = scale * a;
    precision.diagonal().array() += m - scale * lo;
  }
  return GaussianModel(blocks, precision, Vector::Zero(d), banded_graph(blocks.num_blocks(), bandwidth));
}

std::pair<double, double> convexity_bounds(const BlockedDensityModel& model, const Matrix& points) {
  if (points.rows() == 0) throw std::invalid_argument("need at least one sample point");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const Index evals = model.has_constant_hessian() ? 1 : static_cast<Index>(points.rows());
  for (Index i = 0; i < evals; ++i) {
    const Matrix h = -model.hessian(points.row(ei(i)).transpose());
    if (!h.allFinite()) throw NumericalError("non-finite Hessian entries");
    const auto [a, b] = linalg::spectral_range(h);
    lo = std::min(lo, a);
    hi = std::max(hi, b);
  }
  return {lo, hi};
}

DependencyGraph extract_graph(const BlockedDensityModel& model, double tolerance, const Matrix& probes) {
  if (!(tolerance >= 0.0)) throw std::invalid_argument("tolerance must be nonnegative");
  const auto& blocks = model.blocks();
  const Index b = blocks.num_blocks();
  Matrix worst = Matrix::Zero(ei(b), ei(b));
  for (Eigen::Index p = 0; p < probes.rows(); ++p) {
    const Vector x = probes.row(p).transpose();
    for (Index j = 0; j < b; ++j)
      for (Index k = j + 1; k < b; ++k)
        worst(ei(j), ei(k)) = std::max(worst(ei(j), ei(k)), linalg::op_norm(model.hessian_block(x, j, k)));
  }
  std::vector<std::pair<Index, Index>> edges;
  for (Index j = 0; j < b; ++j)
    for (Index k = j + 1; k < b; ++k)
      if (worst(ei(j), ei(k)) > tolerance) edges.emplace_back(j, k);
  return DependencyGraph::from_edges(b, edges);
}

const GaussianModel* as_gaussian(const BlockedDensityModel& model) {
  return dynamic_cast<const GaussianModel*>(&model);
}

}  // namespace locality_lab
