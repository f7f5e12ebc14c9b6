#include "locality_lab/llis.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "locality_lab/linalg.hpp"
#include "locality_lab/rng.hpp"

namespace locality_lab {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

void check_dim(const Vector& x, Index d) {
  if (static_cast<Index>(x.size()) != d) throw std::invalid_argument("point dimension mismatch");
}

Matrix block_diag_projector(const BlockStructure& blocks, const std::vector<Matrix>& U) {
  const auto d = ei(blocks.total_dim());
  Matrix p = Matrix::Zero(d, d);
  for (Index j = 0; j < blocks.num_blocks(); ++j) {
    const auto o = ei(blocks.offset(j));
    const auto s = ei(blocks.size(j));
    if (U[j].cols() > 0) p.block(o, o, s, s) = U[j] * U[j].transpose();
  }
  return p;
}

std::vector<Index> first_primes(Index n) {
  std::vector<Index> out;
  for (Index c = 2; out.size() < n; ++c) {
    bool prime = true;
    for (Index p : out) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) out.push_back(c);
  }
  return out;
}

double radical_inverse(Index i, Index base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

void add_gradient(DiagnosticMatrices& out, const BlockStructure& blocks, const Vector& g, double weight) {
  for (Index k = 0; k < blocks.num_blocks(); ++k) {
    const Vector gk = blocks.slice(g, k);
    out.G[k] += weight * gk * gk.transpose();
  }
}

// hw is the whitened Hessian; H[j][k] += hw_jk hw_kj
void add_hessian(DiagnosticMatrices& out, const BlockStructure& blocks, const Matrix& hw, double weight) {
  const Index b = blocks.num_blocks();
  for (Index j = 0; j < b; ++j)
    for (Index k = 0; k < b; ++k) {
      const Matrix hjk = blocks.block(hw, j, k);
      if (hjk.cwiseAbs().maxCoeff() == 0.0) continue;
      out.H[j][k] += weight * hjk * hjk.transpose();
    }
}

DiagnosticMatrices empty_diagnostics(const BlockStructure& blocks, SamplingMeasure measure) {
  DiagnosticMatrices out;
  out.measure = measure;
  const Index b = blocks.num_blocks();
  out.G.resize(b);
  out.H.assign(b, std::vector<Matrix>(b));
  out.M_blocks.resize(b);
  for (Index j = 0; j < b; ++j) {
    const auto s = ei(blocks.size(j));
    out.G[j] = Matrix::Zero(s, s);
    for (Index k = 0; k < b; ++k) out.H[j][k] = Matrix::Zero(s, s);
  }
  return out;
}

void finish_diagnostics(DiagnosticMatrices& out) {
  const Index b = out.G.size();
  for (Index j = 0; j < b; ++j) {
    out.M_blocks[j] = out.G[j];
    for (Index k = 0; k < b; ++k) out.M_blocks[j] += out.H[j][k];
  }
}

std::pair<double, double> precision_spectrum(const Matrix& a) { return linalg::spectral_range(0.5 * (a + a.transpose())); }

}  // namespace

LinearGaussianLikelihood::LinearGaussianLikelihood(Matrix A, Vector y, double noise_precision)
    : A_(std::move(A)), y_(std::move(y)), tau_(noise_precision) {
  if (A_.rows() != y_.size()) throw std::invalid_argument("observation count mismatch");
  if (!(tau_ > 0.0)) throw std::invalid_argument("noise precision must be positive");
}

double LinearGaussianLikelihood::value(const Vector& x) const {
  check_dim(x, dim());
  return -0.5 * tau_ * (A_ * x - y_).squaredNorm();
}

Vector LinearGaussianLikelihood::gradient(const Vector& x) const {
  check_dim(x, dim());
  return -tau_ * (A_.transpose() * (A_ * x - y_));
}

Matrix LinearGaussianLikelihood::hessian(const Vector& x) const {
  check_dim(x, dim());
  return -tau_ * A_.transpose() * A_;
}

std::optional<QuadraticForm> LinearGaussianLikelihood::quadratic() const {
  return QuadraticForm{tau_ * A_.transpose() * A_, tau_ * A_.transpose() * y_, -0.5 * tau_ * y_.squaredNorm()};
}

LogCoshLikelihood::LogCoshLikelihood(Matrix A, Vector y, double weight)
    : A_(std::move(A)), y_(std::move(y)), w_(weight) {
  if (A_.rows() != y_.size()) throw std::invalid_argument("observation count mismatch");
  if (!(w_ > 0.0)) throw std::invalid_argument("weight must be positive");
}

double LogCoshLikelihood::value(const Vector& x) const {
  check_dim(x, dim());
  const Vector r = A_ * x - y_;
  double s = 0.0;
  for (Eigen::Index o = 0; o < r.size(); ++o) {
    const double a = std::abs(r[o]);
    s += a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
  }
  return -w_ * s;
}

Vector LogCoshLikelihood::gradient(const Vector& x) const {
  check_dim(x, dim());
  const Vector r = (A_ * x - y_).array().tanh().matrix();
  return -w_ * (A_.transpose() * r);
}

Matrix LogCoshLikelihood::hessian(const Vector& x) const {
  check_dim(x, dim());
  const Vector t = (A_ * x - y_).array().tanh().matrix();
  const Vector sech2 = (1.0 - t.array().square()).matrix();
  return -w_ * A_.transpose() * sech2.asDiagonal() * A_;
}

PosteriorProblem make_posterior_problem(std::shared_ptr<const GaussianModel> prior,
                                        std::shared_ptr<const LogLikelihood> likelihood, DependencyGraph graph,
                                        double S, int nu, const Matrix& probes) {
  if (!prior || !likelihood) throw std::invalid_argument("prior and likelihood are required");
  if (prior->mean().cwiseAbs().maxCoeff() != 0.0) throw std::invalid_argument("prior must have zero mean");
  if (likelihood->dim() != prior->dim()) throw std::invalid_argument("likelihood dimension mismatch");
  if (graph.num_vertices() != prior->blocks().num_blocks()) throw std::invalid_argument("graph size mismatch");
  if (!(S >= 1.0) || nu < 1) throw std::invalid_argument("need S >= 1 and nu >= 1");
  PosteriorProblem p{std::move(prior), std::move(likelihood), std::move(graph), S, nu, 0.0, 0.0};
  double lo = p.prior->min_eigenvalue();
  double hi = p.prior->max_eigenvalue();
  if (const auto quad = p.likelihood->quadratic()) {
    const auto [a, b] = precision_spectrum(p.prior->precision() + quad->Q);
    lo = std::min(lo, a);
    hi = std::max(hi, b);
  } else {
    if (probes.rows() == 0) throw std::invalid_argument("probes are needed for a non-quadratic likelihood");
    const auto [a, b] = convexity_bounds(PosteriorModel(p), probes);
    lo = std::min(lo, a);
    hi = std::max(hi, b);
  }
  if (!(lo > 0.0)) throw NotLogConcaveError("posterior is not strongly log-concave");
  p.m = lo;
  p.M = hi;
  return p;
}

PosteriorProblem linear_gaussian_problem(Index b, Index block_size, Index bandwidth, Index obs_per_block,
                                         double prior_m, double prior_M, double tau, std::uint64_t seed) {
  if (b == 0 || block_size == 0 || obs_per_block == 0) throw std::invalid_argument("sizes must be positive");
  const auto blocks = BlockStructure::uniform(b, block_size);
  auto prior = std::make_shared<GaussianModel>(
      gaussian_from_banded_precision(blocks, bandwidth, prior_m, prior_M, mix_seed(seed, 1)));
  Philox rng(mix_seed(seed, 2), 0);
  const auto rows = ei(b * obs_per_block);
  const auto d = ei(blocks.total_dim());
  Matrix A = Matrix::Zero(rows, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(block_size));
  for (Index j = 0; j < b; ++j)
    for (Index o = 0; o < obs_per_block; ++o)
      for (Index c = 0; c < block_size; ++c)
        A(ei(j * obs_per_block + o), ei(blocks.offset(j) + c)) = scale * rng.normal();
  const Vector truth = prior->sample(1, mix_seed(seed, 3)).row(0).transpose();
  Vector y = A * truth;
  for (Eigen::Index o = 0; o < y.size(); ++o) y[o] += rng.normal() / std::sqrt(tau);
  auto like = std::make_shared<LinearGaussianLikelihood>(std::move(A), std::move(y), tau);
  return make_posterior_problem(prior, like, banded_graph(b, bandwidth), 2.0 * static_cast<double>(std::max<Index>(1, bandwidth)), 1);
}

PosteriorProblem whitened_block_problem(std::shared_ptr<const GaussianModel> prior, Index block, const Matrix& B,
                                        const Vector& y, double tau, double S, int nu) {
  const auto& blocks = prior->blocks();
  if (block >= blocks.num_blocks()) throw std::out_of_range("block index out of range");
  if (B.cols() != ei(blocks.size(block))) throw std::invalid_argument("B must act on the chosen block");
  const Matrix A = B * prior->inv_sqrt_covariance().middleRows(ei(blocks.offset(block)), ei(blocks.size(block)));
  auto like = std::make_shared<LinearGaussianLikelihood>(A, y, tau);
  const Matrix post = prior->precision() + tau * A.transpose() * A;
  const double scale = post.cwiseAbs().maxCoeff();
  return make_posterior_problem(prior, like, graph_from_block_sparsity(blocks, post, 1e-12 * scale), S, nu);
}

PosteriorModel::PosteriorModel(PosteriorProblem problem)
    : BlockedDensityModel(problem.blocks(), problem.graph), problem_(std::move(problem)) {}

double PosteriorModel::log_density(const Vector& x) const {
  return problem_.prior->log_density(x) + problem_.likelihood->value(x);
}

Vector PosteriorModel::score(const Vector& x) const {
  check_point(x);
  return problem_.prior->score(x) + problem_.likelihood->gradient(x);
}

Matrix PosteriorModel::hessian(const Vector& x) const {
  check_point(x);
  return problem_.prior->hessian(x) + problem_.likelihood->hessian(x);
}

Vector PosteriorModel::block_score(const Vector& x, Index j) const { return blocks().slice(score(x), j); }

Matrix PosteriorModel::hessian_block(const Vector& x, Index j, Index k) const {
  return blocks().block(hessian(x), j, k);
}

bool PosteriorModel::has_constant_hessian() const { return problem_.likelihood->quadratic().has_value(); }

GaussianModel exact_posterior(const PosteriorProblem& problem) {
  const auto quad = problem.likelihood->quadratic();
  if (!quad) throw UnsupportedError("exact posterior needs a quadratic log-likelihood");
  const Matrix precision = problem.prior->precision() + quad->Q;
  const Vector mean = precision.ldlt().solve(quad->q);
  const Matrix sym = 0.5 * (precision + precision.transpose());
  // whitened problems fill in blocks the declared graph leaves out
  const auto& b = problem.blocks();
  for (Index j = 0; j < b.num_blocks(); ++j)
    for (Index k = 0; k < b.num_blocks(); ++k)
      if (!problem.graph.adjacent(j, k) && b.block(sym, j, k).cwiseAbs().maxCoeff() > 0.0)
        return GaussianModel(b, sym, mean, std::nullopt);
  return GaussianModel(b, sym, mean, problem.graph);
}

Vector whiten(const GaussianModel& prior, const Vector& x) {
  check_dim(x, prior.dim());
  return prior.inv_sqrt_covariance() * x;
}

Vector unwhiten(const GaussianModel& prior, const Vector& x_tilde) {
  check_dim(x_tilde, prior.dim());
  return prior.sqrt_covariance() * x_tilde;
}

DiagnosticMatrices estimate_diagnostics(const PosteriorProblem& problem, const Matrix& samples,
                                        SamplingMeasure measure) {
  if (samples.rows() == 0) throw std::invalid_argument("need at least one sample");
  if (static_cast<Index>(samples.cols()) != problem.dim()) throw std::invalid_argument("sample dimension mismatch");
  const auto& blocks = problem.blocks();
  const Matrix& rc = problem.prior->sqrt_covariance();
  auto out = empty_diagnostics(blocks, measure);
  out.n_samples = static_cast<Index>(samples.rows());
  const double w = 1.0 / static_cast<double>(samples.rows());
  const bool constant_h = problem.likelihood->quadratic().has_value();
  if (constant_h) add_hessian(out, blocks, rc * problem.likelihood->hessian(samples.row(0).transpose()) * rc, 1.0);
  for (Eigen::Index s = 0; s < samples.rows(); ++s) {
    const Vector x = samples.row(s).transpose();
    add_gradient(out, blocks, rc * problem.likelihood->gradient(x), w);
    if (!constant_h) add_hessian(out, blocks, rc * problem.likelihood->hessian(x) * rc, w);
  }
  finish_diagnostics(out);
  return out;
}

DiagnosticMatrices exact_diagnostics(const PosteriorProblem& problem, const GaussianModel& measure_model,
                                     SamplingMeasure measure) {
  const auto quad = problem.likelihood->quadratic();
  if (!quad) throw UnsupportedError("closed-form diagnostics need a quadratic log-likelihood");
  if (!(measure_model.blocks() == problem.blocks())) throw std::invalid_argument("block structures differ");
  const auto& blocks = problem.blocks();
  const Matrix& rc = problem.prior->sqrt_covariance();
  const Vector gbar = rc * (quad->q - quad->Q * measure_model.mean());
  const Matrix cov = rc * quad->Q * measure_model.covariance() * quad->Q * rc;
  const Matrix second = cov + gbar * gbar.transpose();
  auto out = empty_diagnostics(blocks, measure);
  for (Index k = 0; k < blocks.num_blocks(); ++k) out.G[k] = blocks.block(second, k, k);
  add_hessian(out, blocks, -(rc * quad->Q * rc), 1.0);
  finish_diagnostics(out);
  return out;
}

Index LLISBasis::total_rank() const {
  Index r = 0;
  for (Index x : ranks) r += x;
  return r;
}

Matrix LLISBasis::projector() const { return block_diag_projector(blocks, U); }

Matrix LLISBasis::complement_projector() const {
  const auto d = ei(blocks.total_dim());
  return Matrix::Identity(d, d) - projector();
}

LLISBasis build_basis(const DiagnosticMatrices& diag, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  const Index b = diag.M_blocks.size();
  if (b == 0) throw std::invalid_argument("missing diagnostics");
  std::vector<Index> sizes(b);
  double max_trace = 0.0;
  for (Index j = 0; j < b; ++j) {
    const Matrix& m = diag.M_blocks[j];
    if (m.rows() == 0 || m.rows() != m.cols()) throw std::invalid_argument("diagnostic blocks must be square");
    if (linalg::asymmetry(m) > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("diagnostic block is not symmetric");
    sizes[j] = static_cast<Index>(m.rows());
    max_trace = std::max(max_trace, m.trace());
  }
  LLISBasis basis{BlockStructure::make(sizes), epsilon, {}, {}, {}};
  for (Index j = 0; j < b; ++j) {
    const Matrix sym = 0.5 * (diag.M_blocks[j] + diag.M_blocks[j].transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const auto n = sym.rows();
    Vector vals = es.eigenvalues().reverse();
    Matrix vecs = es.eigenvectors().rowwise().reverse();
    for (Eigen::Index c = 0; c < n; ++c) {
      Eigen::Index arg = 0;
      vecs.col(c).cwiseAbs().maxCoeff(&arg);
      if (vecs(arg, c) < 0.0) vecs.col(c) *= -1.0;
    }
    const double tr = sym.trace();
    Index r = 0;
    if (tr > 1e-12 * max_trace && tr > 0.0) {
      double acc = 0.0;
      for (r = 0; r < static_cast<Index>(n);) {
        acc += vals[ei(r)];
        ++r;
        if (acc >= (1.0 - epsilon) * tr) break;
      }
    }
    basis.eigenvalues.push_back(vals);
    basis.ranks.push_back(r);
    basis.U.push_back(vecs.leftCols(ei(r)));
  }
  return basis;
}

LLISBasis full_rank_basis(const BlockStructure& blocks) {
  LLISBasis basis{blocks, 0.0, {}, {}, {}};
  for (Index j = 0; j < blocks.num_blocks(); ++j) {
    const auto s = ei(blocks.size(j));
    basis.U.push_back(Matrix::Identity(s, s));
    basis.ranks.push_back(blocks.size(j));
    basis.eigenvalues.push_back(Vector::Zero(s));
  }
  return basis;
}

double residue(const Matrix& C, const Matrix& U) {
  if (C.rows() != C.cols()) throw std::invalid_argument("residue needs a square matrix");
  if (U.cols() > 0 && U.rows() != C.rows()) throw std::invalid_argument("basis dimension mismatch");
  if (U.cols() == C.rows()) return 0.0;  // empty complement
  double r = C.trace();
  if (U.cols() > 0) r -= (U.transpose() * C * U).trace();
  return r;
}

Matrix gaussian_halton_nodes(Index n, Index d, Index skip) {
  const auto primes = first_primes(d);
  const boost::math::normal_distribution<double> std_normal;
  Matrix out(ei(n), ei(d));
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c) {
      const double u = radical_inverse(i + skip, primes[c]);
      out(ei(i), ei(c)) = boost::math::quantile(std_normal, std::clamp(u, 1e-300, 1.0 - 1e-16));
    }
  return out;
}

RidgePosterior::RidgePosterior(const PosteriorProblem& problem, LLISBasis basis, Index n_mc, std::uint64_t seed)
    : BlockedDensityModel(problem.blocks(), complete_graph(problem.blocks().num_blocks())),
      prior_(problem.prior),
      likelihood_(problem.likelihood),
      basis_(std::move(basis)) {
  if (!(basis_.blocks == problem.blocks())) throw std::invalid_argument("basis does not match the problem blocks");
  sqrt_c_ = prior_->sqrt_covariance();
  inv_sqrt_c_ = prior_->inv_sqrt_covariance();
  const Matrix pr = basis_.projector();
  const Matrix pp = basis_.complement_projector();
  proj_r_ = sqrt_c_ * pr * inv_sqrt_c_;
  if (const auto quad = likelihood_->quadratic()) {
    const Matrix qt = sqrt_c_ * quad->Q * sqrt_c_;
    const Vector lt = sqrt_c_ * quad->q;
    QuadraticForm f;
    f.Q = inv_sqrt_c_ * (pr * qt * pr) * inv_sqrt_c_;
    f.Q = 0.5 * (f.Q + f.Q.transpose());
    f.q = inv_sqrt_c_ * (pr * lt);
    f.c = quad->c - 0.5 * (qt * pp).trace();
    exact_ = std::move(f);
    return;
  }
  if (n_mc == 0) throw std::invalid_argument("n_mc must be positive");
  // Halton nodes with a seeded Cranley-Patterson shift, projected onto the
  // uninformed directions.
  const Index d = problem.dim();
  Philox rng(seed, 0);
  std::vector<double> shift(d);
  for (auto& s : shift) s = rng.uniform();
  const auto primes = first_primes(d);
  const boost::math::normal_distribution<double> std_normal;
  offsets_.reserve(n_mc);
  for (Index i = 0; i < n_mc; ++i) {
    Vector z(ei(d));
    for (Index c = 0; c < d; ++c) {
      double u = radical_inverse(i + 1, primes[c]) + shift[c];
      u -= std::floor(u);
      z[ei(c)] = boost::math::quantile(std_normal, std::clamp(u, 1e-300, 1.0 - 1e-16));
    }
    offsets_.push_back(sqrt_c_ * (pp * z));
  }
}

double RidgePosterior::log_ridge_likelihood(const Vector& x) const {
  check_point(x);
  if (exact_) return -0.5 * x.dot(exact_->Q * x) + exact_->q.dot(x) + exact_->c;
  const Vector xr = proj_r_ * x;
  double s = 0.0;
  for (const auto& o : offsets_) s += likelihood_->value(xr + o);
  return s / static_cast<double>(offsets_.size());
}

double RidgePosterior::log_density(const Vector& x) const { return prior_->log_density(x) + log_ridge_likelihood(x); }

Vector RidgePosterior::score(const Vector& x) const {
  check_point(x);
  Vector g = prior_->score(x);
  if (exact_) return g - exact_->Q * x + exact_->q;
  const Vector xr = proj_r_ * x;
  Vector acc = Vector::Zero(x.size());
  for (const auto& o : offsets_) acc += likelihood_->gradient(xr + o);
  return g + proj_r_.transpose() * acc / static_cast<double>(offsets_.size());
}

Matrix RidgePosterior::hessian(const Vector& x) const {
  check_point(x);
  Matrix h = prior_->hessian(x);
  if (exact_) return h - exact_->Q;
  const Vector xr = proj_r_ * x;
  Matrix acc = Matrix::Zero(x.size(), x.size());
  for (const auto& o : offsets_) acc += likelihood_->hessian(xr + o);
  return h + proj_r_.transpose() * acc * proj_r_ / static_cast<double>(offsets_.size());
}

Vector RidgePosterior::block_score(const Vector& x, Index j) const { return blocks().slice(score(x), j); }

Matrix RidgePosterior::hessian_block(const Vector& x, Index j, Index k) const {
  return blocks().block(hessian(x), j, k);
}

GaussianModel RidgePosterior::as_gaussian_model() const {
  if (!exact_) throw UnsupportedError("ridge posterior is not Gaussian for a non-quadratic likelihood");
  Matrix precision = prior_->precision() + exact_->Q;
  precision = 0.5 * (precision + precision.transpose());
  const Vector mean = precision.ldlt().solve(exact_->q);
  return GaussianModel(blocks(), precision, mean, graph());
}

RidgePosterior build_ridge_posterior(const PosteriorProblem& problem, const LLISBasis& basis, Index n_mc,
                                     std::uint64_t seed) {
  return RidgePosterior(problem, basis, n_mc, seed);
}

ErrorCertificate error_certificate(const PosteriorProblem& problem, const LLISBasis& basis,
                                   const DiagnosticMatrices& diag) {
  const Index b = problem.blocks().num_blocks();
  if (diag.G.size() != b || diag.H.size() != b) throw std::invalid_argument("missing diagnostics");
  if (basis.U.size() != b) throw std::invalid_argument("basis does not match the problem blocks");
  if (!(problem.m > 0.0)) throw NotLogConcaveError("certificate needs m > 0");
  ErrorCertificate out;
  out.per_block_terms.resize(b);
  double worst = 0.0;
  for (Index k = 0; k < b; ++k) {
    double t = residue(diag.G[k], basis.U[k]);
    for (Index j = 0; j < b; ++j) t += residue(diag.H[j][k], basis.U[j]);
    out.per_block_terms[k] = std::max(0.0, t);
    worst = std::max(worst, out.per_block_terms[k]);
  }
  const double kappa = problem.M / problem.m;
  const double snk = problem.S * std::tgamma(problem.nu + 1.0) * std::pow(kappa, problem.nu);
  out.constant = std::pow(problem.m, -1.5) * snk * snk;
  out.residue_factor = std::sqrt(worst);
  out.value = out.constant * out.residue_factor;
  return out;
}

ErrorCertificate error_certificate(const PosteriorProblem& problem, const RidgePosterior& ridge,
                                   const Matrix& samples_from_pi_r) {
  return error_certificate(problem, ridge.basis(),
                           estimate_diagnostics(problem, samples_from_pi_r, SamplingMeasure::approximation));
}

}  // namespace locality_lab
