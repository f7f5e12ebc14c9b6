#include "locality_lab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "locality_lab/assignment.hpp"
#include "locality_lab/linalg.hpp"
#include "locality_lab/rng.hpp"

namespace locality_lab {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

std::vector<double> column(const Matrix& m, Eigen::Index c) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, c);
  return out;
}

void require_same_blocks(const BlockedDensityModel& a, const BlockedDensityModel& b) {
  if (!(a.blocks() == b.blocks())) throw std::invalid_argument("models use different block structures");
}

// Covariance block (i, i) and mean slice of a Gaussian.
std::pair<Vector, Matrix> block_marginal(const GaussianModel& g, Index i) {
  return {g.blocks().slice(g.mean(), i), g.blocks().block(g.covariance(), i, i)};
}

}  // namespace

std::string to_string(W1Method m) {
  switch (m) {
    case W1Method::empirical_1d: return "empirical_1d";
    case W1Method::gaussian_exact: return "gaussian_exact";
    case W1Method::gaussian_w2_upper: return "gaussian_w2_upper";
    case W1Method::assignment: return "assignment";
  }
  return "unknown";
}

double empirical_w1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empirical W1 needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == m) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(n);
  }
  // Quantile functions are constant on (i/n, (i+1)/n] and (j/m, (j+1)/m];
  // walk the merged breakpoints using integer cross-multiples i*m vs j*n.
  double s = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t pos = 0;  // current breakpoint in units of 1/(n m)
  while (i < n && j < m) {
    const std::size_t next_a = (i + 1) * m;
    const std::size_t next_b = (j + 1) * n;
    const std::size_t next = std::min(next_a, next_b);
    s += static_cast<double>(next - pos) * std::abs(a[i] - b[j]);
    pos = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return s / (static_cast<double>(n) * static_cast<double>(m));
}

double folded_normal_mean(double mu, double sigma) {
  sigma = std::abs(sigma);
  if (sigma == 0.0) return std::abs(mu);
  const boost::math::normal_distribution<double> std_normal;
  const double z = mu / sigma;
  return sigma * std::sqrt(2.0 / M_PI) * std::exp(-0.5 * z * z) + mu * (1.0 - 2.0 * boost::math::cdf(std_normal, -z));
}

double gaussian_w1_1d(double mu1, double sigma1, double mu2, double sigma2) {
  if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0)) throw std::invalid_argument("standard deviations must be nonnegative");
  return folded_normal_mean(mu1 - mu2, sigma1 - sigma2);
}

double gaussian_w2(const Vector& mu1, const Matrix& cov1, const Vector& mu2, const Matrix& cov2) {
  if (mu1.size() != mu2.size() || cov1.rows() != mu1.size() || cov2.rows() != mu2.size())
    throw std::invalid_argument("Gaussian dimensions differ");
  const Matrix r1 = linalg::sym_sqrt(cov1);
  const Matrix cross = linalg::sym_sqrt(r1 * cov2 * r1);
  const double bures = cov1.trace() + cov2.trace() - 2.0 * cross.trace();
  return std::sqrt(std::max(0.0, (mu1 - mu2).squaredNorm() + bures));
}

MarginalW1Report marginal_w1_empirical(const BlockStructure& blocks, const Matrix& a, const Matrix& b) {
  if (!blocks.all_scalar())
    throw UnsupportedError("empirical marginal W1 is only available for scalar blocks");
  if (static_cast<Index>(a.cols()) != blocks.total_dim() || static_cast<Index>(b.cols()) != blocks.total_dim())
    throw std::invalid_argument("sample dimension mismatch");
  MarginalW1Report r;
  r.method = W1Method::empirical_1d;
  r.samples_a = static_cast<Index>(a.rows());
  r.samples_b = static_cast<Index>(b.rows());
  r.per_block_w1.resize(blocks.num_blocks());
  for (Index i = 0; i < blocks.num_blocks(); ++i) {
    r.per_block_w1[i] = empirical_w1_1d(column(a, ei(i)), column(b, ei(i)));
    r.max_w1 = std::max(r.max_w1, r.per_block_w1[i]);
  }
  return r;
}

MarginalW1Report marginal_w1_gaussian(const GaussianModel& a, const GaussianModel& b) {
  require_same_blocks(a, b);
  const auto& blocks = a.blocks();
  MarginalW1Report r;
  r.method = blocks.all_scalar() ? W1Method::gaussian_exact : W1Method::gaussian_w2_upper;
  r.per_block_w1.resize(blocks.num_blocks());
  for (Index i = 0; i < blocks.num_blocks(); ++i) {
    const auto [ma, ca] = block_marginal(a, i);
    const auto [mb, cb] = block_marginal(b, i);
    r.per_block_w1[i] = ca.rows() == 1 ? gaussian_w1_1d(ma[0], std::sqrt(ca(0, 0)), mb[0], std::sqrt(cb(0, 0)))
                                       : gaussian_w2(ma, ca, mb, cb);
    r.max_w1 = std::max(r.max_w1, r.per_block_w1[i]);
  }
  return r;
}

ScoreDiscrepancy score_discrepancy(const BlockedDensityModel& pi, const BlockedDensityModel& pi_prime,
                                   const Matrix& samples_from_pi) {
  require_same_blocks(pi, pi_prime);
  if (samples_from_pi.rows() == 0) throw std::invalid_argument("need at least one sample");
  if (static_cast<Index>(samples_from_pi.cols()) != pi.dim()) throw std::invalid_argument("sample dimension mismatch");
  const auto& blocks = pi.blocks();
  const Index b = blocks.num_blocks();
  const auto n = samples_from_pi.rows();
  Matrix vals(n, ei(b));
  for (Eigen::Index s = 0; s < n; ++s) {
    const Vector x = samples_from_pi.row(s).transpose();
    const Vector diff = pi_prime.score(x) - pi.score(x);
    for (Index j = 0; j < b; ++j) vals(s, ei(j)) = blocks.slice(diff, j).norm();
  }
  ScoreDiscrepancy out;
  out.per_block_l1.resize(b);
  out.mc_standard_errors.resize(b);
  for (Index j = 0; j < b; ++j) {
    const auto col = vals.col(ei(j));
    const double mean = col.mean();
    out.per_block_l1[j] = mean;
    out.mc_standard_errors[j] =
        n > 1 ? std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1) / static_cast<double>(n))
              : 0.0;
    if (j == 0 || mean > out.max_l1) {
      out.max_l1 = mean;
      out.argmax_block = j;
    }
  }
  return out;
}

Matrix sample_model(const BlockedDensityModel& model, Index n, std::uint64_t seed, const SamplingOptions& opts) {
  if (n == 0) throw std::invalid_argument("need at least one sample");
  if (const auto* g = as_gaussian(model)) return g->sample(n, seed);
  LangevinConfig cfg = opts.langevin;
  cfg.seed = seed;
  if (cfg.num_chains == 0) throw std::invalid_argument("invalid sampler configuration");
  const Vector x0 = Vector::Zero(ei(model.dim()));
  if (cfg.step_size <= 0.0) {
    Philox rng(mix_seed(seed, 0x5eed), 0);
    Matrix probes(8, ei(model.dim()));
    probes.row(0).setZero();
    for (Eigen::Index r = 1; r < probes.rows(); ++r) probes.row(r) = rng.normal_vector(model.dim()).transpose();
    cfg.step_size = 0.05 / std::max(1e-12, convexity_bounds(model, probes).second);
  }
  if (cfg.thin == 0) cfg.thin = static_cast<Index>(std::ceil(opts.thin_time / cfg.step_size));
  cfg.burn_in = std::max(cfg.burn_in, static_cast<Index>(std::ceil(opts.burn_in_time / cfg.step_size)));
  const Index per_chain = (n + cfg.num_chains - 1) / cfg.num_chains;
  cfg.num_steps = cfg.burn_in + per_chain * cfg.thin;
  return draw_samples(model, x0, cfg).topRows(ei(n));
}

namespace {

InequalityReport finish(InequalityReport r, const ScoreDiscrepancy& sd, double delta, double factor) {
  r.delta = delta;
  r.per_block_discrepancy = sd.per_block_l1;
  r.rhs = delta * factor * sd.max_l1;
  r.rhs_standard_error = delta * factor * sd.mc_standard_errors[sd.argmax_block];
  r.slack = r.rhs - r.lhs;
  r.tolerance = 3.0 * r.rhs_standard_error + r.sampling_floor;
  r.pass = r.lhs <= r.rhs + r.tolerance;
  return r;
}

}  // namespace

InequalityReport verify_marginal_inequality(const BlockedDensityModel& pi, const BlockedDensityModel& pi_prime,
                                            const DeltaBound& delta, Index n_samples, std::uint64_t seed,
                                            const SamplingOptions& opts) {
  require_same_blocks(pi, pi_prime);
  if (n_samples < 2) throw std::invalid_argument("need at least two samples");
  const auto* ga = as_gaussian(pi);
  const auto* gb = as_gaussian(pi_prime);
  if (!(ga && gb) && !pi.blocks().all_scalar())
    throw UnsupportedError("marginal W1 for non-scalar blocks needs two Gaussian models");
  InequalityReport r;
  const Matrix xs = sample_model(pi, n_samples, mix_seed(seed, 1), opts);
  if (ga && gb) {
    const auto w = marginal_w1_gaussian(*ga, *gb);
    r.per_block_w1 = w.per_block_w1;
    r.lhs = w.max_w1;
    r.lhs_method = w.method;
    r.lhs_upper_bounded = w.method == W1Method::gaussian_w2_upper;
  } else {
    const Matrix ys = sample_model(pi_prime, n_samples, mix_seed(seed, 2), opts);
    const auto w = marginal_w1_empirical(pi.blocks(), xs, ys);
    r.per_block_w1 = w.per_block_w1;
    r.lhs = w.max_w1;
    r.lhs_method = W1Method::empirical_1d;
    // A second independent draw of pi measures the W1 noise level of the samplers.
    const Matrix xs2 = sample_model(pi, n_samples, mix_seed(seed, 3), opts);
    r.sampling_floor = marginal_w1_empirical(pi.blocks(), xs, xs2).max_w1;
  }
  for (Index i = 0; i < pi.blocks().num_blocks(); ++i) r.index_set.push_back(i);
  return finish(std::move(r), score_discrepancy(pi, pi_prime, xs), delta.value, 1.0);
}

InequalityReport verify_multiblock_inequality(const BlockedDensityModel& pi, const BlockedDensityModel& pi_prime,
                                              const DeltaBound& delta, const std::vector<Index>& index_set,
                                              Index n_samples, std::uint64_t seed, const SamplingOptions& opts) {
  require_same_blocks(pi, pi_prime);
  const auto& blocks = pi.blocks();
  if (index_set.empty()) throw std::invalid_argument("index set must be nonempty");
  if (index_set.size() > 3) throw UnsupportedError("joint W1 is only estimated for |I| <= 3");
  std::vector<Index> set = index_set;
  std::sort(set.begin(), set.end());
  if (std::adjacent_find(set.begin(), set.end()) != set.end()) throw std::invalid_argument("repeated index");
  Index cols = 0;
  for (Index i : set) {
    if (i >= blocks.num_blocks()) throw std::out_of_range("index outside the block range");
    cols += blocks.size(i);
  }
  if (cols > 3) throw UnsupportedError("joint W1 is only estimated in dimension <= 3");
  if (n_samples < 2) throw std::invalid_argument("need at least two samples");

  const Matrix xs = sample_model(pi, n_samples, mix_seed(seed, 1), opts);
  const Index sub = std::min(n_samples, opts.assignment_subsample);
  auto restrict = [&](const Matrix& full) {
    Matrix out(ei(sub), ei(cols));
    Eigen::Index c = 0;
    for (Index i : set) {
      out.middleCols(c, ei(blocks.size(i))) = full.topRows(ei(sub)).middleCols(ei(blocks.offset(i)), ei(blocks.size(i)));
      c += ei(blocks.size(i));
    }
    return out;
  };
  const Matrix ys = sample_model(pi_prime, sub, mix_seed(seed, 2), opts);
  const Matrix xs2 = sample_model(pi, sub, mix_seed(seed, 3), opts);
  const Matrix a = restrict(xs);
  InequalityReport r;
  r.index_set = set;
  r.lhs_method = W1Method::assignment;
  r.lhs = empirical_w1_assignment(a, restrict(ys));
  r.sampling_floor = empirical_w1_assignment(a, restrict(xs2));
  return finish(std::move(r), score_discrepancy(pi, pi_prime, xs), delta.value, static_cast<double>(set.size()));
}

}  // namespace locality_lab
