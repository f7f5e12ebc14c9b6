#include "locality_lab/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "locality_lab/linalg.hpp"
#include "locality_lab/parallel.hpp"
#include "locality_lab/rng.hpp"

namespace locality_lab {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

void check_state(const Vector& x, Index step) {
  const double nrm = x.norm();
  if (!std::isfinite(nrm) || nrm > kDivergenceNorm) throw DivergenceError(step, nrm);
}

// One Euler-Maruyama step in place.
void em_step(const BlockedDensityModel& model, Vector& x, double h, Philox& rng) {
  const double noise = std::sqrt(2.0 * h);
  const Vector g = model.score(x);
  for (Eigen::Index c = 0; c < x.size(); ++c) x[c] += h * g[c] + noise * rng.normal();
}

double small_op_norm(const Eigen::Ref<const Matrix>& a) {
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  if (a.rows() == 2 && a.cols() == 2) {
    // sigma_max^2 = (s + sqrt(s^2 - 4 det^2)) / 2 with s = ||A||_F^2
    const double s = a.squaredNorm();
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    return std::sqrt(0.5 * (s + std::sqrt(std::max(0.0, s * s - 4.0 * det * det))));
  }
  return linalg::op_norm(a);
}

void block_op_norms(const BlockStructure& blocks, const Matrix& j, Matrix& out) {
  if (blocks.all_scalar()) {
    out = j.cwiseAbs();
    return;
  }
  const Index b = blocks.num_blocks();
  for (Index r = 0; r < b; ++r)
    for (Index c = 0; c < b; ++c)
      out(ei(r), ei(c)) = small_op_norm(j.block(ei(blocks.offset(r)), ei(blocks.offset(c)),
                                                ei(blocks.size(r)), ei(blocks.size(c))));
}

// W(i, :) = grad phi(X_{t,i})^T J(block i, :)
void pathwise_rows(const BlockStructure& blocks, const TestFunction& phi, const Vector& x, const Matrix& j,
                   Matrix& out) {
  for (Index i = 0; i < blocks.num_blocks(); ++i) {
    const Vector g = phi.gradient(blocks.slice(x, i));
    out.row(ei(i)) = g.transpose() * j.middleRows(ei(blocks.offset(i)), ei(blocks.size(i)));
  }
}

struct ProbeIntegrals {
  Matrix norm_mean;
  Matrix norm_se;
  std::vector<Matrix> pathwise;  // chain means, b x d, one per test function
  double t_end = 0.0;
  bool converged = false;
};

ProbeIntegrals integrate_probe(const BlockedDensityModel& model, const Vector& x0, const SteinConfig& cfg,
                               double decay_rate, const std::vector<const TestFunction*>& phis,
                               std::uint64_t probe_seed) {
  const auto& blocks = model.blocks();
  const Index b = blocks.num_blocks();
  const auto d = ei(model.dim());
  const double h = cfg.langevin.step_size;
  const Index chains = cfg.langevin.num_chains;
  Index max_steps = cfg.langevin.num_steps;
  if (decay_rate > 0.0) {
    const double horizon_steps = std::ceil(cfg.horizon_factor / (decay_rate * h));
    if (horizon_steps < static_cast<double>(max_steps)) max_steps = static_cast<Index>(horizon_steps);
  }
  const bool shared_jacobian = model.has_constant_hessian();
  const bool need_states = !phis.empty() || !shared_jacobian;
  const Index state_chains = need_states ? chains : 0;

  std::vector<Vector> xs(state_chains, x0);
  std::vector<Philox> rngs;
  rngs.reserve(state_chains);
  for (Index c = 0; c < state_chains; ++c) rngs.emplace_back(probe_seed, c);

  const Index jac_count = shared_jacobian ? 1 : chains;
  std::vector<Matrix> jac(jac_count, Matrix::Identity(d, d));
  SparseMatrix const_hess;
  if (shared_jacobian) const_hess = model.sparse_hessian(x0);

  std::vector<Matrix> norm_sum(jac_count, Matrix::Zero(ei(b), ei(b)));
  std::vector<Matrix> norm_last(jac_count, Matrix::Zero(ei(b), ei(b)));
  Matrix norm_first = Matrix::Zero(ei(b), ei(b));
  const Index nphi = phis.size();
  // [phi][chain]
  std::vector<std::vector<Matrix>> path_sum(nphi, std::vector<Matrix>(state_chains, Matrix::Zero(ei(b), d)));
  std::vector<std::vector<Matrix>> path_last = path_sum;
  std::vector<std::vector<Matrix>> path_first = path_sum;

  Matrix f(ei(b), ei(b));
  Matrix row(ei(b), d);
  ProbeIntegrals out;
  Index t = 0;
  for (;; ++t) {
    Matrix mean_integrand = Matrix::Zero(ei(b), ei(b));
    for (Index c = 0; c < jac_count; ++c) {
      block_op_norms(blocks, jac[c], f);
      norm_sum[c] += f;
      norm_last[c] = f;
      if (t == 0 && c == 0) norm_first = f;
      mean_integrand += f;
    }
    mean_integrand /= static_cast<double>(jac_count);
    for (Index p = 0; p < nphi; ++p)
      for (Index c = 0; c < state_chains; ++c) {
        pathwise_rows(blocks, *phis[p], xs[c], jac[shared_jacobian ? 0 : c], row);
        path_sum[p][c] += row;
        path_last[p][c] = row;
        if (t == 0) path_first[p][c] = row;
      }

    const double worst_row = mean_integrand.rowwise().sum().maxCoeff();
    if (worst_row < cfg.relative_threshold) {
      out.converged = true;
      break;
    }
    if (t >= max_steps) break;

    if (shared_jacobian) jac[0] += h * (const_hess * jac[0]);
    for (Index c = 0; c < state_chains; ++c) {
      if (!shared_jacobian) {
        const SparseMatrix hs = model.sparse_hessian(xs[c]);
        jac[c] += h * (hs * jac[c]);
      }
      em_step(model, xs[c], h, rngs[c]);
      check_state(xs[c], t + 1);
    }
  }
  out.t_end = static_cast<double>(t) * h;

  // trapezoid: h * (sum - (first + last) / 2)
  std::vector<Matrix> integrals(jac_count);
  for (Index c = 0; c < jac_count; ++c) integrals[c] = h * (norm_sum[c] - 0.5 * (norm_first + norm_last[c]));
  out.norm_mean = Matrix::Zero(ei(b), ei(b));
  for (const auto& m : integrals) out.norm_mean += m;
  out.norm_mean /= static_cast<double>(jac_count);
  out.norm_se = Matrix::Zero(ei(b), ei(b));
  if (jac_count > 1) {
    for (const auto& m : integrals) out.norm_se += (m - out.norm_mean).cwiseAbs2();
    out.norm_se = (out.norm_se / static_cast<double>(jac_count - 1) / static_cast<double>(jac_count)).cwiseSqrt();
  }
  out.pathwise.assign(nphi, Matrix::Zero(ei(b), d));
  for (Index p = 0; p < nphi; ++p) {
    for (Index c = 0; c < state_chains; ++c)
      out.pathwise[p] += h * (path_sum[p][c] - 0.5 * (path_first[p][c] + path_last[p][c]));
    if (state_chains > 0) out.pathwise[p] /= static_cast<double>(state_chains);
  }
  return out;
}

double pathwise_block_norm(const BlockStructure& blocks, const Matrix& w, Index i, Index j) {
  return w.row(ei(i)).segment(ei(blocks.offset(j)), ei(blocks.size(j))).norm();
}

struct Setup {
  double decay_rate = 0.0;
  bool reliable = true;
  std::vector<std::string> warnings;
};

Setup prepare(const BlockedDensityModel& model, const Matrix& probes, const SteinConfig& cfg) {
  cfg.langevin.validate();
  if (probes.rows() == 0) throw std::invalid_argument("need at least one probe point");
  if (static_cast<Index>(probes.cols()) != model.dim()) throw std::invalid_argument("probe dimension mismatch");
  Setup s;
  s.decay_rate = cfg.decay_rate ? *cfg.decay_rate : convexity_bounds(model, probes).first;
  if (!(s.decay_rate > 0.0)) {
    s.reliable = false;
    std::ostringstream msg;
    msg << "model is not strongly log-concave on the probes (m = " << s.decay_rate
        << "); estimates are unreliable";
    s.warnings.push_back(msg.str());
  }
  return s;
}

double tail_bound_for(double m, double t_end) {
  return m > 0.0 ? std::exp(-m * t_end) / m : std::numeric_limits<double>::infinity();
}

}  // namespace

void LangevinConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw std::invalid_argument("step size must be positive");
  if (num_steps == 0) throw std::invalid_argument("num_steps must be positive");
  if (burn_in >= num_steps) throw std::invalid_argument("burn_in must be smaller than num_steps");
  if (num_chains == 0) throw std::invalid_argument("num_chains must be positive");
  if (thin == 0) throw std::invalid_argument("thin must be positive");
}

LangevinPath simulate(const BlockedDensityModel& model, const Vector& x0, const LangevinConfig& cfg, Index chain) {
  cfg.validate();
  if (static_cast<Index>(x0.size()) != model.dim()) throw std::invalid_argument("initial point dimension mismatch");
  if (!model.score(x0).allFinite()) throw NumericalError("score is not finite at the initial point");
  const double h = cfg.step_size;
  Philox rng(cfg.seed, chain);
  LangevinPath path;
  path.step_size = h;
  path.states.reserve(cfg.num_steps + 1);
  path.states.push_back(x0);
  const auto d = ei(model.dim());
  if (cfg.propagate_jacobian) {
    path.jacobian.emplace();
    path.jacobian->reserve(cfg.num_steps + 1);
    path.jacobian->push_back(Matrix::Identity(d, d));
  }
  Vector x = x0;
  for (Index t = 1; t <= cfg.num_steps; ++t) {
    if (cfg.propagate_jacobian) {
      const Matrix& prev = path.jacobian->back();
      path.jacobian->push_back(prev + h * (model.sparse_hessian(x) * prev));
    }
    em_step(model, x, h, rng);
    check_state(x, t);
    path.states.push_back(x);
  }
  return path;
}

std::vector<LangevinPath> simulate_chains(const BlockedDensityModel& model, const Vector& x0,
                                          const LangevinConfig& cfg) {
  cfg.validate();
  std::vector<LangevinPath> out(cfg.num_chains);
  parallel_for(cfg.num_chains, [&](Index c) { out[c] = simulate(model, x0, cfg, c); });
  return out;
}

Matrix draw_samples(const BlockedDensityModel& model, const Vector& x0, const LangevinConfig& cfg) {
  cfg.validate();
  if (static_cast<Index>(x0.size()) != model.dim()) throw std::invalid_argument("initial point dimension mismatch");
  const Index per_chain = (cfg.num_steps - cfg.burn_in) / cfg.thin;
  Matrix out(ei(per_chain * cfg.num_chains), ei(model.dim()));
  parallel_for(cfg.num_chains, [&](Index c) {
    Philox rng(cfg.seed, c);
    Vector x = x0;
    Index row = c * per_chain;
    for (Index t = 1; t <= cfg.num_steps; ++t) {
      em_step(model, x, cfg.step_size, rng);
      check_state(x, t);
      if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 && row < (c + 1) * per_chain)
        out.row(ei(row++)) = x.transpose();
    }
  });
  return out;
}

Matrix default_probe_points(const BlockedDensityModel& model, const Vector& x0, const LangevinConfig& cfg,
                            Index count) {
  if (count == 0) throw std::invalid_argument("need at least one probe");
  LangevinConfig one = cfg;
  one.num_chains = 1;
  one.thin = std::max<Index>(1, (cfg.num_steps - cfg.burn_in) / count);
  Matrix all = draw_samples(model, x0, one);
  const Index rows = std::min<Index>(count, static_cast<Index>(all.rows()));
  return all.topRows(ei(rows));
}

TestFunction coordinate_projection(Index coord) {
  TestFunction f;
  f.name = "coord" + std::to_string(coord);
  f.value = [coord](const Vector& x) {
    if (ei(coord) >= x.size()) throw std::out_of_range("coordinate outside block");
    return x[ei(coord)];
  };
  f.gradient = [coord](const Vector& x) {
    if (ei(coord) >= x.size()) throw std::out_of_range("coordinate outside block");
    Vector g = Vector::Zero(x.size());
    g[ei(coord)] = 1.0;
    return g;
  };
  return f;
}

TestFunction softplus_ramp(double shift, double sharpness) {
  if (!(sharpness > 0.0)) throw std::invalid_argument("sharpness must be positive");
  TestFunction f;
  std::ostringstream name;
  name << "softplus(" << shift << "," << sharpness << ")";
  f.name = name.str();
  f.value = [shift, sharpness](const Vector& x) {
    const double z = sharpness * (x.sum() / std::sqrt(static_cast<double>(x.size())) - shift);
    return (z > 30.0 ? z : std::log1p(std::exp(z))) / sharpness;
  };
  f.gradient = [shift, sharpness](const Vector& x) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(x.size()));
    const double z = sharpness * (x.sum() * inv - shift);
    const double sig = 1.0 / (1.0 + std::exp(-z));
    return Vector::Constant(x.size(), sig * inv);
  };
  return f;
}

TestFunction random_piecewise_linear(Index pieces, std::uint64_t seed) {
  if (pieces == 0) throw std::invalid_argument("need at least one piece");
  Philox rng(seed, 0);
  // knots on [-3, 3]; slope k applies on [knot_{k-1}, knot_k)
  std::vector<double> knots(pieces - 1);
  for (auto& k : knots) k = -3.0 + 6.0 * rng.uniform();
  std::sort(knots.begin(), knots.end());
  std::vector<double> slopes(pieces);
  for (auto& s : slopes) s = 2.0 * rng.uniform() - 1.0;
  TestFunction f;
  f.name = "pl" + std::to_string(pieces) + "_" + std::to_string(seed);
  f.value = [knots, slopes](const Vector& x) {
    const double z = x[0];
    double v = 0.0;
    double left = -std::numeric_limits<double>::infinity();
    // integrate slopes from 0 to z
    for (Index p = 0; p < slopes.size(); ++p) {
      const double right = p < knots.size() ? knots[p] : std::numeric_limits<double>::infinity();
      const double lo = std::max(std::min(0.0, z), left);
      const double hi = std::min(std::max(0.0, z), right);
      if (hi > lo) v += slopes[p] * (hi - lo);
      left = right;
    }
    return z >= 0.0 ? v : -v;
  };
  f.gradient = [knots, slopes](const Vector& x) {
    const double z = x[0];
    const auto idx = static_cast<Index>(std::upper_bound(knots.begin(), knots.end(), z) - knots.begin());
    Vector g = Vector::Zero(x.size());
    g[0] = slopes[idx];
    return g;
  };
  return f;
}

std::vector<TestFunction> standard_test_functions(std::uint64_t seed, Index random_count) {
  std::vector<TestFunction> out{coordinate_projection(0), softplus_ramp(0.0, 1.0), softplus_ramp(1.0, 4.0)};
  for (Index r = 0; r < random_count; ++r) out.push_back(random_piecewise_linear(4, mix_seed(seed, r)));
  return out;
}

SteinGradientEstimate stein_gradient_estimate(const BlockedDensityModel& model, Index block,
                                              const TestFunction& phi, const Matrix& probe_points,
                                              const SteinConfig& cfg) {
  const auto& blocks = model.blocks();
  if (block >= blocks.num_blocks()) throw std::out_of_range("block index out of range");
  const Setup setup = prepare(model, probe_points, cfg);
  const Index b = blocks.num_blocks();
  const Index probes = static_cast<Index>(probe_points.rows());
  std::vector<ProbeIntegrals> per_probe(probes);
  const std::vector<const TestFunction*> phis{&phi};
  parallel_for(probes, [&](Index p) {
    per_probe[p] = integrate_probe(model, probe_points.row(ei(p)).transpose(), cfg, setup.decay_rate, phis,
                                   mix_seed(cfg.langevin.seed, p));
  });

  SteinGradientEstimate est;
  est.block = block;
  est.probe_points = probe_points;
  est.decay_rate = setup.decay_rate;
  est.reliable = setup.reliable;
  est.warnings = setup.warnings;
  est.per_block_sup.assign(b, 0.0);
  est.standard_errors.assign(b, 0.0);
  est.pathwise_sup.assign(b, 0.0);
  double t_end = std::numeric_limits<double>::infinity();
  for (const auto& pr : per_probe) {
    for (Index j = 0; j < b; ++j) {
      const double v = pr.norm_mean(ei(block), ei(j));
      if (v > est.per_block_sup[j]) {
        est.per_block_sup[j] = v;
        est.standard_errors[j] = pr.norm_se(ei(block), ei(j));
      }
      est.pathwise_sup[j] = std::max(est.pathwise_sup[j], pathwise_block_norm(blocks, pr.pathwise[0], block, j));
    }
    est.converged = est.converged && pr.converged;
    t_end = std::min(t_end, pr.t_end);
  }
  for (Index j = 0; j < b; ++j) {
    est.sum += est.per_block_sup[j];
    est.pathwise_sum += est.pathwise_sup[j];
  }
  est.horizon = t_end;
  est.tail_bound = tail_bound_for(setup.decay_rate, t_end);
  if (!est.converged) {
    std::ostringstream msg;
    msg << "integrand did not decay below " << cfg.relative_threshold << " by t = " << t_end
        << "; per-block tail bound " << est.tail_bound;
    est.warnings.push_back(msg.str());
  }
  return est;
}

EmpiricalDelta empirical_delta(const BlockedDensityModel& model, const Matrix& probe_points,
                               const std::vector<TestFunction>& test_functions, const SteinConfig& cfg) {
  const auto& blocks = model.blocks();
  const Setup setup = prepare(model, probe_points, cfg);
  const Index b = blocks.num_blocks();
  // A constant Hessian makes the Jacobian independent of the start point.
  const bool one_probe = model.has_constant_hessian() && test_functions.empty();
  const Index probes = one_probe ? 1 : static_cast<Index>(probe_points.rows());
  std::vector<const TestFunction*> phis;
  for (const auto& tf : test_functions) phis.push_back(&tf);
  std::vector<ProbeIntegrals> per_probe(probes);
  parallel_for(probes, [&](Index p) {
    per_probe[p] = integrate_probe(model, probe_points.row(ei(p)).transpose(), cfg, setup.decay_rate, phis,
                                   mix_seed(cfg.langevin.seed, p));
  });

  Matrix sup = Matrix::Zero(ei(b), ei(b));
  Matrix sup_se = Matrix::Zero(ei(b), ei(b));
  std::vector<Matrix> path_sup(phis.size(), Matrix::Zero(ei(b), ei(b)));
  EmpiricalDelta out;
  double t_end = std::numeric_limits<double>::infinity();
  for (const auto& pr : per_probe) {
    for (Index i = 0; i < b; ++i)
      for (Index j = 0; j < b; ++j) {
        if (pr.norm_mean(ei(i), ei(j)) > sup(ei(i), ei(j))) {
          sup(ei(i), ei(j)) = pr.norm_mean(ei(i), ei(j));
          sup_se(ei(i), ei(j)) = pr.norm_se(ei(i), ei(j));
        }
        for (Index p = 0; p < phis.size(); ++p)
          path_sup[p](ei(i), ei(j)) =
              std::max(path_sup[p](ei(i), ei(j)), pathwise_block_norm(blocks, pr.pathwise[p], i, j));
      }
    out.converged = out.converged && pr.converged;
    t_end = std::min(t_end, pr.t_end);
  }
  out.per_block_sums.resize(b);
  for (Index i = 0; i < b; ++i) {
    out.per_block_sums[i] = sup.row(ei(i)).sum();
    if (i == 0 || out.per_block_sums[i] > out.value) {
      out.value = out.per_block_sums[i];
      out.argmax_block = i;
    }
  }
  // SEs of sup entries combined as independent
  out.standard_error = std::sqrt(sup_se.row(ei(out.argmax_block)).squaredNorm());
  for (const auto& ps : path_sup) out.pathwise_value = std::max(out.pathwise_value, ps.rowwise().sum().maxCoeff());
  out.decay_rate = setup.decay_rate;
  out.reliable = setup.reliable;
  out.warnings = setup.warnings;
  out.tail_bound = tail_bound_for(setup.decay_rate, t_end);
  if (!out.converged) {
    std::ostringstream msg;
    msg << "integrand did not decay below " << cfg.relative_threshold << " by t = " << t_end
        << "; per-block tail bound " << out.tail_bound;
    out.warnings.push_back(msg.str());
  }
  return out;
}

}  // namespace locality_lab
