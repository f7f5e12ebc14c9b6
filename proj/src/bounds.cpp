#include "locality_lab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "locality_lab/linalg.hpp"
#include "locality_lab/rng.hpp"

namespace locality_lab {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

double factorial(int n) { return std::tgamma(static_cast<double>(n) + 1.0); }

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log P(Poisson(lam) = k)
double log_poisson(double k, double lam, double log_lam) { return -lam + k * log_lam - std::lgamma(k + 1.0); }

Matrix rk4_step(const Matrix& g, const Matrix& h0, const Matrix& hmid, const Matrix& h1, double dt) {
  const Matrix k1 = -h0 * g;
  const Matrix k2 = -hmid * (g + 0.5 * dt * k1);
  const Matrix k3 = -hmid * (g + 0.5 * dt * k2);
  const Matrix k4 = -h1 * (g + dt * k3);
  return g + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_h(const Matrix& h, const BlockStructure& blocks, const DependencyGraph& graph, double M, double t) {
  const auto d = ei(blocks.total_dim());
  if (h.rows() != d || h.cols() != d) throw std::invalid_argument("H_t has the wrong shape");
  if (!h.allFinite()) throw NumericalError("H_t has non-finite entries");
  const double scale = std::max(1.0, M);
  std::ostringstream where;
  where << " at t = " << t;
  if (linalg::asymmetry(h) > 1e-10 * scale) throw PreconditionError("H_t is not symmetric" + where.str());
  for (Index i = 0; i < blocks.num_blocks(); ++i)
    for (Index j = 0; j < blocks.num_blocks(); ++j)
      if (!graph.adjacent(i, j) && blocks.block(h, i, j).cwiseAbs().maxCoeff() > 0.0)
        throw PreconditionError("H_t has support outside the dependency graph" + where.str());
  const auto [lo, hi] = linalg::spectral_range(h);
  if (lo < -1e-10 * scale || hi > M * (1.0 + 1e-10))
    throw PreconditionError("spectrum of H_t leaves [0, M]" + where.str());
}

}  // namespace

std::string to_string(DeltaSource s) { return s == DeltaSource::graphical ? "graphical" : "diagonal_dominant"; }

DeltaBound delta_graphical(double S, int nu, double m, double M) {
  if (!(m > 0.0)) throw NotLogConcaveError("delta_graphical needs m > 0");
  if (!(S >= 1.0)) throw std::invalid_argument("S must be at least 1");
  if (nu < 1) throw std::invalid_argument("nu must be at least 1");
  if (!(M >= m)) throw std::invalid_argument("need m <= M");
  DeltaBound d;
  d.source = DeltaSource::graphical;
  d.S = S;
  d.nu = nu;
  d.m = m;
  d.M = M;
  d.kappa = M / m;
  d.value = S * factorial(nu) * std::pow(d.kappa, nu) / m;
  return d;
}

DeltaBound delta_diag_dominant(const Matrix& dominance) {
  if (dominance.rows() == 0 || dominance.rows() != dominance.cols())
    throw std::invalid_argument("dominance matrix must be square and nonempty");
  if (!dominance.allFinite() || (dominance.array() < 0.0).any())
    throw std::invalid_argument("dominance matrix entries must be finite and nonnegative");
  DeltaBound d;
  d.source = DeltaSource::diagonal_dominant;
  d.dominance = dominance;
  d.c = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < dominance.rows(); ++i) {
    const double margin = 2.0 * dominance(i, i) - dominance.row(i).sum();
    if (margin < d.c) {
      d.c = margin;
      d.worst_row = static_cast<Index>(i);
    }
  }
  if (!(d.c > 0.0)) throw DominanceViolation(d.worst_row, d.c);
  d.value = 1.0 / d.c;
  return d;
}

double gershgorin_lower_bound(const Matrix& dominance) {
  if (dominance.rows() == 0 || dominance.rows() != dominance.cols())
    throw std::invalid_argument("dominance matrix must be square and nonempty");
  Matrix sym = -0.5 * (dominance + dominance.transpose());
  sym.diagonal() = dominance.diagonal();
  double lo = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < sym.rows(); ++i)
    lo = std::min(lo, sym(i, i) - (sym.row(i).cwiseAbs().sum() - std::abs(sym(i, i))));
  return lo;
}

Matrix dominance_matrix_from_model(const BlockedDensityModel& model, const Matrix& probe_points) {
  if (probe_points.rows() == 0) throw std::invalid_argument("need at least one probe point");
  if (static_cast<Index>(probe_points.cols()) != model.dim()) throw std::invalid_argument("probe dimension mismatch");
  const Index b = model.blocks().num_blocks();
  Matrix out = Matrix::Zero(ei(b), ei(b));
  out.diagonal().setConstant(std::numeric_limits<double>::infinity());
  const Index evals = model.has_constant_hessian() ? 1 : static_cast<Index>(probe_points.rows());
  for (Index p = 0; p < evals; ++p) {
    const Vector x = probe_points.row(ei(p)).transpose();
    for (Index i = 0; i < b; ++i)
      for (Index j : model.graph().neighbors(i)) {
        const Matrix h = model.hessian_block(x, i, j);
        if (!h.allFinite()) throw NumericalError("non-finite Hessian block");
        if (i == j) {
          out(ei(i), ei(i)) = std::min(out(ei(i), ei(i)), linalg::spectral_range(-h).first);
        } else {
          out(ei(i), ei(j)) = std::max(out(ei(i), ei(j)), linalg::op_norm(h));
        }
      }
  }
  return out;
}

double diffusion_decay_bound(Index distance, double t, double M) {
  if (!(t >= 0.0)) throw std::invalid_argument("t must be nonnegative");
  if (!(M > 0.0)) throw std::invalid_argument("M must be positive");
  if (distance == 0) return 1.0;
  const double lam = t * M;
  if (lam == 0.0) return 0.0;
  const double log_lam = std::log(lam);
  const double k0 = static_cast<double>(distance);
  const double ninf = -std::numeric_limits<double>::infinity();
  if (k0 > lam) {
    // upper tail, terms decrease from k0 on
    double acc = ninf;
    for (double k = k0;; k += 1.0) {
      const double term = log_poisson(k, lam, log_lam);
      acc = log_add(acc, term);
      if (term < acc - 40.0 && k > lam + 1.0) break;
    }
    return std::min(1.0, std::exp(acc));
  }
  // 1 - lower tail; the lower terms increase towards k0 - 1
  double acc = ninf;
  for (double k = k0 - 1.0; k >= 0.0; k -= 1.0) {
    const double term = log_poisson(k, lam, log_lam);
    acc = log_add(acc, term);
    if (term < acc - 40.0) break;
  }
  return std::clamp(-std::expm1(acc), 0.0, 1.0);
}

double diffusion_decay_bound(HopDistance distance, double t, double M) {
  if (!distance.is_finite()) {
    if (!(t >= 0.0)) throw std::invalid_argument("t must be nonnegative");
    if (!(M > 0.0)) throw std::invalid_argument("M must be positive");
    return 0.0;
  }
  return diffusion_decay_bound(distance.value(), t, M);
}

DiffusionLemmaReport verify_diffusion_lemma(const MatrixPath& h_path, const BlockStructure& blocks,
                                            const DependencyGraph& graph, double M, double t_max, double dt,
                                            Index check_every) {
  if (!(M > 0.0)) throw std::invalid_argument("M must be positive");
  if (!(t_max >= 0.0) || !(dt > 0.0)) throw std::invalid_argument("need t_max >= 0 and dt > 0");
  if (graph.num_vertices() != blocks.num_blocks()) throw std::invalid_argument("graph and blocks disagree");
  if (check_every == 0) throw std::invalid_argument("check_every must be positive");
  const Index b = blocks.num_blocks();
  const auto dist = all_pairs_distances(graph);
  const auto d = ei(blocks.total_dim());
  const Index steps = static_cast<Index>(std::ceil(t_max / dt - 1e-12));

  Matrix g = Matrix::Identity(d, d);
  double g_norm = 1.0;
  DiffusionLemmaReport rep;
  rep.raw_margin = std::numeric_limits<double>::infinity();
  auto check = [&](double t) {
    const Matrix norms = linalg::block_norms(blocks, g);
    for (Index i = 0; i < b; ++i)
      for (Index j = 0; j < b; ++j) {
        const double m = diffusion_decay_bound(dist[i][j], t, M) - norms(ei(i), ei(j));
        ++rep.checks;
        if (m < rep.raw_margin) {
          rep.raw_margin = m;
          rep.worst_time = t;
          rep.worst_i = i;
          rep.worst_j = j;
        }
      }
    g_norm = std::max(g_norm, linalg::op_norm(g));
  };

  Matrix h0 = h_path(0.0);
  check_h(h0, blocks, graph, M, 0.0);
  check(0.0);
  double t = 0.0;
  for (Index s = 1; s <= steps; ++s) {
    const double h = std::min(dt, t_max - t);
    const Matrix hmid = h_path(t + 0.5 * h);
    const Matrix h1 = h_path(t + h);
    check_h(hmid, blocks, graph, M, t + 0.5 * h);
    check_h(h1, blocks, graph, M, t + h);
    g = rk4_step(g, h0, hmid, h1, h);
    t += h;
    h0 = h1;
    if (s % check_every == 0 || s == steps) check(t);
  }
  rep.slack = 10.0 * dt * M * t_max * g_norm;
  rep.worst_margin = rep.raw_margin + rep.slack;
  rep.ok = rep.worst_margin >= -1e-6;
  return rep;
}

MatrixPath random_banded_h_path(Index n, Index bandwidth, double M, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("need at least one site");
  if (!(M > 0.0)) throw std::invalid_argument("M must be positive");
  struct Bond {
    Index i, j;
    double w, sign, freq, phase;
  };
  Philox rng(seed, 0);
  std::vector<Bond> bonds;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j <= std::min(n - 1, i + bandwidth); ++j)
      bonds.push_back({i, j, rng.uniform(), rng.uniform() < 0.5 ? -1.0 : 1.0, 0.5 + 2.5 * rng.uniform(),
                       6.283185307179586 * rng.uniform()});
  std::vector<double> p(n), pf(n), pp(n);
  for (Index i = 0; i < n; ++i) {
    p[i] = rng.uniform();
    pf[i] = 0.5 + 2.5 * rng.uniform();
    pp[i] = 6.283185307179586 * rng.uniform();
  }
  // Gershgorin cap over all times, amplitudes vary in [0.5, 1.5]
  std::vector<double> cap(n);
  for (Index i = 0; i < n; ++i) cap[i] = 1.5 * p[i];
  for (const auto& bd : bonds) {
    cap[bd.i] += 3.0 * bd.w;
    cap[bd.j] += 3.0 * bd.w;
  }
  const double scale = M / *std::max_element(cap.begin(), cap.end());
  return [=](double t) {
    const auto nn = ei(n);
    Matrix h = Matrix::Zero(nn, nn);
    for (Index i = 0; i < n; ++i) h(ei(i), ei(i)) = p[i] * (1.0 + 0.5 * std::sin(pf[i] * t + pp[i]));
    for (const auto& bd : bonds) {
      const double w = bd.w * (1.0 + 0.5 * std::sin(bd.freq * t + bd.phase));
      h(ei(bd.i), ei(bd.i)) += w;
      h(ei(bd.j), ei(bd.j)) += w;
      h(ei(bd.i), ei(bd.j)) += bd.sign * w;
      h(ei(bd.j), ei(bd.i)) += bd.sign * w;
    }
    return Matrix(scale * h);
  };
}

LiSeriesCheck li_series_bound_check(double t, double x) {
  if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("x must lie in (0, 1)");
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("t must be nonnegative");
  LiSeriesCheck out;
  out.integer_t = t == std::floor(t);
  const double q = 1.0 - x;
  const double log_q = std::log(q);
  // Kahan summation; terms peak near k = t / (-log q)
  double sum = 0.0;
  double comp = 0.0;
  for (double k = 1.0;; k += 1.0) {
    const double term = std::exp(t * std::log(k) + k * log_q);
    const double y = term - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    const double ratio = std::pow((k + 1.0) / k, t) * q;
    if (ratio < 1.0 && term * ratio / (1.0 - ratio) < 1e-12 * sum * 1e-3) break;
  }
  out.lhs = sum;
  out.rhs = (out.integer_t ? 1.0 : 2.0) * std::tgamma(t + 1.0) * std::pow(x, -t - 1.0) * q;
  out.ok = out.lhs <= out.rhs * (1.0 + 1e-12);
  return out;
}

InfNormDecayReport verify_inf_norm_decay(const Matrix& m_matrix, const Matrix& g0, double t_max, double dt,
                                         Index check_every) {
  const auto b = m_matrix.rows();
  if (b == 0 || m_matrix.cols() != b) throw std::invalid_argument("M must be square and nonempty");
  if (g0.rows() != b) throw std::invalid_argument("G_0 has the wrong number of rows");
  if (!(t_max >= 0.0)) throw std::invalid_argument("t_max must be nonnegative");
  if (check_every == 0) throw std::invalid_argument("check_every must be positive");
  if ((g0.array() < 0.0).any()) throw PreconditionError("G_0 must be entrywise nonnegative");
  InfNormDecayReport rep;
  rep.c = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < b; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < b; ++j) {
      if (i == j) continue;
      if (m_matrix(i, j) > 0.0) throw PreconditionError("M has a positive off-diagonal entry");
      off += -m_matrix(i, j);
    }
    rep.c = std::min(rep.c, m_matrix(i, i) - off);
  }
  const double scale = std::max(1e-300, m_matrix.diagonal().cwiseAbs().maxCoeff());
  if (dt <= 0.0) dt = 0.01 / scale;
  const Index steps = static_cast<Index>(std::ceil(t_max / dt - 1e-12));
  const double g0_inf = g0.cwiseAbs().rowwise().sum().maxCoeff();
  rep.raw_margin = std::numeric_limits<double>::infinity();
  Matrix g = g0;
  auto check = [&](double t) {
    const double lhs = g.cwiseAbs().rowwise().sum().maxCoeff();
    rep.raw_margin = std::min(rep.raw_margin, std::exp(-rep.c * t) * g0_inf - lhs);
    ++rep.checks;
  };
  check(0.0);
  double t = 0.0;
  for (Index s = 1; s <= steps; ++s) {
    const double h = std::min(dt, t_max - t);
    g = rk4_step(g, m_matrix, m_matrix, m_matrix, h);
    t += h;
    if (s % check_every == 0 || s == steps) check(t);
  }
  rep.slack = 10.0 * dt * scale * t_max * g0_inf;
  rep.worst_margin = rep.raw_margin + rep.slack;
  rep.ok = rep.worst_margin >= -1e-6;
  return rep;
}

Matrix random_dominant_z_matrix(Index b, double c, std::uint64_t seed, bool symmetric) {
  if (b == 0) throw std::invalid_argument("need at least one vertex");
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  Philox rng(seed, 0);
  const auto n = ei(b);
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = symmetric ? i + 1 : 0; j < n; ++j)
      if (i != j && rng.uniform() < 0.5) {
        m(i, j) = -rng.uniform();
        if (symmetric) m(j, i) = m(i, j);
      }
  Vector extra(n);
  for (Eigen::Index i = 0; i < n; ++i) extra[i] = c * rng.uniform();
  extra[static_cast<Eigen::Index>(rng.next_u32() % b)] = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = -m.row(i).sum() + c + extra[i];
  return m;
}

SqrtRowDecayCheck sqrt_row_decay_check(const GaussianModel& gauss, double S, int nu, double m, double M) {
  if (!(S >= 1.0) || nu < 1) throw std::invalid_argument("need S >= 1 and nu >= 1");
  SqrtRowDecayCheck out;
  const double lo = gauss.min_eigenvalue();
  const double hi = gauss.max_eigenvalue();
  out.m = m > 0.0 ? m : lo;
  out.M = M > 0.0 ? M : hi;
  if (out.M < out.m) throw std::invalid_argument("need m <= M");
  const double tol = 1e-9 * std::max(1.0, hi);
  if (lo < out.m - tol || hi > out.M + tol) throw PreconditionError("precision spectrum lies outside [m, M]");
  const Matrix norms = linalg::block_norms(gauss.blocks(), gauss.sqrt_covariance());
  out.max_row_sum = norms.rowwise().sum().maxCoeff();
  out.bound = S * factorial(nu) * std::pow(out.M / out.m, nu) / std::sqrt(out.m);
  out.ok = out.max_row_sum <= out.bound;
  return out;
}

}  // namespace locality_lab
