#include "locality_lab/score_matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "locality_lab/metrics.hpp"
#include "locality_lab/parallel.hpp"
#include "locality_lab/rng.hpp"

namespace locality_lab {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

// C^2 norm of each feature on [-1, 1]^2: max of |f|, |f'|, |f''|.
double c2_constant(FeatureKind k) {
  switch (k) {
    case FeatureKind::linear: return 1.0;
    case FeatureKind::onsite: return 1.0;
    case FeatureKind::pair: return 1.0;
    case FeatureKind::cubic: return 6.0;
    case FeatureKind::quartic: return 3.0;
  }
  return 1.0;
}

// d/dx_j and d^2/dx_j^2 of a feature.
std::pair<double, double> feature_derivs(const Feature& f, const Vector& x, Index j) {
  const double xj = x[ei(j)];
  switch (f.kind) {
    case FeatureKind::linear: return {f.vertex == j ? 1.0 : 0.0, 0.0};
    case FeatureKind::onsite: return f.vertex == j ? std::pair{-xj, -1.0} : std::pair{0.0, 0.0};
    case FeatureKind::pair:
      if (f.vertex == j) return {-x[ei(f.partner)], 0.0};
      if (f.partner == j) return {-x[ei(f.vertex)], 0.0};
      return {0.0, 0.0};
    case FeatureKind::cubic: return f.vertex == j ? std::pair{3.0 * xj * xj, 6.0 * xj} : std::pair{0.0, 0.0};
    case FeatureKind::quartic:
      return f.vertex == j ? std::pair{-xj * xj * xj, -3.0 * xj * xj} : std::pair{0.0, 0.0};
  }
  return {0.0, 0.0};
}

double feature_value(const Feature& f, const Vector& x) {
  const double v = x[ei(f.vertex)];
  switch (f.kind) {
    case FeatureKind::linear: return v;
    case FeatureKind::onsite: return -0.5 * v * v;
    case FeatureKind::pair: return -v * x[ei(f.partner)];
    case FeatureKind::cubic: return v * v * v;
    case FeatureKind::quartic: return -0.25 * v * v * v * v;
  }
  return 0.0;
}

// u_j on the local vector x_{N_j}; features address global vertices, so the
// local vector is scattered into a full-length scratch vector.
class DictionaryPotential final : public CliquePotential {
 public:
  DictionaryPotential(std::vector<Feature> features, std::vector<double> coef, std::vector<Index> vertices, Index d)
      : features_(std::move(features)), coef_(std::move(coef)), vertices_(std::move(vertices)), d_(d) {}

  double value(const Vector& local) const override {
    const Vector x = scatter(local);
    double s = 0.0;
    for (std::size_t p = 0; p < features_.size(); ++p) s += coef_[p] * feature_value(features_[p], x);
    return s;
  }

  Vector gradient(const Vector& local) const override {
    const Vector x = scatter(local);
    Vector g = Vector::Zero(local.size());
    for (std::size_t p = 0; p < features_.size(); ++p)
      for (std::size_t l = 0; l < vertices_.size(); ++l)
        g[ei(l)] += coef_[p] * feature_derivs(features_[p], x, vertices_[l]).first;
    return g;
  }

  Matrix hessian(const Vector& local) const override {
    const Vector x = scatter(local);
    const auto n = local.size();
    Matrix h = Matrix::Zero(n, n);
    for (std::size_t p = 0; p < features_.size(); ++p) {
      const Feature& f = features_[p];
      const auto lv = position(f.vertex);
      h(lv, lv) += coef_[p] * feature_derivs(f, x, f.vertex).second;
      if (f.kind == FeatureKind::pair) {
        const auto lw = position(f.partner);
        h(lv, lw) -= coef_[p];
        h(lw, lv) -= coef_[p];
      }
    }
    return h;
  }

 private:
  Vector scatter(const Vector& local) const {
    Vector x = Vector::Zero(ei(d_));
    for (std::size_t l = 0; l < vertices_.size(); ++l) x[ei(vertices_[l])] = local[ei(l)];
    return x;
  }
  Eigen::Index position(Index v) const {
    return static_cast<Eigen::Index>(std::lower_bound(vertices_.begin(), vertices_.end(), v) - vertices_.begin());
  }

  std::vector<Feature> features_;
  std::vector<double> coef_;
  std::vector<Index> vertices_;
  Index d_;
};

double log_sum_exp(const std::vector<double>& v, double temp, std::vector<double>* weights) {
  const double hi = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp((x - hi) / temp);
  if (weights) {
    weights->resize(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) (*weights)[j] = std::exp((v[j] - hi) / temp) / s;
  }
  return hi + temp * std::log(s);
}

Vector gather(const Vector& theta, const std::vector<Index>& idx) {
  Vector out(ei(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[ei(i)] = theta[ei(idx[i])];
  return out;
}

Vector solve_ridged(const Matrix& A, const Vector& rhs, double ridge) {
  const double scale = std::max(1e-300, A.diagonal().cwiseAbs().maxCoeff());
  Matrix reg = A;
  reg.diagonal().array() += ridge * scale;
  Eigen::LDLT<Matrix> ldlt(reg);
  if (ldlt.info() != Eigen::Success) throw NumericalError("singular score-matching system");
  return ldlt.solve(rhs);
}

}  // namespace

std::string to_string(Dictionary d) { return d == Dictionary::quadratic ? "quad" : "quartic"; }

Dictionary dictionary_from_string(const std::string& s) {
  if (s == "quad" || s == "quadratic") return Dictionary::quadratic;
  if (s == "quartic") return Dictionary::quartic;
  throw std::invalid_argument("unknown dictionary '" + s + "' (expected quad or quartic)");
}

ScoreHypothesis::ScoreHypothesis(DependencyGraph graph, Dictionary dict, double R)
    : graph_(std::move(graph)), dict_(dict), R_(R) {
  if (!(R_ > 0.0)) throw std::invalid_argument("R must be positive");
  const Index b = graph_.num_vertices();
  starts_.push_back(0);
  for (Index j = 0; j < b; ++j) {
    features_.push_back({FeatureKind::linear, j});
    features_.push_back({FeatureKind::onsite, j});
    for (Index k : graph_.neighbors(j))
      if (k > j) features_.push_back({FeatureKind::pair, j, k});
    if (dict_ == Dictionary::quartic) {
      features_.push_back({FeatureKind::cubic, j});
      features_.push_back({FeatureKind::quartic, j});
    }
    starts_.push_back(features_.size());
  }
  local_.assign(b, {});
  for (Index p = 0; p < features_.size(); ++p) {
    const Feature& f = features_[p];
    local_[f.vertex].push_back(p);
    if (f.kind == FeatureKind::pair) local_[f.partner].push_back(p);
  }
  for (auto& l : local_) std::sort(l.begin(), l.end());
}

double ScoreHypothesis::ball_radius(Index j) const {
  const auto [lo, hi] = clique_params(j);
  double worst = 0.0;
  for (Index p = lo; p < hi; ++p) worst = std::max(worst, c2_constant(features_[p].kind));
  return R_ / (std::sqrt(static_cast<double>(hi - lo)) * worst);
}

void ScoreHypothesis::local_features(const Vector& x, Index j, Vector& a, Vector& c) const {
  const auto& idx = local_[j];
  a.resize(ei(idx.size()));
  c.resize(ei(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto [d1, d2] = feature_derivs(features_[idx[i]], x, j);
    a[ei(i)] = d1;
    c[ei(i)] = d2;
  }
}

double ScoreHypothesis::local_score(const Vector& x, Index j, const Vector& theta) const {
  Vector a, c;
  local_features(x, j, a, c);
  return a.dot(gather(theta, local_[j]));
}

Vector ScoreHypothesis::project(const Vector& theta) const {
  if (static_cast<Index>(theta.size()) != num_params()) throw std::invalid_argument("parameter length mismatch");
  Vector out = theta;
  for (Index j = 0; j < num_blocks(); ++j) {
    const auto [lo, hi] = clique_params(j);
    auto seg = out.segment(ei(lo), ei(hi - lo));
    const double n = seg.norm();
    const double r = ball_radius(j);
    if (n > r) seg *= r / n;
  }
  return out;
}

std::shared_ptr<CliquePotentialModel> ScoreHypothesis::to_model(const Vector& theta) const {
  if (static_cast<Index>(theta.size()) != num_params()) throw std::invalid_argument("parameter length mismatch");
  const Index b = num_blocks();
  std::vector<std::shared_ptr<const CliquePotential>> pots;
  for (Index j = 0; j < b; ++j) {
    const auto [lo, hi] = clique_params(j);
    std::vector<Feature> fs(features_.begin() + static_cast<std::ptrdiff_t>(lo),
                            features_.begin() + static_cast<std::ptrdiff_t>(hi));
    std::vector<double> coef(theta.data() + lo, theta.data() + hi);
    pots.push_back(std::make_shared<DictionaryPotential>(std::move(fs), std::move(coef), graph_.neighbors(j), b));
  }
  return std::make_shared<CliquePotentialModel>(BlockStructure::uniform(b, 1), graph_, std::move(pots), graph_);
}

GaussianModel ScoreHypothesis::to_gaussian(const Vector& theta) const {
  if (static_cast<Index>(theta.size()) != num_params()) throw std::invalid_argument("parameter length mismatch");
  const auto b = ei(num_blocks());
  Matrix prec = Matrix::Zero(b, b);
  Vector h = Vector::Zero(b);
  for (Index p = 0; p < features_.size(); ++p) {
    const Feature& f = features_[p];
    const double t = theta[ei(p)];
    switch (f.kind) {
      case FeatureKind::linear: h[ei(f.vertex)] = t; break;
      case FeatureKind::onsite: prec(ei(f.vertex), ei(f.vertex)) = t; break;
      case FeatureKind::pair:
        prec(ei(f.vertex), ei(f.partner)) = t;
        prec(ei(f.partner), ei(f.vertex)) = t;
        break;
      default:
        if (t != 0.0) throw UnsupportedError("fitted potential has non-quadratic terms");
    }
  }
  Eigen::LLT<Matrix> llt(prec);
  if (llt.info() != Eigen::Success) throw NotLogConcaveError("fitted precision is not positive definite");
  return GaussianModel(BlockStructure::uniform(num_blocks(), 1), prec, llt.solve(h), graph_);
}

Vector ScoreHypothesis::theta_from_gaussian(const GaussianModel& g) const {
  if (g.dim() != num_blocks() || !g.blocks().all_scalar()) throw std::invalid_argument("Gaussian does not match the hypothesis");
  const Vector h = g.precision() * g.mean();
  Vector theta = Vector::Zero(ei(num_params()));
  for (Index p = 0; p < features_.size(); ++p) {
    const Feature& f = features_[p];
    switch (f.kind) {
      case FeatureKind::linear: theta[ei(p)] = h[ei(f.vertex)]; break;
      case FeatureKind::onsite: theta[ei(p)] = g.precision()(ei(f.vertex), ei(f.vertex)); break;
      case FeatureKind::pair: theta[ei(p)] = g.precision()(ei(f.vertex), ei(f.partner)); break;
      default: break;
    }
  }
  return theta;
}

std::vector<LocalQuadratic> local_quadratics(const ScoreHypothesis& hyp, const Matrix& samples) {
  const Index b = hyp.num_blocks();
  if (samples.rows() == 0) throw std::invalid_argument("need at least one sample");
  if (static_cast<Index>(samples.cols()) != b) throw std::invalid_argument("sample dimension mismatch");
  if (!samples.allFinite()) throw NumericalError("non-finite samples");
  std::vector<LocalQuadratic> out(b);
  const double w = 1.0 / static_cast<double>(samples.rows());
  parallel_for(b, [&](Index j) {
    const auto n = ei(hyp.local_params(j).size());
    LocalQuadratic q{Matrix::Zero(n, n), Vector::Zero(n)};
    Vector a, c;
    for (Eigen::Index s = 0; s < samples.rows(); ++s) {
      hyp.local_features(samples.row(s).transpose(), j, a, c);
      q.A.selfadjointView<Eigen::Lower>().rankUpdate(a, w);
      q.b += w * c;
    }
    q.A = q.A.selfadjointView<Eigen::Lower>();
    if (!q.A.allFinite() || !q.b.allFinite()) throw NumericalError("non-finite feature values");
    out[j] = std::move(q);
  });
  return out;
}

double local_loss_j(const ScoreHypothesis& hyp, const LocalQuadratic& q, const Vector& theta, Index j) {
  const Vector t = gather(theta, hyp.local_params(j));
  return t.dot(q.A * t) + 2.0 * q.b.dot(t);
}

double local_loss_j(const ScoreHypothesis& hyp, const Vector& theta, const Matrix& samples, Index j) {
  if (j >= hyp.num_blocks()) throw std::out_of_range("block index out of range");
  if (static_cast<Index>(theta.size()) != hyp.num_params()) throw std::invalid_argument("parameter length mismatch");
  if (samples.rows() == 0) throw std::invalid_argument("need at least one sample");
  const Vector t = gather(theta, hyp.local_params(j));
  Vector a, c;
  double s = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    hyp.local_features(samples.row(i).transpose(), j, a, c);
    const double sj = a.dot(t);
    s += 2.0 * c.dot(t) + sj * sj;
  }
  if (!std::isfinite(s)) throw NumericalError("non-finite loss");
  return s / static_cast<double>(samples.rows());
}

std::vector<double> lambda_lower_bounds(const ScoreHypothesis& /*hyp*/, const std::vector<LocalQuadratic>& q) {
  std::vector<double> out(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (q[j].b.size() == 0 || q[j].b.cwiseAbs().maxCoeff() == 0.0) {
      out[j] = 0.0;
      continue;
    }
    const Vector t = solve_ridged(q[j].A, -q[j].b, 1e-12);
    out[j] = std::max(0.0, -(t.dot(q[j].A * t) + 2.0 * q[j].b.dot(t)));
  }
  return out;
}

std::vector<double> lambda_lower_bounds(const ScoreHypothesis& hyp, const Matrix& samples) {
  return lambda_lower_bounds(hyp, local_quadratics(hyp, samples));
}

Vector fit_summed(const ScoreHypothesis& hyp, const std::vector<LocalQuadratic>& q, double ridge) {
  const auto P = ei(hyp.num_params());
  Matrix A = Matrix::Zero(P, P);
  Vector rhs = Vector::Zero(P);
  for (Index j = 0; j < hyp.num_blocks(); ++j) {
    const auto& idx = hyp.local_params(j);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      rhs[ei(idx[r])] -= q[j].b[ei(r)];
      for (std::size_t c = 0; c < idx.size(); ++c) A(ei(idx[r]), ei(idx[c])) += q[j].A(ei(r), ei(c));
    }
  }
  return solve_ridged(A, rhs, ridge);
}

FitReport fit(const ScoreHypothesis& hyp, const Matrix& samples, const OptimizerConfig& cfg) {
  if (!(cfg.temperature_start >= cfg.temperature_end) || !(cfg.temperature_end > 0.0) || cfg.temperature_stages == 0)
    throw std::invalid_argument("invalid temperature schedule");
  const Index b = hyp.num_blocks();
  const auto P = ei(hyp.num_params());
  const auto q = local_quadratics(hyp, samples);
  FitReport rep;
  rep.n_samples = static_cast<Index>(samples.rows());
  rep.lambda = lambda_lower_bounds(hyp, q);
  rep.lambda_rule = "max(0, -min J_j) of the unconstrained single-block fit";

  auto losses = [&](const Vector& theta) {
    std::vector<double> f(b);
    for (Index j = 0; j < b; ++j) f[j] = local_loss_j(hyp, q[j], theta, j) + rep.lambda[j];
    return f;
  };

  Vector theta = hyp.project(fit_summed(hyp, q, cfg.ridge));
  rep.converged = true;
  const double ratio = cfg.temperature_stages > 1
                           ? std::pow(cfg.temperature_end / cfg.temperature_start,
                                      1.0 / static_cast<double>(cfg.temperature_stages - 1))
                           : 1.0;
  double temp = cfg.temperature_stages > 1 ? cfg.temperature_start : cfg.temperature_end;
  std::vector<double> w;
  for (Index stage = 0; stage < cfg.temperature_stages; ++stage, temp *= ratio) {
    double F = log_sum_exp(losses(theta), temp, &w);
    bool stage_done = false;
    for (Index it = 0; it < cfg.max_newton_steps && !stage_done; ++it) {
      ++rep.iterations;
      // gradient and Hessian of the smoothed max
      Vector G = Vector::Zero(P);
      Matrix H = Matrix::Zero(P, P);
      std::vector<Vector> gj(b);
      for (Index j = 0; j < b; ++j) {
        const auto& idx = hyp.local_params(j);
        const Vector t = gather(theta, idx);
        gj[j] = 2.0 * (q[j].A * t + q[j].b);
        for (std::size_t r = 0; r < idx.size(); ++r) {
          G[ei(idx[r])] += w[j] * gj[j][ei(r)];
          for (std::size_t c = 0; c < idx.size(); ++c)
            H(ei(idx[r]), ei(idx[c])) += w[j] * (2.0 * q[j].A(ei(r), ei(c)) + gj[j][ei(r)] * gj[j][ei(c)] / temp);
        }
      }
      H.noalias() -= G * G.transpose() / temp;
      H = 0.5 * (H + H.transpose());
      const double scale = std::max(1e-300, H.diagonal().cwiseAbs().maxCoeff());
      Vector step;
      for (double mu = 1e-10; mu < 1e6; mu *= 100.0) {
        Matrix reg = H;
        reg.diagonal().array() += mu * scale;
        Eigen::LDLT<Matrix> ldlt(reg);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
          step = ldlt.solve(-G);
          if (step.allFinite() && step.dot(G) < 0.0) break;
        }
        step.resize(0);
      }
      if (step.size() == 0) step = -G / scale;
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
        const Vector cand = hyp.project(theta + alpha * step);
        std::vector<double> wc;
        const double Fc = log_sum_exp(losses(cand), temp, &wc);
        if (Fc <= F) {
          const double drop = F - Fc;
          theta = cand;
          w = std::move(wc);
          F = Fc;
          accepted = true;
          if (drop <= cfg.tolerance * (1.0 + std::abs(F))) stage_done = true;
          break;
        }
      }
      if (!accepted) stage_done = true;
      if (it + 1 == cfg.max_newton_steps && !stage_done) rep.converged = false;
    }
    rep.trace.push_back(F);
  }

  rep.theta = theta;
  rep.per_block_losses.resize(b);
  const auto f = losses(theta);
  for (Index j = 0; j < b; ++j) {
    rep.per_block_losses[j] = f[j] - rep.lambda[j];
    if (j == 0 || f[j] > rep.saddle_value) {
      rep.saddle_value = f[j];
      rep.argmax_block = j;
    }
  }
  return rep;
}

IdentityCheck integration_by_parts_check(const ScoreHypothesis& hyp, const Vector& theta,
                                         const BlockedDensityModel& truth, const Matrix& samples) {
  const Index b = hyp.num_blocks();
  if (truth.dim() != b || !truth.blocks().all_scalar()) throw std::invalid_argument("truth does not match the hypothesis");
  const auto n = samples.rows();
  if (n < 2) throw std::invalid_argument("need at least two samples");
  Matrix per(n, ei(b));
  Vector a, c;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector x = samples.row(i).transpose();
    const Vector s = truth.score(x);
    for (Index j = 0; j < b; ++j) {
      hyp.local_features(x, j, a, c);
      const Vector t = gather(theta, hyp.local_params(j));
      per(i, ei(j)) = 2.0 * c.dot(t) + 2.0 * a.dot(t) * s[ei(j)];
    }
  }
  auto mean_se = [n](const Eigen::Ref<const Vector>& v) {
    const double m = v.mean();
    const double var = (v.array() - m).square().sum() / static_cast<double>(n - 1);
    return std::pair{m, std::sqrt(var / static_cast<double>(n))};
  };
  IdentityCheck out;
  const Vector total = per.rowwise().sum();
  std::tie(out.residual, out.standard_error) = mean_se(total);
  for (Index j = 0; j < b; ++j) {
    const auto [m, se] = mean_se(per.col(ei(j)));
    out.per_block_residual.push_back(m);
    out.per_block_se.push_back(se);
  }
  return out;
}

GaussianModel gaussian_chain(Index b, double diag, double offdiag) {
  if (b == 0) throw std::invalid_argument("need at least one site");
  const auto n = ei(b);
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p(i, i) = diag;
    if (i + 1 < n) p(i, i + 1) = p(i + 1, i) = offdiag;
  }
  return GaussianModel(BlockStructure::uniform(b, 1), p, Vector::Zero(n), banded_graph(b, 1));
}

LadderResult dimension_ladder_experiment(const std::vector<Index>& bs, const std::vector<Index>& ns, Index trials,
                                         std::uint64_t seed, double diag, double offdiag, const OptimizerConfig& cfg) {
  if (bs.empty() || ns.empty() || trials == 0) throw std::invalid_argument("empty ladder");
  LadderResult res;
  for (Index b : bs)
    for (Index n : ns) {
      const GaussianModel truth = gaussian_chain(b, diag, offdiag);
      const ScoreHypothesis hyp(truth.graph(), Dictionary::quadratic);
      double acc = 0.0;
      for (Index t = 0; t < trials; ++t) {
        LadderRow row{b, n, t};
        const Matrix xs = truth.sample(n, mix_seed(mix_seed(seed, b), mix_seed(n, t)));
        try {
          const auto rep = fit(hyp, xs, cfg);
          row.saddle_value = rep.saddle_value;
          const auto w = marginal_w1_gaussian(truth, hyp.to_gaussian(rep.theta));
          row.max_w1 = w.max_w1;
          row.argmax_block = static_cast<Index>(
              std::max_element(w.per_block_w1.begin(), w.per_block_w1.end()) - w.per_block_w1.begin());
        } catch (const Error&) {
          row.fit_ok = false;
          row.max_w1 = std::numeric_limits<double>::infinity();
        }
        acc += row.max_w1;
        res.rows.push_back(row);
      }
      res.cell_means.push_back({{b, n}, acc / static_cast<double>(trials)});
    }
  return res;
}

}  // namespace locality_lab
