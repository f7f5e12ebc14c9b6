#include "locality_lab/suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "locality_lab/bounds.hpp"
#include "locality_lab/io.hpp"
#include "locality_lab/langevin.hpp"
#include "locality_lab/llis.hpp"
#include "locality_lab/locality_graph.hpp"
#include "locality_lab/metrics.hpp"
#include "locality_lab/models.hpp"
#include "locality_lab/rng.hpp"
#include "locality_lab/score_matching.hpp"

namespace locality_lab {

namespace {

namespace fs = std::filesystem;

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

std::string num(double v) { return format_number(v); }
std::string num(Index v) { return format_number(v); }
std::string num(int v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "1" : "0"; }

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  std::string write(const SuiteOptions& opts, const std::string& file) const {
    const std::string path = (fs::path(opts.out_dir) / file).string();
    write_csv(path, header_, rows_);
    return path;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

Index pick(Philox& rng, Index lo, Index hi) {
  return lo + std::min<Index>(hi - lo, static_cast<Index>(rng.uniform() * static_cast<double>(hi - lo + 1)));
}

double pick(Philox& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// A pinned, non-degenerate GL chain (m_param = 0 keeps it log-concave).
GinzburgLandauChain pinned_gl(Index n, std::vector<double> beta, double pinning, double lambda = 1.0) {
  return GinzburgLandauChain(n, lambda, 0.0, std::move(beta), pinning);
}

Matrix gl_probes(const BlockedDensityModel& gl, Index count, std::uint64_t seed) {
  LangevinConfig lc{0.01, 20000, 2000, 1, seed, false, 1};
  Matrix p = default_probe_points(gl, Vector::Zero(ei(gl.dim())), lc, count - 1);
  Matrix out(p.rows() + 1, p.cols());
  out.row(0).setZero();  // the onsite curvature is smallest at the origin
  out.bottomRows(p.rows()) = p;
  return out;
}

SteinConfig stein_config(double m, double M, Index chains, std::uint64_t seed) {
  SteinConfig cfg;
  cfg.langevin.step_size = default_step_size(M);
  cfg.langevin.num_steps = 10'000'000;
  cfg.langevin.num_chains = chains;
  cfg.langevin.seed = seed;
  cfg.decay_rate = m;
  return cfg;
}

// Criterion 1 ---------------------------------------------------------------

CriterionResult graph_locality(const SuiteOptions& opts) {
  CriterionResult r;
  Table t({"graph", "vertices", "S", "nu", "q_max", "certified", "min_slack"});
  bool ok = true;
  auto record = [&](const std::string& name, const DependencyGraph& g, double S, int nu, Index qmax) {
    const auto c = certify_locality(g, S, nu, qmax);
    ok = ok && c.certified;
    t.add({name, num(g.num_vertices()), num(S), num(nu), num(qmax), flag(c.certified), num(c.min_slack)});
  };
  record("gl_chain_32", banded_graph(32, 1), 2.0, 1, 31);
  Index cases = 1;
  const std::vector<Index> sides = opts.quick ? std::vector<Index>{4, 16} : std::vector<Index>{2, 4, 8, 16};
  for (int nu : {1, 2})
    for (Index L : sides) {
      record("lattice_" + std::to_string(nu) + "d_" + std::to_string(L), lattice_graph(std::vector<Index>(nu, L)),
             std::pow(3.0, nu), nu, 6);
      ++cases;
    }
  r.pass = ok;
  r.summary = std::to_string(cases) + " graphs, all certified: " + (ok ? "yes" : "no");
  r.outputs.push_back(t.write(opts, "criterion_01_graph_locality.csv"));
  return r;
}

// Criterion 2 ---------------------------------------------------------------

CriterionResult stein_sanity(const SuiteOptions& opts) {
  CriterionResult r;
  Table t({"d", "chains", "step", "grad_norm_sum", "pathwise_sum", "se", "t_end", "pass"});
  const std::vector<Index> dims = opts.quick ? std::vector<Index>{1, 4} : std::vector<Index>{1, 2, 4, 8, 16};
  const Index chains = opts.quick ? 64 : 256;
  bool ok = true;
  double worst = 0.0;
  for (Index d : dims) {
    const auto model = GaussianModel::standard(BlockStructure::uniform(d, 1));
    SteinConfig cfg = stein_config(1.0, 1.0, chains, mix_seed(opts.seed, d));
    cfg.langevin.step_size = 0.005;
    const Matrix probes = model.sample(4, mix_seed(opts.seed, 100 + d));
    const auto est = stein_gradient_estimate(model, 0, coordinate_projection(0), probes, cfg);
    const double se = est.standard_errors.empty() ? 0.0 : est.standard_errors[0];
    const bool pass = std::abs(est.sum - 1.0) <= 0.05 && std::abs(est.pathwise_sum - 1.0) <= 0.05;
    ok = ok && pass;
    worst = std::max({worst, std::abs(est.sum - 1.0), std::abs(est.pathwise_sum - 1.0)});
    t.add({num(d), num(chains), num(cfg.langevin.step_size), num(est.sum), num(est.pathwise_sum), num(se),
           num(est.horizon), flag(pass)});
  }
  r.pass = ok;
  r.summary = "max |norm - 1| = " + fixed(worst, 3) + " over d in {" + std::to_string(dims.front()) + ".." +
              std::to_string(dims.back()) + "}, tolerance 0.05";
  r.outputs.push_back(t.write(opts, "criterion_02_stein_sanity.csv"));
  return r;
}

// Criterion 3 ---------------------------------------------------------------

CriterionResult delta_graphical_dominance(const SuiteOptions& opts) {
  CriterionResult r;
  Table t({"instance", "model", "b", "bandwidth", "m", "M", "empirical_delta", "se", "delta_graphical", "pass"});
  const Index count = opts.quick ? 5 : 20;
  const Index max_b = opts.quick ? 32 : 64;
  Philox rng(mix_seed(opts.seed, 3), 0);
  Index passes = 0;
  double worst = 0.0;
  for (Index i = 0; i < count; ++i) {
    const Index b = pick(rng, Index{8}, max_b);
    const Index bw = pick(rng, Index{1}, Index{2});
    const double M = pick(rng, 1.5, 4.0);
    const auto g = gaussian_from_banded_precision(BlockStructure::uniform(b, 1), bw, 1.0, M, mix_seed(opts.seed, 300 + i));
    const auto bound = delta_graphical(2.0 * static_cast<double>(bw), 1, g.min_eigenvalue(), g.max_eigenvalue());
    const auto e = empirical_delta(g, Matrix::Zero(1, ei(b)), {},
                                   stein_config(g.min_eigenvalue(), g.max_eigenvalue(), 1, mix_seed(opts.seed, i)));
    const bool pass = e.value <= bound.value + 3.0 * e.standard_error;
    passes += pass;
    worst = std::max(worst, e.value / bound.value);
    t.add({num(i), "gaussian_banded", num(b), num(bw), num(g.min_eigenvalue()), num(g.max_eigenvalue()), num(e.value),
           num(e.standard_error), num(bound.value), flag(pass)});
  }
  {
    // GL chain: -Hessian >= pinning I exactly; M is the probe maximum.
    const Index n = opts.quick ? 8 : 16;
    const auto gl = pinned_gl(n, std::vector<double>(n - 1, 1.0), 1.0);
    const Matrix probes = gl_probes(gl, opts.quick ? 4 : 8, mix_seed(opts.seed, 31));
    const double M = convexity_bounds(gl, probes).second;
    const auto bound = delta_graphical(2.0, 1, gl.pinning(), M);
    const auto e = empirical_delta(gl, probes, {}, stein_config(gl.pinning(), M, opts.quick ? 16 : 64, mix_seed(opts.seed, 32)));
    const bool pass = e.value <= bound.value + 3.0 * e.standard_error;
    passes += pass;
    worst = std::max(worst, e.value / bound.value);
    t.add({num(count), "gl_chain", num(n), "1", num(gl.pinning()), num(M), num(e.value), num(e.standard_error),
           num(bound.value), flag(pass)});
  }
  r.pass = passes == count + 1;
  r.summary = std::to_string(passes) + "/" + std::to_string(count + 1) + " pass, worst empirical/bound " + fixed(worst);
  r.outputs.push_back(t.write(opts, "criterion_03_delta_graphical.csv"));
  return r;
}

// Criterion 4 ---------------------------------------------------------------

CriterionResult delta_dominant(const SuiteOptions& opts) {
  CriterionResult r;
  Table t({"instance", "model", "b", "c", "empirical_delta", "se", "inverse_c", "pass"});
  const Index count = opts.quick ? 5 : 20;
  const Index gl_count = opts.quick ? 1 : 5;
  Philox rng(mix_seed(opts.seed, 4), 0);
  Index passes = 0;
  double worst = 0.0;
  for (Index i = 0; i < count; ++i) {
    DeltaBound bound;
    EmpiricalDelta e;
    std::string kind;
    Index b = 0;
    if (i < count - gl_count) {
      kind = "gaussian_dominant";
      b = pick(rng, Index{8}, opts.quick ? Index{24} : Index{48});
      const double c = pick(rng, 0.3, 1.5);
      const Matrix z = random_dominant_z_matrix(b, c, mix_seed(opts.seed, 400 + i), true);
      const GaussianModel g(BlockStructure::uniform(b, 1), z, Vector::Zero(ei(b)));
      const Matrix probe = Matrix::Zero(1, ei(b));
      bound = delta_diag_dominant(dominance_matrix_from_model(g, probe));
      e = empirical_delta(g, probe, {}, stein_config(bound.c, g.max_eigenvalue(), 1, mix_seed(opts.seed, i)));
    } else {
      kind = "gl_chain";
      b = opts.quick ? 8 : 12;
      std::vector<double> beta(b - 1);
      for (auto& x : beta) x = pick(rng, 0.5, 1.5);
      const auto gl = pinned_gl(b, beta, pick(rng, 0.5, 1.5));
      const Matrix probes = gl_probes(gl, 4, mix_seed(opts.seed, 410 + i));
      bound = delta_diag_dominant(dominance_matrix_from_model(gl, probes));
      const double M = convexity_bounds(gl, probes).second;
      e = empirical_delta(gl, probes, {}, stein_config(bound.c, M, opts.quick ? 16 : 48, mix_seed(opts.seed, i)));
    }
    const bool pass = e.value <= bound.value + 3.0 * e.standard_error;
    passes += pass;
    worst = std::max(worst, e.value / bound.value);
    t.add({num(i), kind, num(b), num(bound.c), num(e.value), num(e.standard_error), num(bound.value), flag(pass)});
  }
  r.pass = passes == count;
  r.summary = std::to_string(passes) + "/" + std::to_string(count) + " pass, worst empirical*c " + fixed(worst);
  r.outputs.push_back(t.write(opts, "criterion_04_delta_dominant.csv"));
  return r;
}

// Criterion 5 and 6 ---------------------------------------------------------

struct GaussianPair {
  GaussianModel pi;
  GaussianModel pi_prime;
  DeltaBound delta;
  std::string perturbation;
};

GaussianPair perturbed_pair(Index b, Index bw, Index k, bool rank_one, double size, std::uint64_t seed) {
  auto pi = gaussian_from_banded_precision(BlockStructure::uniform(b, 1), bw, 1.0, 3.0, seed);
  Matrix P = pi.precision();
  const auto kk = ei(k);
  if (rank_one) {
    P(kk, kk) += size;
  } else {
    const auto l = k + 1 < b ? kk + 1 : kk - 1;
    P(kk, l) += size;
    P(l, kk) += size;
  }
  GaussianModel pp(pi.blocks(), P, pi.mean(), pi.graph());
  auto delta = delta_graphical(2.0 * static_cast<double>(bw), 1, pp.min_eigenvalue(), pp.max_eigenvalue());
  return {std::move(pi), std::move(pp), std::move(delta), rank_one ? "rank_one" : "bond"};
}

void add_report(Table& t, Index i, const std::string& kind, Index b, const InequalityReport& rep) {
  t.add({num(i), kind, num(b), num(rep.lhs), num(rep.rhs), num(rep.tolerance), num(rep.sampling_floor), num(rep.delta),
         to_string(rep.lhs_method), flag(rep.lhs_upper_bounded), flag(rep.pass)});
}

const std::vector<std::string> kInequalityHeader = {"instance", "pair",  "b",      "lhs",          "rhs", "tolerance",
                                                    "floor",    "delta", "method", "upper_bounded", "pass"};

CriterionResult marginal_inequality(const SuiteOptions& opts) {
  CriterionResult r;
  Table t(kInequalityHeader);
  const Index count = opts.quick ? 10 : 50;
  const Index gl_count = opts.quick ? 1 : 5;
  Philox rng(mix_seed(opts.seed, 5), 0);
  Index passes = 0;
  for (Index i = 0; i < count; ++i) {
    const Index b = pick(rng, Index{8}, opts.quick ? Index{32} : Index{64});
    const Index bw = pick(rng, Index{1}, Index{2});
    const Index k = pick(rng, Index{0}, b - 1);
    const bool rank_one = i % 2 == 0;
    const double size = rank_one ? pick(rng, 0.2, 1.0) : pick(rng, -0.3, 0.3);
    const auto pair = perturbed_pair(b, bw, k, rank_one, size, mix_seed(opts.seed, 500 + i));
    const auto rep = verify_marginal_inequality(pair.pi, pair.pi_prime, pair.delta, 4000, mix_seed(opts.seed, 550 + i));
    passes += rep.pass;
    add_report(t, i, "gaussian_" + pair.perturbation, b, rep);
  }
  Index gl_passes = 0;
  for (Index i = 0; i < gl_count; ++i) {
    const Index n = opts.quick ? 8 : 16;
    std::vector<double> beta(n - 1, 1.0);
    const auto pi = pinned_gl(n, beta, 1.0);
    beta[(3 * i + 2) % (n - 1)] = pick(rng, 1.3, 2.0);
    const auto pp = pinned_gl(n, beta, 1.0);
    const auto delta = delta_diag_dominant(dominance_matrix_from_model(pp, gl_probes(pp, 8, mix_seed(opts.seed, 560 + i))));
    const auto rep = verify_marginal_inequality(pi, pp, delta, opts.quick ? 2000 : 4000, mix_seed(opts.seed, 570 + i));
    gl_passes += rep.pass;
    add_report(t, count + i, "gl_bond", n, rep);
  }
  const Index need = count - count / 50;
  r.pass = passes >= need && gl_passes == gl_count;
  r.summary = "gaussian " + std::to_string(passes) + "/" + std::to_string(count) + " (need " + std::to_string(need) +
              "), gl " + std::to_string(gl_passes) + "/" + std::to_string(gl_count);
  r.outputs.push_back(t.write(opts, "criterion_05_marginal_inequality.csv"));
  return r;
}

CriterionResult multiblock_inequality(const SuiteOptions& opts) {
  CriterionResult r;
  Table t(kInequalityHeader);
  const Index count = opts.quick ? 4 : 20;
  Philox rng(mix_seed(opts.seed, 6), 0);
  SamplingOptions so;
  so.assignment_subsample = opts.quick ? 300 : 800;
  Index passes = 0;
  for (Index i = 0; i < count; ++i) {
    const Index b = pick(rng, Index{8}, Index{32});
    const Index size = i % 2 == 0 ? 2 : 3;
    const Index start = pick(rng, Index{0}, b - size);
    std::vector<Index> I(size);
    for (Index s = 0; s < size; ++s) I[s] = start + s;
    const auto pair = perturbed_pair(b, 1, start + pick(rng, Index{0}, size - 1), i % 4 < 2, pick(rng, 0.3, 1.0),
                                     mix_seed(opts.seed, 600 + i));
    const auto rep = verify_multiblock_inequality(pair.pi, pair.pi_prime, pair.delta, I, 4000,
                                                  mix_seed(opts.seed, 650 + i), so);
    passes += rep.pass;
    add_report(t, i, "gaussian_" + pair.perturbation + "_I" + std::to_string(size), b, rep);
  }
  const Index need = count - count / 20;
  r.pass = passes >= need;
  r.summary = std::to_string(passes) + "/" + std::to_string(count) + " pass (need " + std::to_string(need) + ")";
  r.outputs.push_back(t.write(opts, "criterion_06_multiblock_inequality.csv"));
  return r;
}

// Criterion 7 ---------------------------------------------------------------

CriterionResult lemma_verifiers(const SuiteOptions& opts) {
  CriterionResult r;
  Philox rng(mix_seed(opts.seed, 7), 0);
  std::vector<std::string> parts;
  bool ok = true;

  Table a1({"instance", "n", "bandwidth", "M", "worst_margin", "raw_margin", "slack", "ok"});
  const Index n_a1 = opts.quick ? 20 : 100;
  Index a1_ok = 0;
  for (Index i = 0; i < n_a1; ++i) {
    const Index n = pick(rng, Index{6}, Index{24});
    const Index bw = pick(rng, Index{1}, Index{2});
    const double M = pick(rng, 0.5, 2.0);
    const auto rep = verify_diffusion_lemma(random_banded_h_path(n, bw, M, mix_seed(opts.seed, 700 + i)),
                                            BlockStructure::uniform(n, 1), banded_graph(n, bw), M, 5.0, 0.01);
    a1_ok += rep.ok;
    a1.add({num(i), num(n), num(bw), num(M), num(rep.worst_margin), num(rep.raw_margin), num(rep.slack), flag(rep.ok)});
  }
  ok = ok && a1_ok == n_a1;
  parts.push_back("A1 " + std::to_string(a1_ok) + "/" + std::to_string(n_a1));
  r.outputs.push_back(a1.write(opts, "criterion_07_lemma_a1.csv"));

  Table a3({"t", "x", "lhs", "rhs", "ok"});
  Index a3_bad = 0;
  for (int it = 0; it < 20; ++it)
    for (int ix = 0; ix < 20; ++ix) {
      const double tt = 5.0 * it / 19.0;
      const double x = 0.05 + 0.9 * ix / 19.0;
      const auto c = li_series_bound_check(tt, x);
      a3_bad += !c.ok;
      a3.add({num(tt), num(x), num(c.lhs), num(c.rhs), flag(c.ok)});
    }
  double eq_err = 0.0;
  for (double tt : {0.0, 1.0}) {
    const auto c = li_series_bound_check(tt, 0.5);
    eq_err = std::max(eq_err, std::abs(c.lhs - c.rhs));
    a3.add({num(tt), num(0.5), num(c.lhs), num(c.rhs), flag(c.ok)});
  }
  ok = ok && a3_bad == 0 && eq_err <= 1e-10;
  parts.push_back("A3 " + std::to_string(a3_bad) + " violations, equality gap " + fixed(eq_err, 2));
  r.outputs.push_back(a3.write(opts, "criterion_07_lemma_a3.csv"));

  Table a4({"instance", "b", "c", "worst_margin", "raw_margin", "slack", "ok"});
  const Index n_a4 = opts.quick ? 20 : 100;
  Index a4_ok = 0;
  for (Index i = 0; i < n_a4; ++i) {
    const Index b = pick(rng, Index{4}, Index{32});
    const double c = pick(rng, 0.2, 2.0);
    const Matrix z = random_dominant_z_matrix(b, c, mix_seed(opts.seed, 720 + i));
    Matrix g0(ei(b), ei(b));
    for (Eigen::Index p = 0; p < g0.size(); ++p) g0.data()[p] = rng.uniform();
    const auto rep = verify_inf_norm_decay(z, g0, 5.0);
    a4_ok += rep.ok;
    a4.add({num(i), num(b), num(rep.c), num(rep.worst_margin), num(rep.raw_margin), num(rep.slack), flag(rep.ok)});
  }
  ok = ok && a4_ok == n_a4;
  parts.push_back("A4 " + std::to_string(a4_ok) + "/" + std::to_string(n_a4));
  r.outputs.push_back(a4.write(opts, "criterion_07_lemma_a4.csv"));

  Table c1({"instance", "b", "bandwidth", "m", "M", "max_row_sum", "bound", "ok"});
  const Index n_c1 = opts.quick ? 10 : 50;
  Index c1_ok = 0;
  for (Index i = 0; i < n_c1; ++i) {
    const Index b = pick(rng, Index{8}, Index{64});
    const Index bw = pick(rng, Index{1}, Index{2});
    const double m = pick(rng, 0.5, 2.0);
    const double M = m * pick(rng, 1.0, 4.0);
    const auto g = gaussian_from_banded_precision(BlockStructure::uniform(b, 1), bw, m, M, mix_seed(opts.seed, 740 + i));
    const auto rep = sqrt_row_decay_check(g, 2.0 * static_cast<double>(bw), 1, g.min_eigenvalue(), g.max_eigenvalue());
    c1_ok += rep.ok;
    c1.add({num(i), num(b), num(bw), num(rep.m), num(rep.M), num(rep.max_row_sum), num(rep.bound), flag(rep.ok)});
  }
  ok = ok && c1_ok == n_c1;
  parts.push_back("C1 " + std::to_string(c1_ok) + "/" + std::to_string(n_c1));
  r.outputs.push_back(c1.write(opts, "criterion_07_lemma_c1.csv"));

  r.pass = ok;
  for (std::size_t i = 0; i < parts.size(); ++i) r.summary += (i ? ", " : "") + parts[i];
  return r;
}

// Criterion 8 ---------------------------------------------------------------

// Coordinate-wise view of a Gaussian with vector blocks.
GaussianModel scalar_view(const GaussianModel& g) {
  return GaussianModel(BlockStructure::uniform(g.dim(), 1), g.precision(), g.mean());
}

CriterionResult llis_certificate(const SuiteOptions& opts) {
  CriterionResult r;
  Table t({"problem", "case", "epsilon", "rank", "certificate", "error_w2_upper", "error_w1_coordinate", "floor", "pass"});
  const Index b = 16;
  const Index block = 4;
  const Index problems = opts.quick ? 1 : 3;
  const Index n = opts.quick ? 4000 : 20000;
  bool ok_a = true, ok_b = true, ok_c = true;

  for (Index p = 0; p < problems; ++p) {
    const auto prob = linear_gaussian_problem(b, block, 1, 2, 1.0, 2.0, 1.0, mix_seed(opts.seed, 800 + p));
    const auto post = exact_posterior(prob);
    const auto post_scalar = scalar_view(post);

    // (a) full rank: compare sampled marginals against the sampling floor.
    {
      const auto ridge = build_ridge_posterior(prob, full_rank_basis(prob.blocks()));
      const auto approx = scalar_view(ridge.as_gaussian_model());
      const auto coords = BlockStructure::uniform(prob.dim(), 1);
      const Matrix xs = post_scalar.sample(n, mix_seed(opts.seed, 810 + p));
      const Matrix xs2 = post_scalar.sample(n, mix_seed(opts.seed, 820 + p));
      const Matrix ys = approx.sample(n, mix_seed(opts.seed, 830 + p));
      const double measured = marginal_w1_empirical(coords, xs, ys).max_w1;
      const double floor = marginal_w1_empirical(coords, xs, xs2).max_w1;
      const bool pass = measured < 2.0 * floor;
      ok_a = ok_a && pass;
      t.add({num(p), "full_rank", "0", num(prob.dim()), "", "", num(measured), num(floor), flag(pass)});
    }

    // (c) epsilon sweep with exact Gaussian marginals.
    const auto diag_target = exact_diagnostics(prob, post, SamplingMeasure::target);
    double prev_cert = std::numeric_limits<double>::infinity();
    double prev_err = std::numeric_limits<double>::infinity();
    for (double eps : {0.3, 0.1, 0.01}) {
      const auto basis = build_basis(diag_target, eps);
      const auto ridge = build_ridge_posterior(prob, basis);
      const auto approx = ridge.as_gaussian_model();
      const auto cert = error_certificate(prob, basis, exact_diagnostics(prob, approx, SamplingMeasure::approximation));
      const double upper = marginal_w1_gaussian(post, approx).max_w1;
      const double coord = marginal_w1_gaussian(post_scalar, scalar_view(approx)).max_w1;
      // the Bures bound need not be monotone; the exact coordinate W1 is the measured error
      const bool pass = cert.value >= upper && cert.value <= prev_cert && coord <= prev_err;
      ok_c = ok_c && pass;
      prev_cert = cert.value;
      prev_err = coord;
      t.add({num(p), "epsilon_sweep", num(eps), num(basis.total_rank()), num(cert.value), num(upper), num(coord), "",
             flag(pass)});
    }
  }

  // (b) likelihood of whitened block 0 only.
  {
    const auto base = linear_gaussian_problem(b, block, 1, 2, 1.0, 2.0, 1.0, mix_seed(opts.seed, 890));
    Philox rng(mix_seed(opts.seed, 891), 0);
    Matrix B(ei(block), ei(block));
    for (Eigen::Index q = 0; q < B.size(); ++q) B.data()[q] = rng.normal();
    B += 2.0 * Matrix::Identity(ei(block), ei(block));
    Vector y(ei(block));
    for (Eigen::Index q = 0; q < y.size(); ++q) y[q] = rng.normal();
    const auto prob = whitened_block_problem(base.prior, 0, B, y, 1.0, base.S, base.nu);
    const auto post = exact_posterior(prob);
    const auto basis = build_basis(exact_diagnostics(prob, post, SamplingMeasure::target), 1e-6);
    const auto approx = build_ridge_posterior(prob, basis).as_gaussian_model();
    const auto cert = error_certificate(prob, basis, exact_diagnostics(prob, approx, SamplingMeasure::approximation));
    const double upper = marginal_w1_gaussian(post, approx).max_w1;
    const double coord = marginal_w1_gaussian(scalar_view(post), scalar_view(approx)).max_w1;
    Index off_rank = 0;
    for (Index k = 1; k < basis.ranks.size(); ++k) off_rank += basis.ranks[k];
    // the Bures bound carries sqrt(roundoff), so exactness is judged per coordinate
    ok_b = off_rank == 0 && cert.value <= 1e-10 && coord <= 1e-10;
    t.add({"block0", "single_block_likelihood", "0", num(basis.total_rank()), num(cert.value), num(upper), num(coord),
           "", flag(ok_b)});
  }

  r.pass = ok_a && ok_b && ok_c;
  r.summary = std::string("(a) ") + (ok_a ? "ok" : "FAIL") + ", (b) " + (ok_b ? "ok" : "FAIL") + ", (c) " +
              (ok_c ? "ok" : "FAIL") + " over " + std::to_string(problems) + " problem(s)";
  r.outputs.push_back(t.write(opts, "criterion_08_llis.csv"));
  return r;
}

// Criterion 9 ---------------------------------------------------------------

CriterionResult score_matching_recovery(const SuiteOptions& opts) {
  CriterionResult r;
  const Index b = 8;
  const Index N = opts.quick ? 10000 : 10000;
  const auto truth = gaussian_chain(b, 2.0, -0.8);
  const ScoreHypothesis hyp(truth.graph(), Dictionary::quadratic);
  const Matrix xs = truth.sample(N, mix_seed(opts.seed, 900));
  const auto rep = fit(hyp, xs);
  const auto fitted = hyp.to_gaussian(rep.theta);
  const Matrix& P = truth.precision();
  const Matrix& Q = fitted.precision();

  Table t({"i", "j", "truth", "fitted", "abs_error", "rel_error", "rel_to_max_entry"});
  const double scale = P.cwiseAbs().maxCoeff();
  double worst_scaled = 0.0;
  double worst_rel = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = i; j < P.cols(); ++j) {
      if (P(i, j) == 0.0) continue;
      const double err = std::abs(Q(i, j) - P(i, j));
      worst_scaled = std::max(worst_scaled, err / scale);
      worst_rel = std::max(worst_rel, err / std::abs(P(i, j)));
      t.add({num(static_cast<Index>(i)), num(static_cast<Index>(j)), num(P(i, j)), num(Q(i, j)), num(err),
             num(err / std::abs(P(i, j))), num(err / scale)});
    }
  const Matrix held_out = truth.sample(N, mix_seed(opts.seed, 901));
  const auto ibp = integration_by_parts_check(hyp, rep.theta, truth, held_out);
  const bool ibp_ok = std::abs(ibp.residual) < 3.0 * ibp.standard_error;
  Table s({"n", "max_error_over_max_entry", "max_relative_error", "ibp_residual", "ibp_se", "saddle_value", "converged"});
  s.add({num(N), num(worst_scaled), num(worst_rel), num(ibp.residual), num(ibp.standard_error), num(rep.saddle_value),
         flag(rep.converged)});
  r.pass = worst_scaled <= 0.05 && ibp_ok;
  r.summary = "max |error| / max|entry| = " + fixed(worst_scaled) + " (per-entry relative " + fixed(worst_rel) +
              "), identity residual " + fixed(ibp.residual / ibp.standard_error, 2) + " SE";
  r.outputs.push_back(t.write(opts, "criterion_09_lsm_entries.csv"));
  r.outputs.push_back(s.write(opts, "criterion_09_lsm_summary.csv"));
  return r;
}

// Criterion 10 --------------------------------------------------------------

CriterionResult dimension_ladder(const SuiteOptions& opts) {
  CriterionResult r;
  const std::vector<Index> bs = opts.quick ? std::vector<Index>{8, 32} : std::vector<Index>{8, 32, 128};
  const std::vector<Index> ns = opts.quick ? std::vector<Index>{1000, 10000} : std::vector<Index>{1000, 10000, 100000};
  const Index trials = opts.quick ? 40 : 100;
  const auto res = dimension_ladder_experiment(bs, ns, trials, mix_seed(opts.seed, 1000));
  Table rows({"b", "n", "trial", "max_w1", "argmax_block", "saddle_value", "fit_ok"});
  for (const auto& row : res.rows)
    rows.add({num(row.b), num(row.n), num(row.trial), num(row.max_w1), num(row.argmax_block), num(row.saddle_value),
              flag(row.fit_ok)});
  Table cells({"b", "n", "mean_max_w1"});
  auto cell = [&](Index b, Index n) {
    for (const auto& c : res.cell_means)
      if (c.first.first == b && c.first.second == n) return c.second;
    return std::numeric_limits<double>::quiet_NaN();
  };
  for (const auto& c : res.cell_means) cells.add({num(c.first.first), num(c.first.second), num(c.second)});
  const Index n_ref = 10000;
  const double ratio = cell(bs.back(), n_ref) / cell(bs.front(), n_ref);
  const double limit =
      1.5 * std::pow(std::log(static_cast<double>(bs.back())) / std::log(static_cast<double>(bs.front())), 0.25);
  bool monotone = true;
  for (Index b : bs)
    for (std::size_t k = 1; k < ns.size(); ++k) monotone = monotone && cell(b, ns[k]) < cell(b, ns[k - 1]);
  r.pass = ratio <= limit && monotone;
  r.summary = "ratio b=" + std::to_string(bs.back()) + "/b=" + std::to_string(bs.front()) + " = " + fixed(ratio) +
              " (limit " + fixed(limit) + "), N-monotone: " + (monotone ? "yes" : "no");
  Table s({"b_small", "b_large", "n", "ratio", "limit", "n_monotone"});
  s.add({num(bs.front()), num(bs.back()), num(n_ref), num(ratio), num(limit), flag(monotone)});
  r.outputs.push_back(rows.write(opts, "criterion_10_ladder_rows.csv"));
  r.outputs.push_back(cells.write(opts, "criterion_10_ladder_cells.csv"));
  r.outputs.push_back(s.write(opts, "criterion_10_ladder_summary.csv"));
  return r;
}

// Criterion 11 --------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<fs::path> csv_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") out.push_back(e.path().filename());
  std::sort(out.begin(), out.end());
  return out;
}

CriterionResult reproducibility(const SuiteOptions& opts) {
  CriterionResult r;
  const fs::path root = fs::path(opts.out_dir) / "reproducibility";
  std::vector<fs::path> dirs;
  for (const char* name : {"run_a", "run_b"}) {
    SuiteOptions sub;
    sub.quick = true;
    sub.seed = opts.seed;
    sub.out_dir = (root / name).string();
    for (int id = 1; id < kNumCriteria; ++id) sub.only.push_back(id);
    run_suite(sub);
    dirs.push_back(sub.out_dir);
  }
  const auto a = csv_files(dirs[0]);
  const auto b = csv_files(dirs[1]);
  Table t({"file", "bytes", "identical"});
  bool ok = a == b && !a.empty();
  for (const auto& f : a) {
    const std::string x = slurp(dirs[0] / f);
    const bool same = x == slurp(dirs[1] / f);
    ok = ok && same;
    t.add({f.string(), num(static_cast<Index>(x.size())), flag(same)});
  }
  r.pass = ok;
  r.summary = std::to_string(a.size()) + " CSV files compared, identical: " + (ok ? "yes" : "no");
  r.outputs.push_back(t.write(opts, "criterion_11_reproducibility.csv"));
  return r;
}

constexpr double kTimeLimits[kNumCriteria] = {1, 30, 300, 300, 600, 300, 300, 300, 120, 1200, 0};

}  // namespace

std::string criterion_name(int id) {
  static const char* names[kNumCriteria] = {"graph locality",
                                            "Stein solution sanity",
                                            "delta bound (graphical)",
                                            "delta bound (diagonal dominance)",
                                            "marginal W1 inequality",
                                            "multi-block W1 inequality",
                                            "lemma verifiers",
                                            "LLIS exactness and certificate",
                                            "localized score matching recovery",
                                            "dimension ladder",
                                            "quick-suite reproducibility"};
  if (id < 1 || id > kNumCriteria) throw std::out_of_range("criterion id must be in 1..11");
  return names[id - 1];
}

CriterionResult run_criterion(int id, const SuiteOptions& opts) {
  fs::create_directories(opts.out_dir);
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = graph_locality(opts); break;
    case 2: r = stein_sanity(opts); break;
    case 3: r = delta_graphical_dominance(opts); break;
    case 4: r = delta_dominant(opts); break;
    case 5: r = marginal_inequality(opts); break;
    case 6: r = multiblock_inequality(opts); break;
    case 7: r = lemma_verifiers(opts); break;
    case 8: r = llis_certificate(opts); break;
    case 9: r = score_matching_recovery(opts); break;
    case 10: r = dimension_ladder(opts); break;
    case 11: r = reproducibility(opts); break;
    default: throw std::out_of_range("criterion id must be in 1..11");
  }
  r.id = id;
  r.name = criterion_name(id);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.time_limit = kTimeLimits[id - 1];
  if (!opts.quick && r.time_limit > 0.0) {
    r.within_time = r.seconds < r.time_limit;
    r.pass = r.pass && r.within_time;
  }
  return r;
}

SuiteResult run_suite(const SuiteOptions& opts, const std::function<void(const CriterionResult&)>& on_result) {
  std::vector<int> ids = opts.only;
  if (ids.empty())
    for (int id = 1; id <= kNumCriteria; ++id) ids.push_back(id);
  SuiteResult out;
  Table t({"criterion", "name", "pass", "summary"});
  for (int id : ids) {
    auto r = run_criterion(id, opts);
    out.all_pass = out.all_pass && r.pass;
    std::string summary = r.summary;
    std::replace(summary.begin(), summary.end(), ',', ';');
    t.add({num(id), r.name, flag(r.pass), "\"" + summary + "\""});
    if (on_result) on_result(r);
    out.criteria.push_back(std::move(r));
  }
  t.write(opts, "suite_summary.csv");
  return out;
}

}  // namespace locality_lab
