#include "locality_lab/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "locality_lab/bounds.hpp"
#include "locality_lab/io.hpp"
#include "locality_lab/langevin.hpp"
#include "locality_lab/llis.hpp"
#include "locality_lab/metrics.hpp"
#include "locality_lab/parallel.hpp"
#include "locality_lab/score_matching.hpp"
#include "locality_lab/suite.hpp"

namespace locality_lab::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void manifest(const std::string& out, const std::string& command, const Json& config, std::uint64_t seed,
              Clock::time_point t0, std::vector<std::string> outputs) {
  Manifest m{command, config, seed, seconds_since(t0), std::move(outputs)};
  write_manifest(out + ".manifest.json", m);
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// Appends rows to a CSV report, writing the header only for a new file.
void append_csv(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open '" + path + "' for appending");
  auto line = [&out](const std::vector<std::string>& f) {
    for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << f[i];
    out << '\n';
  };
  if (fresh) line(header);
  for (const auto& r : rows) line(r);
}

std::vector<Index> parse_list(const std::string& s) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      throw UsageError("expected a comma-separated list of positive integers, got '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

Matrix model_probes(const BlockedDensityModel& model, Index count, std::uint64_t seed) {
  if (const auto* g = as_gaussian(model)) return g->sample(count, seed);
  LangevinConfig lc{0.01, 20000, 2000, 1, seed, false, 1};
  Matrix p = default_probe_points(model, Vector::Zero(ei(model.dim())), lc, count - 1);
  Matrix out(p.rows() + 1, p.cols());
  out.row(0).setZero();
  out.bottomRows(p.rows()) = p;
  return out;
}

// Smallest S with |N_j^q| <= 1 + S q^nu for every j and q up to the diameter.
double minimal_locality_constant(const DependencyGraph& g, int nu) {
  double S = 0.0;
  const Index qmax = std::max<Index>(1, g.diameter());
  for (Index j = 0; j < g.num_vertices(); ++j) {
    const auto dist = g.distances_from(j);
    for (Index q = 1; q <= qmax; ++q) {
      Index count = 0;
      for (const auto& d : dist) count += d.is_finite() && d.value() <= q;
      S = std::max(S, (static_cast<double>(count) - 1.0) / std::pow(static_cast<double>(q), nu));
    }
  }
  return std::max(S, 1.0);
}

DeltaBound delta_for(const BlockedDensityModel& model, const std::string& from, double S, int nu, Index probes,
                     std::uint64_t seed) {
  const Matrix pts = model_probes(model, probes, seed);
  if (from == "diag") return delta_diag_dominant(dominance_matrix_from_model(model, pts));
  if (S <= 0.0) S = minimal_locality_constant(model.graph(), nu);
  double m, M;
  if (const auto* g = as_gaussian(model)) {
    m = g->min_eigenvalue();
    M = g->max_eigenvalue();
  } else {
    std::tie(m, M) = convexity_bounds(model, pts);
  }
  return delta_graphical(S, nu, m, M);
}

Json delta_json(const DeltaBound& d) {
  return {{"delta", d.value}, {"source", to_string(d.source)}, {"S", d.S}, {"nu", d.nu}, {"m", d.m},
          {"M", d.M},         {"kappa", d.kappa},                {"c", d.c}, {"worst_row", d.worst_row}};
}

// Subcommand handlers -------------------------------------------------------

struct GraphArgs {
  std::string graph, model, lattice, out;
  Index chain = 0;
  double S = 2.0;
  int nu = 1;
  Index qmax = 0;
};

int graph_certify(const GraphArgs& a) {
  const auto t0 = Clock::now();
  const int sources = !a.graph.empty() + !a.model.empty() + !a.lattice.empty() + (a.chain > 0);
  if (sources != 1) throw UsageError("give exactly one of --graph, --model, --lattice, --chain");
  std::optional<DependencyGraph> g;
  Json cfg{{"S", a.S}, {"nu", a.nu}, {"qmax", a.qmax}};
  if (!a.graph.empty()) {
    g = graph_from_json(read_json(a.graph));
    cfg["graph"] = a.graph;
  } else if (!a.model.empty()) {
    const Json mj = read_json(a.model);
    g = model_from_json(mj)->graph();
    cfg["model"] = mj;
  } else if (!a.lattice.empty()) {
    g = lattice_graph(parse_list(a.lattice));
    cfg["lattice"] = a.lattice;
  } else {
    g = banded_graph(a.chain, 1);
    cfg["chain"] = a.chain;
  }
  const auto c = certify_locality(*g, a.S, a.nu, a.qmax > 0 ? std::optional<Index>(a.qmax) : std::nullopt);
  std::cout << "certified " << (c.certified ? "yes" : "no") << " S " << a.S << " nu " << a.nu << " q_max "
            << c.valid_up_to_radius << " min_slack " << c.min_slack << '\n';
  for (const auto& v : c.violations)
    std::cout << "violation vertex " << v.vertex << " radius " << v.radius << " |N| " << v.neighborhood_size
              << " allowed " << v.allowed << '\n';
  if (!a.out.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& v : c.violations)
      rows.push_back({format_number(v.vertex), format_number(v.radius), format_number(v.neighborhood_size),
                      format_number(v.allowed)});
    write_csv(a.out, {"vertex", "radius", "neighborhood_size", "allowed"}, rows);
    manifest(a.out, "graph certify", cfg, 0, t0, {a.out});
  }
  return c.certified ? kExitOk : kExitVerificationFailed;
}

struct LangevinArgs {
  std::string model, out;
  Index steps = 1000, chains = 1, every = 1;
  double h = 0.0;
  std::uint64_t seed = 0;
};

int langevin_run(const LangevinArgs& a) {
  const auto t0 = Clock::now();
  const Json mj = read_json(a.model);
  const auto model = model_from_json(mj);
  LangevinConfig cfg;
  cfg.num_steps = a.steps;
  cfg.num_chains = a.chains;
  cfg.seed = a.seed;
  cfg.step_size = a.h;
  if (cfg.step_size <= 0.0) {
    const double M = convexity_bounds(*model, model_probes(*model, 8, a.seed)).second;
    cfg.step_size = default_step_size(M);
  }
  const Vector x0 = Vector::Zero(ei(model->dim()));
  std::vector<std::string> header{"step"};
  for (Index i = 0; i < model->dim(); ++i) header.push_back("x_" + std::to_string(i));
  std::vector<std::string> outputs;
  for (Index c = 0; c < a.chains; ++c) {
    const auto path = simulate(*model, x0, cfg, c);
    std::vector<std::vector<std::string>> rows;
    for (Index s = 0; s < path.states.size(); s += a.every) {
      std::vector<std::string> row{format_number(s)};
      for (Eigen::Index i = 0; i < path.states[s].size(); ++i) row.push_back(format_number(path.states[s][i]));
      rows.push_back(std::move(row));
    }
    const std::string file = a.chains == 1 ? a.out : sibling(a.out, "_chain" + std::to_string(c) + ".csv");
    write_csv(file, header, rows);
    outputs.push_back(file);
  }
  manifest(a.out, "langevin run",
           {{"model", mj}, {"steps", a.steps}, {"h", cfg.step_size}, {"chains", a.chains}, {"every", a.every}}, a.seed,
           t0, outputs);
  std::cout << "wrote " << outputs.size() << " path file(s), step size " << cfg.step_size << '\n';
  return kExitOk;
}

struct DeltaArgs {
  std::string model, from = "graphical", out;
  double S = 0.0, m = 0.0, M = 0.0;
  int nu = 1;
  Index probes = 16;
  std::uint64_t seed = 0;
};

int bounds_delta(const DeltaArgs& a) {
  const auto t0 = Clock::now();
  DeltaBound d;
  Json cfg{{"from", a.from}, {"S", a.S}, {"nu", a.nu}};
  if (a.model.empty()) {
    if (a.S <= 0.0 || a.m <= 0.0 || a.M <= 0.0) throw UsageError("need --model, or all of --S --m --M");
    d = delta_graphical(a.S, a.nu, a.m, a.M);
    cfg["m"] = a.m;
    cfg["M"] = a.M;
  } else {
    const Json mj = read_json(a.model);
    d = delta_for(*model_from_json(mj), a.from, a.S, a.nu, a.probes, a.seed);
    cfg["model"] = mj;
  }
  std::cout << format_number(d.value) << '\n';
  if (!a.out.empty()) {
    append_csv(a.out, {"source", "delta", "S", "nu", "m", "M", "kappa", "c"},
               {{to_string(d.source), format_number(d.value), format_number(d.S), std::to_string(d.nu),
                 format_number(d.m), format_number(d.M), format_number(d.kappa), format_number(d.c)}});
    manifest(a.out, "bounds delta", cfg, a.seed, t0, {a.out});
  }
  return kExitOk;
}

struct LemmaArgs {
  std::string which, out;
  Index trials = 20;
  std::uint64_t seed = 0;
};

int bounds_verify_lemma(const LemmaArgs& a) {
  const auto t0 = Clock::now();
  Philox rng(mix_seed(a.seed, 77), 0);
  auto uniform_index = [&rng](Index lo, Index hi) {
    return lo + std::min<Index>(hi - lo, static_cast<Index>(rng.uniform() * static_cast<double>(hi - lo + 1)));
  };
  std::vector<std::vector<std::string>> rows;
  Index failures = 0;
  for (Index i = 0; i < a.trials; ++i) {
    bool ok = false;
    double margin = 0.0;
    std::string detail;
    if (a.which == "A1") {
      const Index n = uniform_index(6, 24), bw = uniform_index(1, 2);
      const double M = 0.5 + 1.5 * rng.uniform();
      const auto r = verify_diffusion_lemma(random_banded_h_path(n, bw, M, mix_seed(a.seed, i)),
                                            BlockStructure::uniform(n, 1), banded_graph(n, bw), M, 5.0, 0.01);
      ok = r.ok;
      margin = r.worst_margin;
      detail = "n=" + std::to_string(n);
    } else if (a.which == "A3") {
      const double t = 5.0 * rng.uniform(), x = 0.05 + 0.9 * rng.uniform();
      const auto r = li_series_bound_check(t, x);
      ok = r.ok;
      margin = r.rhs - r.lhs;
      detail = "t=" + format_number(t) + " x=" + format_number(x);
    } else if (a.which == "A4") {
      const Index b = uniform_index(4, 32);
      const Matrix z = random_dominant_z_matrix(b, 0.2 + 1.8 * rng.uniform(), mix_seed(a.seed, i));
      Matrix g0(ei(b), ei(b));
      for (Eigen::Index p = 0; p < g0.size(); ++p) g0.data()[p] = rng.uniform();
      const auto r = verify_inf_norm_decay(z, g0, 5.0);
      ok = r.ok;
      margin = r.worst_margin;
      detail = "b=" + std::to_string(b);
    } else if (a.which == "C1") {
      const Index b = uniform_index(8, 64), bw = uniform_index(1, 2);
      const double m = 0.5 + 1.5 * rng.uniform();
      const auto g = gaussian_from_banded_precision(BlockStructure::uniform(b, 1), bw, m, m * (1.0 + 3.0 * rng.uniform()),
                                                    mix_seed(a.seed, i));
      const auto r = sqrt_row_decay_check(g, 2.0 * static_cast<double>(bw), 1);
      ok = r.ok;
      margin = r.bound - r.max_row_sum;
      detail = "b=" + std::to_string(b);
    } else {
      throw UsageError("--which must be one of A1, A3, A4, C1");
    }
    failures += !ok;
    rows.push_back({a.which, format_number(i), detail, format_number(margin), ok ? "1" : "0"});
  }
  std::cout << a.which << ": " << (a.trials - failures) << "/" << a.trials << " instances pass\n";
  if (!a.out.empty()) {
    append_csv(a.out, {"lemma", "instance", "detail", "margin", "ok"}, rows);
    manifest(a.out, "bounds verify-lemma", {{"which", a.which}, {"trials", a.trials}}, a.seed, t0, {a.out});
  }
  return failures == 0 ? kExitOk : kExitVerificationFailed;
}

struct MarginalArgs {
  std::string pi, pi_prime, from = "graphical", out;
  double S = 0.0;
  int nu = 1;
  Index n = 4000;
  std::uint64_t seed = 0;
};

int verify_marginal(const MarginalArgs& a) {
  const auto t0 = Clock::now();
  const Json ja = read_json(a.pi), jb = read_json(a.pi_prime);
  const auto pi = model_from_json(ja);
  const auto pp = model_from_json(jb);
  const auto delta = delta_for(*pp, a.from, a.S, a.nu, 16, mix_seed(a.seed, 9));
  const auto rep = verify_marginal_inequality(*pi, *pp, delta, a.n, a.seed);
  const Json result{{"lhs", rep.lhs},
                    {"rhs", rep.rhs},
                    {"slack", rep.slack},
                    {"tolerance", rep.tolerance},
                    {"pass", rep.pass},
                    {"lhs_method", to_string(rep.lhs_method)},
                    {"lhs_upper_bounded", rep.lhs_upper_bounded},
                    {"sampling_floor", rep.sampling_floor},
                    {"delta", delta_json(delta)},
                    {"n", a.n},
                    {"seed", a.seed}};
  std::cout << result.dump(2) << '\n';
  if (!a.out.empty()) {
    write_json(a.out, result);
    const std::string csv = sibling(a.out, "_blocks.csv");
    std::vector<std::vector<std::string>> rows;
    for (std::size_t j = 0; j < rep.per_block_w1.size(); ++j)
      rows.push_back({format_number(static_cast<Index>(j)), format_number(rep.per_block_w1[j]),
                      format_number(rep.per_block_discrepancy[j])});
    write_csv(csv, {"block", "w1", "score_discrepancy"}, rows);
    manifest(a.out, "verify marginal", {{"pi", ja}, {"pi_prime", jb}, {"delta_from", a.from}, {"n", a.n}}, a.seed, t0,
             {a.out, csv});
  }
  return rep.pass ? kExitOk : kExitVerificationFailed;
}

struct LlisArgs {
  std::string problem, basis, out;
  double eps = 0.1;
  Index n = 0;
  std::uint64_t seed = 0;
};

DiagnosticMatrices diagnostics_for(const PosteriorProblem& prob, const GaussianModel& measure, SamplingMeasure which,
                                   Index n, std::uint64_t seed) {
  if (n == 0) return exact_diagnostics(prob, measure, which);
  return estimate_diagnostics(prob, measure.sample(n, seed), which);
}

int llis_build(const LlisArgs& a) {
  const auto t0 = Clock::now();
  const Json pj = read_json(a.problem);
  const auto prob = problem_from_json(pj);
  const auto post = exact_posterior(prob);
  const auto basis = build_basis(diagnostics_for(prob, post, SamplingMeasure::target, a.n, a.seed), a.eps);
  write_json(a.out, basis_to_json(basis, pj));
  manifest(a.out, "llis build", {{"problem", pj}, {"eps", a.eps}, {"n", a.n}}, a.seed, t0, {a.out});
  std::cout << "total rank " << basis.total_rank() << " of " << prob.dim() << '\n';
  return kExitOk;
}

int llis_certify(const LlisArgs& a) {
  const auto t0 = Clock::now();
  const Json bj = read_json(a.basis);
  if (!bj.contains("problem")) throw UsageError("basis file lacks the problem config");
  const auto prob = problem_from_json(bj.at("problem"));
  const auto basis = basis_from_json(bj);
  const auto approx = build_ridge_posterior(prob, basis).as_gaussian_model();
  const auto cert = error_certificate(
      prob, basis, diagnostics_for(prob, approx, SamplingMeasure::approximation, a.n, mix_seed(a.seed, 1)));
  const double err = marginal_w1_gaussian(exact_posterior(prob), approx).max_w1;
  const bool ok = cert.value >= err;
  const Json result{{"certificate", cert.value},     {"residue_factor", cert.residue_factor},
                    {"constant", cert.constant},     {"per_block_terms", cert.per_block_terms},
                    {"measured_error", err},         {"total_rank", basis.total_rank()},
                    {"certificate_covers_error", ok}};
  std::cout << result.dump(2) << '\n';
  if (!a.out.empty()) {
    write_json(a.out, result);
    manifest(a.out, "llis certify", {{"basis", a.basis}, {"n", a.n}}, a.seed, t0, {a.out});
  }
  return ok ? kExitOk : kExitVerificationFailed;
}

struct LsmArgs {
  std::string data, graph, dict = "quad", out, bs = "8,32,128", ns = "10000";
  double R = 1e3;
  Index N = 0, trials = 3;
  std::uint64_t seed = 0;
};

int lsm_fit(const LsmArgs& a) {
  const auto t0 = Clock::now();
  Matrix xs = read_matrix(a.data);
  const Json gj = read_json(a.graph);
  const ScoreHypothesis hyp(graph_from_json(gj), dictionary_from_string(a.dict), a.R);
  if (a.N > 0 && a.N < static_cast<Index>(xs.rows())) {
    // seeded subsample without replacement (partial Fisher-Yates)
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(xs.rows()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    Philox rng(a.seed, 0);
    for (Index i = 0; i < a.N; ++i) {
      const Index j = i + std::min<Index>(idx.size() - 1 - i, static_cast<Index>(rng.uniform() * static_cast<double>(idx.size() - i)));
      std::swap(idx[i], idx[j]);
    }
    Matrix sub(ei(a.N), xs.cols());
    for (Index i = 0; i < a.N; ++i) sub.row(ei(i)) = xs.row(idx[i]);
    xs = std::move(sub);
  }
  const auto rep = fit(hyp, xs);
  std::vector<double> theta(rep.theta.data(), rep.theta.data() + rep.theta.size());
  Json features = Json::array();
  for (const auto& f : hyp.features()) {
    static const char* kinds[] = {"linear", "onsite", "pair", "cubic", "quartic"};
    features.push_back({{"kind", kinds[static_cast<int>(f.kind)]}, {"vertex", f.vertex}, {"partner", f.partner}});
  }
  const Json result{{"theta", theta},
                    {"features", features},
                    {"per_block_losses", rep.per_block_losses},
                    {"lambda", rep.lambda},
                    {"lambda_rule", rep.lambda_rule},
                    {"saddle_value", rep.saddle_value},
                    {"argmax_block", rep.argmax_block},
                    {"converged", rep.converged},
                    {"n_samples", rep.n_samples},
                    {"model", {{"type", "clique"}, {"graph", gj}, {"dict", a.dict}, {"R", a.R}, {"theta", theta}}}};
  write_json(a.out, result);
  manifest(a.out, "lsm fit", {{"data", a.data}, {"graph", gj}, {"dict", a.dict}, {"R", a.R}, {"N", a.N}}, a.seed, t0,
           {a.out});
  std::cout << "saddle value " << format_number(rep.saddle_value) << " at block " << rep.argmax_block
            << (rep.converged ? "" : " (not converged)") << '\n';
  return kExitOk;
}

int lsm_ladder(const LsmArgs& a) {
  const auto t0 = Clock::now();
  const auto bs = parse_list(a.bs);
  const auto ns = parse_list(a.ns);
  const auto res = dimension_ladder_experiment(bs, ns, a.trials, a.seed);
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : res.cell_means) {
    rows.push_back({format_number(c.first.first), format_number(c.first.second), format_number(c.second)});
    std::cout << "b " << c.first.first << " N " << c.first.second << " mean max W1 " << format_number(c.second) << '\n';
  }
  bool ok = true;
  if (bs.size() > 1) {
    const double limit = 1.5 * std::pow(std::log(static_cast<double>(bs.back())) / std::log(static_cast<double>(bs.front())), 0.25);
    for (Index n : ns) {
      double lo = 0.0, hi = 0.0;
      for (const auto& c : res.cell_means) {
        if (c.first.second != n) continue;
        if (c.first.first == bs.front()) lo = c.second;
        if (c.first.first == bs.back()) hi = c.second;
      }
      const double ratio = hi / lo;
      ok = ok && ratio <= limit;
      std::cout << "N " << n << " ratio " << format_number(ratio) << " limit " << format_number(limit) << '\n';
    }
  }
  if (!a.out.empty()) {
    write_csv(a.out, {"b", "n", "mean_max_w1"}, rows);
    manifest(a.out, "lsm ladder", {{"b", a.bs}, {"N", a.ns}, {"trials", a.trials}}, a.seed, t0, {a.out});
  }
  return ok ? kExitOk : kExitVerificationFailed;
}

struct SuiteArgs {
  bool quick = false;
  std::uint64_t seed = 7;
  std::string out = "suite_out";
  std::vector<int> only;
};

int suite(const SuiteArgs& a) {
  const auto t0 = Clock::now();
  SuiteOptions opts;
  opts.quick = a.quick;
  opts.seed = a.seed;
  opts.out_dir = a.out;
  opts.only = a.only;
  std::vector<std::string> outputs;
  const auto res = run_suite(opts, [&outputs](const CriterionResult& r) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.id << "  " << r.name << ": " << r.summary << '\n';
    outputs.insert(outputs.end(), r.outputs.begin(), r.outputs.end());
  });
  outputs.push_back((fs::path(a.out) / "suite_summary.csv").string());
  Manifest m{"suite", {{"quick", a.quick}, {"only", a.only}}, a.seed, seconds_since(t0), outputs};
  write_manifest((fs::path(a.out) / "manifest.json").string(), m);
  return res.all_pass ? kExitOk : kExitVerificationFailed;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"locality-lab: locality constants, marginal W1 inequalities, LLIS and localized score matching"};
  app.require_subcommand(1);
  Index threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 = hardware count)");
  app.set_version_flag("--version", library_version());

  GraphArgs ga;
  auto* graph = app.add_subcommand("graph", "Dependency-graph tools")->require_subcommand(1);
  auto* certify = graph->add_subcommand("certify", "Check (S, nu)-locality");
  certify->add_option("--graph", ga.graph, "Adjacency list JSON");
  certify->add_option("--model", ga.model, "Model config JSON (its dependency graph)");
  certify->add_option("--lattice", ga.lattice, "Lattice side lengths, e.g. 16,16");
  certify->add_option("--chain", ga.chain, "Chain length (bandwidth 1)");
  certify->add_option("--S", ga.S, "Locality constant S")->capture_default_str();
  certify->add_option("--nu", ga.nu, "Growth exponent nu")->capture_default_str();
  certify->add_option("--qmax", ga.qmax, "Largest radius checked (0 = diameter)");
  certify->add_option("--out", ga.out, "Violations CSV");

  LangevinArgs la;
  auto* langevin = app.add_subcommand("langevin", "Langevin sampling")->require_subcommand(1);
  auto* lrun = langevin->add_subcommand("run", "Simulate Euler-Maruyama paths");
  lrun->set_help_flag("--help", "Print this help message and exit");
  lrun->add_option("--model", la.model, "Model config JSON")->required();
  lrun->add_option("--steps", la.steps, "Number of steps")->capture_default_str();
  lrun->add_option("--h", la.h, "Step size (default 0.01 / M_hat)");
  lrun->add_option("--chains", la.chains, "Number of chains")->capture_default_str();
  lrun->add_option("--every", la.every, "Write every k-th state")->capture_default_str();
  lrun->add_option("--seed", la.seed, "Seed")->capture_default_str();
  lrun->add_option("--out", la.out, "Path CSV")->required();

  DeltaArgs da;
  LemmaArgs lm;
  auto* bounds = app.add_subcommand("bounds", "Localization constants and lemma verifiers")->require_subcommand(1);
  auto* delta = bounds->add_subcommand("delta", "Evaluate a delta bound");
  delta->add_option("--model", da.model, "Model config JSON");
  delta->add_option("--from", da.from, "graphical or diag")->check(CLI::IsMember({"graphical", "diag"}))->capture_default_str();
  delta->add_option("--S", da.S, "Locality constant S (default: smallest certified)");
  delta->add_option("--nu", da.nu, "Growth exponent nu")->capture_default_str();
  delta->add_option("--m", da.m, "Lower Hessian bound");
  delta->add_option("--M", da.M, "Upper Hessian bound");
  delta->add_option("--probes", da.probes, "Probe points for non-Gaussian models")->capture_default_str();
  delta->add_option("--seed", da.seed, "Seed")->capture_default_str();
  delta->add_option("--out", da.out, "CSV report (rows are appended)");
  auto* lemma = bounds->add_subcommand("verify-lemma", "Randomized checks of the decay lemmas");
  lemma->add_option("--which", lm.which, "A1, A3, A4 or C1")->required()->check(CLI::IsMember({"A1", "A3", "A4", "C1"}));
  lemma->add_option("--trials", lm.trials, "Number of random instances")->capture_default_str();
  lemma->add_option("--seed", lm.seed, "Seed")->capture_default_str();
  lemma->add_option("--out", lm.out, "CSV report (rows are appended)");

  MarginalArgs ma;
  auto* verify = app.add_subcommand("verify", "Inequality verifiers")->require_subcommand(1);
  auto* marginal = verify->add_subcommand("marginal", "max_i W1(pi_i, pi'_i) <= delta max_j E||score diff||");
  marginal->add_option("--pi", ma.pi, "Model config JSON of pi")->required();
  marginal->add_option("--pi-prime", ma.pi_prime, "Model config JSON of pi'")->required();
  marginal->add_option("--delta-from", ma.from, "graphical or diag")->check(CLI::IsMember({"graphical", "diag"}))->capture_default_str();
  marginal->add_option("--S", ma.S, "Locality constant for the graphical bound (default: smallest certified)");
  marginal->add_option("--nu", ma.nu, "Growth exponent nu")->capture_default_str();
  marginal->add_option("--n", ma.n, "Samples")->capture_default_str();
  marginal->add_option("--seed", ma.seed, "Seed")->capture_default_str();
  marginal->add_option("--out", ma.out, "Report JSON (per-block CSV written beside it)");

  LlisArgs lb, lc;
  auto* llis = app.add_subcommand("llis", "Localized likelihood-informed subspaces")->require_subcommand(1);
  auto* build = llis->add_subcommand("build", "Build a basis");
  build->add_option("--problem", lb.problem, "Problem config JSON")->required();
  build->add_option("--eps", lb.eps, "Truncation tolerance in (0, 1)")->capture_default_str();
  build->add_option("--n", lb.n, "Monte Carlo samples (0 = closed form)")->capture_default_str();
  build->add_option("--seed", lb.seed, "Seed")->capture_default_str();
  build->add_option("--out", lb.out, "Basis JSON")->required();
  auto* lcert = llis->add_subcommand("certify", "Error certificate of a basis");
  lcert->add_option("--basis", lc.basis, "Basis JSON")->required();
  lcert->add_option("--n", lc.n, "Monte Carlo samples (0 = closed form)")->capture_default_str();
  lcert->add_option("--seed", lc.seed, "Seed")->capture_default_str();
  lcert->add_option("--out", lc.out, "Report JSON");

  LsmArgs sf, sl;
  auto* lsm = app.add_subcommand("lsm", "Localized score matching")->require_subcommand(1);
  auto* lfit = lsm->add_subcommand("fit", "Fit a clique hypothesis to samples");
  lfit->add_option("--data", sf.data, "Samples CSV (row per observation) or .bin")->required();
  lfit->add_option("--graph", sf.graph, "Adjacency list JSON")->required();
  lfit->add_option("--dict", sf.dict, "quad or quartic")->check(CLI::IsMember({"quad", "quartic"}))->capture_default_str();
  lfit->add_option("--R", sf.R, "C^2 bound")->capture_default_str();
  lfit->add_option("--N", sf.N, "Use N rows (0 = all)")->capture_default_str();
  lfit->add_option("--seed", sf.seed, "Seed for the row subsample")->capture_default_str();
  lfit->add_option("--out", sf.out, "Fit JSON")->required();
  auto* ladder = lsm->add_subcommand("ladder", "Dimension ladder on a Gaussian chain");
  ladder->add_option("--b", sl.bs, "Comma-separated chain lengths")->capture_default_str();
  ladder->add_option("--N", sl.ns, "Comma-separated sample sizes")->capture_default_str();
  ladder->add_option("--trials", sl.trials, "Trials per cell")->capture_default_str();
  ladder->add_option("--seed", sl.seed, "Seed")->capture_default_str();
  ladder->add_option("--out", sl.out, "Cell-mean CSV");

  SuiteArgs sa;
  auto* suite_cmd = app.add_subcommand("suite", "Run the acceptance battery");
  suite_cmd->add_flag("--quick", sa.quick, "Reduced sizes");
  suite_cmd->add_option("--seed", sa.seed, "Seed")->capture_default_str();
  suite_cmd->add_option("--out", sa.out, "Output directory")->capture_default_str();
  suite_cmd->add_option("--only", sa.only, "Criterion ids to run")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  set_thread_limit(threads);

  try {
    if (certify->parsed()) return graph_certify(ga);
    if (lrun->parsed()) return langevin_run(la);
    if (delta->parsed()) return bounds_delta(da);
    if (lemma->parsed()) return bounds_verify_lemma(lm);
    if (marginal->parsed()) return verify_marginal(ma);
    if (build->parsed()) return llis_build(lb);
    if (lcert->parsed()) return llis_certify(lc);
    if (lfit->parsed()) return lsm_fit(sf);
    if (ladder->parsed()) return lsm_ladder(sl);
    if (suite_cmd->parsed()) return suite(sa);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitVerificationFailed;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage{"locality-lab"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(storage.size()), argv.data());
}

}  // namespace locality_lab::cli
