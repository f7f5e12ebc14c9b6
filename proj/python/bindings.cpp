#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "locality_lab/bounds.hpp"
#include "locality_lab/cli.hpp"
#include "locality_lab/io.hpp"
#include "locality_lab/langevin.hpp"
#include "locality_lab/locality_graph.hpp"
#include "locality_lab/metrics.hpp"
#include "locality_lab/models.hpp"
#include "locality_lab/score_matching.hpp"
#include "locality_lab/suite.hpp"

namespace py = pybind11;
using namespace locality_lab;

namespace {

std::shared_ptr<const BlockedDensityModel> model_from_config(const std::string& json_text) {
  return model_from_json(Json::parse(json_text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "locality-lab core";
  m.attr("__version__") = library_version();

  py::register_exception<Error>(m, "LocalityError", PyExc_RuntimeError);

  py::class_<DependencyGraph>(m, "DependencyGraph")
      .def_static("from_edges", &DependencyGraph::from_edges, py::arg("num_vertices"), py::arg("edges"))
      .def_static("from_adjacency", &DependencyGraph::from_adjacency, py::arg("adjacency"))
      .def_property_readonly("num_vertices", &DependencyGraph::num_vertices)
      .def_property_readonly("num_edges", &DependencyGraph::num_edges)
      .def("neighbors", &DependencyGraph::neighbors, py::arg("j"))
      .def("adjacency", &DependencyGraph::adjacency)
      .def("diameter", &DependencyGraph::diameter)
      .def("distance",
           [](const DependencyGraph& g, Index j, Index k) -> py::object {
             const auto d = graph_distance(g, j, k);
             if (!d.is_finite()) return py::float_(std::numeric_limits<double>::infinity());
             return py::int_(d.value());
           })
      .def("q_neighborhood", [](const DependencyGraph& g, Index j, Index q) { return q_neighborhood(g, j, q); });

  m.def("banded_graph", &banded_graph, py::arg("num_vertices"), py::arg("bandwidth"));
  m.def("lattice_graph", &lattice_graph, py::arg("sides"));
  m.def("complete_graph", &complete_graph, py::arg("num_vertices"));

  py::class_<LocalityCertificate>(m, "LocalityCertificate")
      .def_readonly("certified", &LocalityCertificate::certified)
      .def_readonly("S", &LocalityCertificate::S)
      .def_readonly("nu", &LocalityCertificate::nu)
      .def_readonly("valid_up_to_radius", &LocalityCertificate::valid_up_to_radius)
      .def_readonly("min_slack", &LocalityCertificate::min_slack)
      .def_property_readonly("num_violations", [](const LocalityCertificate& c) { return c.violations.size(); });
  m.def("certify_locality", &certify_locality, py::arg("graph"), py::arg("S"), py::arg("nu"),
        py::arg("q_max") = std::nullopt);

  py::class_<DeltaBound>(m, "DeltaBound")
      .def_readonly("value", &DeltaBound::value)
      .def_readonly("kappa", &DeltaBound::kappa)
      .def_readonly("c", &DeltaBound::c)
      .def_property_readonly("source", [](const DeltaBound& b) { return to_string(b.source); });
  m.def("delta_graphical", &delta_graphical, py::arg("S"), py::arg("nu"), py::arg("m"), py::arg("M"));
  m.def("delta_diag_dominant", &delta_diag_dominant, py::arg("dominance"));
  m.def("diffusion_decay_bound", py::overload_cast<Index, double, double>(&diffusion_decay_bound),
        py::arg("distance"), py::arg("t"), py::arg("M"));
  m.def("li_series_bound_check", [](double t, double x) {
    const auto r = li_series_bound_check(t, x);
    return py::make_tuple(r.lhs, r.rhs, r.ok);
  });

  py::class_<BlockedDensityModel, std::shared_ptr<BlockedDensityModel>>(m, "Model")
      .def_property_readonly("kind", &BlockedDensityModel::kind)
      .def_property_readonly("dim", &BlockedDensityModel::dim)
      .def_property_readonly("graph", &BlockedDensityModel::graph)
      .def("log_density", &BlockedDensityModel::log_density)
      .def("score", &BlockedDensityModel::score)
      .def("hessian", &BlockedDensityModel::hessian);

  py::class_<GaussianModel, BlockedDensityModel, std::shared_ptr<GaussianModel>>(m, "GaussianModel")
      .def(py::init([](const Matrix& precision, const Vector& mean) {
             return std::make_shared<GaussianModel>(BlockStructure::uniform(precision.rows(), 1), precision, mean);
           }),
           py::arg("precision"), py::arg("mean"))
      .def_property_readonly("precision", &GaussianModel::precision)
      .def_property_readonly("covariance", &GaussianModel::covariance)
      .def_property_readonly("mean", &GaussianModel::mean)
      .def_property_readonly("min_eigenvalue", &GaussianModel::min_eigenvalue)
      .def_property_readonly("max_eigenvalue", &GaussianModel::max_eigenvalue)
      .def("sample", py::overload_cast<Index, std::uint64_t>(&GaussianModel::sample, py::const_), py::arg("n"),
           py::arg("seed"));

  py::class_<GinzburgLandauChain, BlockedDensityModel, std::shared_ptr<GinzburgLandauChain>>(m, "GLChain")
      .def(py::init([](Index n, double lambda, double m_param, double beta, double pinning) {
             return std::make_shared<GinzburgLandauChain>(gl_chain(n, lambda, m_param, beta, pinning));
           }),
           py::arg("n"), py::arg("lambda_"), py::arg("m_param"), py::arg("beta"), py::arg("pinning") = 0.0);

  m.def("gaussian_chain", [](Index b, double diag, double off) { return std::make_shared<GaussianModel>(gaussian_chain(b, diag, off)); },
        py::arg("b"), py::arg("diag"), py::arg("offdiag"));
  m.def("model_from_json", [](const std::string& text) {
    return std::const_pointer_cast<BlockedDensityModel>(model_from_config(text));
  });

  m.def("sample_model",
        [](const BlockedDensityModel& model, Index n, std::uint64_t seed) { return sample_model(model, n, seed); },
        py::arg("model"), py::arg("n"), py::arg("seed"));

  m.def("empirical_w1_1d", &empirical_w1_1d, py::arg("a"), py::arg("b"));
  m.def("gaussian_w1_1d", &gaussian_w1_1d, py::arg("mu1"), py::arg("sigma1"), py::arg("mu2"), py::arg("sigma2"));

  py::class_<InequalityReport>(m, "InequalityReport")
      .def_readonly("lhs", &InequalityReport::lhs)
      .def_readonly("rhs", &InequalityReport::rhs)
      .def_readonly("tolerance", &InequalityReport::tolerance)
      .def_readonly("passed", &InequalityReport::pass)
      .def_readonly("delta", &InequalityReport::delta);
  m.def(
      "verify_marginal_inequality",
      [](const BlockedDensityModel& pi, const BlockedDensityModel& pi_prime, const DeltaBound& delta, Index n,
         std::uint64_t seed) { return verify_marginal_inequality(pi, pi_prime, delta, n, seed); },
      py::arg("pi"), py::arg("pi_prime"), py::arg("delta"), py::arg("n"), py::arg("seed"));

  m.def(
      "fit_score_matching",
      [](const DependencyGraph& graph, const Matrix& samples, const std::string& dict, double R) {
        const ScoreHypothesis hyp(graph, dictionary_from_string(dict), R);
        const auto rep = fit(hyp, samples);
        py::dict out;
        out["theta"] = rep.theta;
        out["saddle_value"] = rep.saddle_value;
        out["argmax_block"] = rep.argmax_block;
        out["converged"] = rep.converged;
        if (hyp.dictionary() == Dictionary::quadratic) out["precision"] = hyp.to_gaussian(rep.theta).precision();
        return out;
      },
      py::arg("graph"), py::arg("samples"), py::arg("dict") = "quad", py::arg("R") = 1e3);

  py::class_<CriterionResult>(m, "CriterionResult")
      .def_readonly("id", &CriterionResult::id)
      .def_readonly("name", &CriterionResult::name)
      .def_readonly("passed", &CriterionResult::pass)
      .def_readonly("summary", &CriterionResult::summary)
      .def_readonly("seconds", &CriterionResult::seconds);
  m.def(
      "run_criterion",
      [](int id, bool quick, std::uint64_t seed, const std::string& out_dir) {
        SuiteOptions opts;
        opts.quick = quick;
        opts.seed = seed;
        opts.out_dir = out_dir;
        py::gil_scoped_release release;
        return run_criterion(id, opts);
      },
      py::arg("id"), py::arg("quick") = true, py::arg("seed") = 7, py::arg("out_dir") = "suite_out");

  m.def("cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"));
}
