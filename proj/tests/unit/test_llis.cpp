#include <doctest.h>

#include <cmath>
#include <memory>

#include "locality_lab/llis.hpp"
#include "locality_lab/metrics.hpp"
#include "locality_lab/rng.hpp"

using namespace locality_lab;

namespace {

DiagnosticMatrices single_block_diag(const Matrix& m) {
  DiagnosticMatrices d;
  d.M_blocks = {m};
  d.G = {m};
  d.H = {{Matrix::Zero(m.rows(), m.cols())}};
  return d;
}

}  // namespace

TEST_CASE("whitening") {
  const auto id = GaussianModel::standard(BlockStructure::uniform(3, 1));
  const Vector x = Vector::LinSpaced(3, -1, 1);
  CHECK(whiten(id, x) == x);

  const GaussianModel four(BlockStructure::uniform(1, 1), Matrix::Constant(1, 1, 0.25), Vector::Zero(1));
  CHECK(whiten(four, Vector::Constant(1, 2.0))[0] == doctest::Approx(1.0));

  const auto g = gaussian_from_banded_precision(BlockStructure::uniform(5, 2), 1, 0.5, 3.0, 4);
  Philox rng(1, 0);
  const Vector y = rng.normal_vector(10);
  CHECK((unwhiten(g, whiten(g, y)) - y).norm() < 1e-10);
}

TEST_CASE("basis rank rule") {
  Matrix m = Matrix::Zero(2, 2);
  m.diagonal() << 10.0, 0.1;
  CHECK(build_basis(single_block_diag(m), 0.05).ranks[0] == 1);
  CHECK(build_basis(single_block_diag(m), 1e-6).ranks[0] == 2);

  DiagnosticMatrices two;
  two.M_blocks = {m, Matrix::Zero(2, 2)};
  two.G = two.M_blocks;
  two.H = {{Matrix::Zero(2, 2), Matrix::Zero(2, 2)}, {Matrix::Zero(2, 2), Matrix::Zero(2, 2)}};
  const auto b = build_basis(two, 0.3);
  CHECK(b.ranks[1] == 0);
  CHECK_THROWS_AS(build_basis(two, 0.0), std::invalid_argument);

  // projector and complement are orthogonal and sum to identity
  const Matrix p = b.projector(), q = b.complement_projector();
  CHECK((p + q - Matrix::Identity(4, 4)).norm() < 1e-12);
  CHECK((p * p - p).norm() < 1e-12);
  CHECK((p * q).norm() < 1e-12);
}

TEST_CASE("residue") {
  Philox rng(2, 0);
  Matrix a(4, 4);
  for (Eigen::Index q = 0; q < a.size(); ++q) a.data()[q] = rng.normal();
  const Matrix c = a * a.transpose();
  CHECK(residue(c, Matrix::Identity(4, 4)) == 0.0);
  CHECK(residue(c, Matrix(4, 0)) == doctest::Approx(c.trace()));
  const Matrix e0 = Matrix::Identity(4, 1);
  CHECK(residue(c, e0) == doctest::Approx(c.trace() - c(0, 0)));
}

TEST_CASE("diagnostics without data vanish") {
  const auto prior = std::make_shared<GaussianModel>(GaussianModel::standard(BlockStructure::uniform(3, 2)));
  auto like = std::make_shared<LinearGaussianLikelihood>(Matrix::Zero(1, 6), Vector::Zero(1), 1.0);
  const auto prob = make_posterior_problem(prior, like, banded_graph(3, 1), 2.0, 1);
  const auto d = exact_diagnostics(prob, *prior, SamplingMeasure::target);
  for (const auto& m : d.M_blocks) CHECK(m.norm() == 0.0);
}

TEST_CASE("Monte Carlo diagnostics converge to the closed form") {
  const auto prob = linear_gaussian_problem(4, 2, 1, 2, 1.0, 2.0, 1.0, 5);
  const auto post = exact_posterior(prob);
  const auto exact = exact_diagnostics(prob, post, SamplingMeasure::target);
  const auto mc = estimate_diagnostics(prob, post.sample(20000, 6), SamplingMeasure::target);
  for (Index j = 0; j < 4; ++j) {
    const double scale = exact.M_blocks[j].norm();
    CHECK((mc.M_blocks[j] - exact.M_blocks[j]).norm() < 0.05 * scale);
  }
}

TEST_CASE("ridge posterior special cases") {
  const auto prob = linear_gaussian_problem(6, 2, 1, 1, 1.0, 2.0, 1.0, 7);
  const auto post = exact_posterior(prob);

  // full rank recovers the posterior
  const auto full = build_ridge_posterior(prob, full_rank_basis(prob.blocks()));
  CHECK(full.exact());
  const auto g = full.as_gaussian_model();
  CHECK((g.precision() - post.precision()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((g.mean() - post.mean()).cwiseAbs().maxCoeff() < 1e-9);
  const auto cert = error_certificate(prob, full_rank_basis(prob.blocks()),
                                      exact_diagnostics(prob, g, SamplingMeasure::approximation));
  CHECK(cert.value == 0.0);

  // scalar prior N(0,1), log l = -x^2/2 at rank zero averages to a constant
  const auto prior = std::make_shared<GaussianModel>(GaussianModel::standard(BlockStructure::uniform(1, 1)));
  auto like = std::make_shared<LinearGaussianLikelihood>(Matrix::Identity(1, 1), Vector::Zero(1), 1.0);
  const auto p1 = make_posterior_problem(prior, like, banded_graph(1, 0), 1.0, 1);
  LLISBasis zero{prior->blocks(), 0.5, {Matrix(1, 0)}, {0}, {Vector::Zero(1)}};
  const RidgePosterior r(p1, zero);
  CHECK(r.log_ridge_likelihood(Vector::Constant(1, 0.0)) == doctest::Approx(-0.5));
  CHECK(r.log_ridge_likelihood(Vector::Constant(1, 3.0)) == doctest::Approx(-0.5));
  CHECK(r.as_gaussian_model().precision()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("certificate dominates the measured error") {
  const auto prob = linear_gaussian_problem(16, 4, 1, 2, 1.0, 2.0, 1.0, 11);
  const auto post = exact_posterior(prob);
  for (double eps : {0.3, 0.1}) {
    const auto basis = build_basis(exact_diagnostics(prob, post, SamplingMeasure::target), eps);
    CHECK(basis.total_rank() < 64);
    const auto approx = build_ridge_posterior(prob, basis).as_gaussian_model();
    const auto cert = error_certificate(prob, basis, exact_diagnostics(prob, approx, SamplingMeasure::approximation));
    const double err = marginal_w1_gaussian(post, approx).max_w1;
    CHECK(err > 0.0);
    CHECK(cert.value >= err);
  }
}

TEST_CASE("Halton nodes") {
  const Matrix z = gaussian_halton_nodes(4096, 3);
  CHECK(z.rows() == 4096);
  CHECK(z.colwise().mean().cwiseAbs().maxCoeff() < 0.01);
  CHECK((z.array().square().colwise().mean() - 1.0).abs().maxCoeff() < 0.02);
  CHECK(z.allFinite());
}
