#include <doctest.h>

#include <cmath>

#include "locality_lab/score_matching.hpp"

using namespace locality_lab;

TEST_CASE("local loss basics") {
  const ScoreHypothesis hyp(edgeless_graph(1), Dictionary::quadratic);
  const auto g = GaussianModel::standard(BlockStructure::uniform(1, 1));
  const Matrix x = g.sample(50000, 3);
  CHECK(local_loss_j(hyp, Vector::Zero(hyp.num_params()), x, 0) == 0.0);

  // features (x, -x^2/2) with theta = (0, t) give s = -t x: J = -2t + t^2 mean(x^2)
  const double m2 = x.col(0).squaredNorm() / static_cast<double>(x.rows());
  Vector theta(2);
  theta << 0.0, 0.7;
  CHECK(local_loss_j(hyp, theta, x, 0) == doctest::Approx(-2 * 0.7 + 0.49 * m2));

  const auto q = local_quadratics(hyp, x);
  CHECK(local_loss_j(hyp, q[0], theta, 0) == doctest::Approx(local_loss_j(hyp, theta, x, 0)));

  // single block: the saddle fit is classical score matching
  const auto rep = fit(hyp, x);
  const Vector summed = fit_summed(hyp, q);
  CHECK((rep.theta - summed).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(rep.theta[1] == doctest::Approx(1.0).epsilon(0.03));

  const auto lam = lambda_lower_bounds(hyp, x);
  CHECK(lam[0] == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("losses are convex quadratics local to the neighborhood") {
  const auto truth = gaussian_chain(6, 2.0, -0.8);
  const ScoreHypothesis hyp(banded_graph(6, 1), Dictionary::quadratic);
  const Matrix x = truth.sample(2000, 4);
  const auto q = local_quadratics(hyp, x);
  for (Index j = 0; j < 6; ++j) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(q[j].A);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }

  // perturbing parameters outside N_j leaves J_j unchanged
  Vector theta = hyp.theta_from_gaussian(truth);
  const double before = local_loss_j(hyp, theta, x, 0);
  const auto [lo, hi] = hyp.clique_params(4);
  for (Index p = lo; p < hi; ++p) theta[p] += 1.0;
  CHECK(local_loss_j(hyp, theta, x, 0) == doctest::Approx(before));
}

TEST_CASE("Gaussian parameters round trip") {
  const auto truth = gaussian_chain(5, 2.0, -0.8);
  const ScoreHypothesis hyp(banded_graph(5, 1), Dictionary::quadratic);
  const auto back = hyp.to_gaussian(hyp.theta_from_gaussian(truth));
  CHECK((back.precision() - truth.precision()).norm() < 1e-12);
  CHECK(back.mean().norm() < 1e-12);

  const auto model = hyp.to_model(hyp.theta_from_gaussian(truth));
  const Vector x = Vector::LinSpaced(5, -1, 2);
  CHECK((model->score(x) - truth.score(x)).norm() < 1e-12);
}

TEST_CASE("integration by parts identity") {
  const auto truth = gaussian_chain(6, 2.0, -0.8);
  const ScoreHypothesis hyp(banded_graph(6, 1), Dictionary::quadratic);
  Vector theta = hyp.theta_from_gaussian(truth);
  theta.array() += 0.1;
  const auto check = integration_by_parts_check(hyp, theta, truth, truth.sample(20000, 9));
  CHECK(std::abs(check.residual) < 4.0 * check.standard_error);
}

TEST_CASE("fit recovers a chain precision") {
  const auto truth = gaussian_chain(8, 2.0, -0.8);
  const ScoreHypothesis hyp(banded_graph(8, 1), Dictionary::quadratic);
  const auto rep = fit(hyp, truth.sample(10000, 12));
  const Matrix err = hyp.to_gaussian(rep.theta).precision() - truth.precision();
  CHECK(err.cwiseAbs().maxCoeff() < 0.05 * truth.precision().cwiseAbs().maxCoeff());
  CHECK(rep.argmax_block < 8);
}

TEST_CASE("dictionary names") {
  CHECK(dictionary_from_string("quartic") == Dictionary::quartic);
  CHECK(dictionary_from_string(to_string(Dictionary::quadratic)) == Dictionary::quadratic);
  CHECK_THROWS(dictionary_from_string("cubic"));
}
