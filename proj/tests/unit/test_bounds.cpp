#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "locality_lab/bounds.hpp"

using namespace locality_lab;

TEST_CASE("graphical delta") {
  CHECK(delta_graphical(2, 1, 1, 2).value == doctest::Approx(4.0));
  CHECK(delta_graphical(1, 1, 1, 1).value == doctest::Approx(1.0));
  CHECK(delta_graphical(3, 3, 2, 2).value == doctest::Approx(3.0 * 6.0 / 2.0));
  CHECK_THROWS_AS(delta_graphical(1, 1, 0.0, 1.0), NotLogConcaveError);
}

TEST_CASE("diagonal dominance delta") {
  Matrix m(2, 2);
  m << 2, 1, 1, 2;
  CHECK(delta_diag_dominant(m).value == doctest::Approx(1.0));

  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 0.5, 2;
  const auto b = delta_diag_dominant(d);
  CHECK(b.c == doctest::Approx(0.5));
  CHECK(b.value == doctest::Approx(2.0));
  CHECK(b.worst_row == 1);

  Matrix edge(2, 2);
  edge << 1, 1, 0.5, 2;
  CHECK_THROWS_AS(delta_diag_dominant(edge), DominanceViolation);

  // c also bounds the spectrum of the comparison matrix from below
  const Matrix z = random_dominant_z_matrix(8, 0.3, 5, true);
  CHECK(z.isApprox(z.transpose()));
  const Matrix mag = z.cwiseAbs();
  CHECK(delta_diag_dominant(mag).c >= 0.3 - 1e-12);
  CHECK(gershgorin_lower_bound(mag) >= delta_diag_dominant(mag).c - 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(z);
  CHECK(es.eigenvalues().minCoeff() >= delta_diag_dominant(mag).c - 1e-12);
}

TEST_CASE("dominance matrix of models") {
  const auto gl = gl_chain(5, 1.0, 0.0, 0.6, 1.0);
  const auto dom = dominance_matrix_from_model(gl, Matrix::Zero(1, 5));
  CHECK(dom(1, 2) == doctest::Approx(0.6));
  CHECK(dom(0, 2) == 0.0);

  Matrix P = Matrix::Zero(3, 3);
  P.diagonal() << 1, 2, 3;
  const GaussianModel g(BlockStructure::uniform(3, 1), P, Vector::Zero(3));
  const auto gd = dominance_matrix_from_model(g, Matrix::Zero(1, 3));
  CHECK(gd.diagonal().isApprox(P.diagonal()));
  CHECK((gd - Matrix(gd.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("Poisson tail against the regularized gamma function") {
  CHECK(diffusion_decay_bound(Index{0}, 3.0, 1.0) == 1.0);
  CHECK(diffusion_decay_bound(Index{2}, 0.0, 1.0) == 0.0);
  CHECK(diffusion_decay_bound(HopDistance::infinite(), 5.0, 1.0) == 0.0);
  CHECK(diffusion_decay_bound(Index{2}, 1.0, 1.0) == doctest::Approx(1.0 - 2.0 / std::exp(1.0)));
  for (Index d = 1; d <= 60; d += 7)
    for (double lam : {0.01, 0.5, 3.0, 25.0}) {
      const double oracle = boost::math::gamma_p(static_cast<double>(d), lam);
      CHECK(diffusion_decay_bound(d, lam, 1.0) == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("diffusion lemma") {
  const auto g = banded_graph(6, 1);
  const auto blocks = BlockStructure::uniform(6, 1);
  const MatrixPath scaled = [](double) { return Matrix(2.0 * Matrix::Identity(6, 6)); };
  CHECK(verify_diffusion_lemma(scaled, blocks, g, 2.0, 2.0, 0.01).ok);

  const MatrixPath zero = [](double) { return Matrix(Matrix::Zero(6, 6)); };
  const auto z = verify_diffusion_lemma(zero, blocks, g, 1.0, 1.0, 0.01);
  CHECK(z.ok);
  CHECK(z.raw_margin == doctest::Approx(0.0).epsilon(1e-12));

  const auto rep = verify_diffusion_lemma(random_banded_h_path(16, 1, 2.0, 3),
                                          BlockStructure::uniform(16, 1), banded_graph(16, 1), 2.0, 3.0, 0.005);
  CHECK(rep.ok);
  CHECK(rep.raw_margin >= -1e-6);

  const MatrixPath off_graph = [](double) {
    Matrix h = Matrix::Identity(6, 6);
    h(0, 5) = h(5, 0) = 0.1;
    return h;
  };
  CHECK_THROWS(verify_diffusion_lemma(off_graph, blocks, g, 2.0, 1.0, 0.01));
}

TEST_CASE("Li series bound") {
  const auto geo = li_series_bound_check(0.0, 0.5);
  CHECK(geo.lhs == doctest::Approx(1.0));
  CHECK(geo.rhs == doctest::Approx(1.0));
  CHECK(geo.ok);

  const auto lin = li_series_bound_check(1.0, 0.5);
  CHECK(lin.lhs == doctest::Approx(2.0));
  CHECK(lin.rhs == doctest::Approx(2.0));
  CHECK(lin.integer_t);

  const auto frac = li_series_bound_check(2.5, 0.3);
  double direct = 0.0;
  for (int k = 1; k < 4000; ++k) direct += std::pow(k, 2.5) * std::pow(0.7, k);
  CHECK(frac.lhs == doctest::Approx(direct));
  CHECK(frac.rhs == doctest::Approx(2.0 * std::tgamma(3.5) * std::pow(0.3, -3.5) * 0.7));
  CHECK(frac.ok);

  for (double t : {0.0, 0.7, 1.0, 2.0, 3.3, 5.0})
    for (double x : {0.05, 0.2, 0.5, 0.9}) CHECK(li_series_bound_check(t, x).ok);
}

TEST_CASE("infinity-norm decay") {
  const Matrix eye = Matrix::Identity(4, 4);
  const auto eq = verify_inf_norm_decay(0.7 * eye, eye, 2.0);
  CHECK(eq.ok);
  CHECK(eq.c == doctest::Approx(0.7));
  CHECK(eq.raw_margin == doctest::Approx(0.0).epsilon(1e-9));

  const Matrix z = random_dominant_z_matrix(8, 0.5, 12);
  CHECK(verify_inf_norm_decay(z, Matrix::Identity(8, 8), 4.0).ok);
}

TEST_CASE("square-root row decay") {
  const auto id = GaussianModel::standard(BlockStructure::uniform(5, 1));
  const auto r = sqrt_row_decay_check(id, 2.0, 1);
  CHECK(r.max_row_sum == doctest::Approx(1.0));
  CHECK(r.ok);

  Matrix P = Matrix::Zero(3, 3);
  P.diagonal() << 4.0, 1.0, 0.25;
  const GaussianModel diag(BlockStructure::uniform(3, 1), P, Vector::Zero(3));
  const auto d = sqrt_row_decay_check(diag, 1.0, 1);
  CHECK(d.max_row_sum == doctest::Approx(2.0));
  CHECK(d.max_row_sum <= 1.0 / std::sqrt(0.25) + 1e-12);

  const auto band = gaussian_from_banded_precision(BlockStructure::uniform(32, 1), 1, 1.0, 2.0, 6);
  CHECK(sqrt_row_decay_check(band, 2.0, 1, 1.0, 2.0).ok);
}
