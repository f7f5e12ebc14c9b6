#include <doctest.h>

#include <cmath>

#include "locality_lab/langevin.hpp"
#include "locality_lab/linalg.hpp"

using namespace locality_lab;

TEST_CASE("Langevin on N(0,1) reaches unit variance") {
  const auto g = GaussianModel::standard(BlockStructure::uniform(1, 1));
  LangevinConfig cfg;
  cfg.step_size = 0.01;
  cfg.num_steps = 200000;
  cfg.burn_in = 1000;
  cfg.thin = 50;
  cfg.seed = 4;
  const Matrix s = draw_samples(g, Vector::Zero(1), cfg);
  const double n = static_cast<double>(s.rows());
  const double var = s.col(0).squaredNorm() / n;
  // OU with step h has stationary variance 1 / (1 - h/2); E x^4 = 3 gives SE sqrt(2/n)
  CHECK(std::abs(var - 1.0 / (1.0 - cfg.step_size / 2)) < 3.0 * std::sqrt(2.0 / n) + 1e-3);
}

TEST_CASE("Langevin paths are reproducible per stream") {
  const auto gl = gl_chain(4, 1.0, 0.5, 0.8, 0.5);
  LangevinConfig cfg;
  cfg.num_steps = 50;
  cfg.seed = 9;
  cfg.num_chains = 3;
  const auto a = simulate_chains(gl, Vector::Zero(4), cfg);
  const auto b = simulate_chains(gl, Vector::Zero(4), cfg);
  for (Index c = 0; c < 3; ++c) CHECK(a[c].states.back() == b[c].states.back());
  CHECK(simulate(gl, Vector::Zero(4), cfg, 2).states.back() == a[2].states.back());
  CHECK(a[0].states.back() != a[1].states.back());

  cfg.step_size = -1.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("Gaussian Jacobian follows the matrix exponential") {
  const auto blocks = BlockStructure::uniform(4, 1);
  const auto g = gaussian_from_banded_precision(blocks, 1, 1.0, 2.0, 8);
  LangevinConfig cfg;
  cfg.step_size = 1e-4;
  cfg.num_steps = 10000;
  cfg.propagate_jacobian = true;
  const auto path = simulate(g, Vector::Zero(4), cfg);
  const Matrix exact = linalg::expm(-g.precision() * 1.0);
  CHECK((path.jacobian->back() - exact).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("Stein estimates on Gaussians") {
  SteinConfig cfg;
  cfg.langevin.step_size = 0.005;
  cfg.langevin.num_steps = 10'000'000;
  cfg.langevin.num_chains = 8;
  cfg.decay_rate = 1.0;

  // N(0, I): u = -x_i solves the Stein equation, so the gradient norm is 1
  const auto id = GaussianModel::standard(BlockStructure::uniform(3, 1));
  const auto est = stein_gradient_estimate(id, 1, coordinate_projection(0), Matrix::Zero(1, 3), cfg);
  CHECK(est.sum == doctest::Approx(1.0).epsilon(0.05));
  // independent blocks do not propagate
  CHECK(est.per_block_sup[0] == doctest::Approx(0.0));
  CHECK(est.per_block_sup[2] == doctest::Approx(0.0));

  // diagonal precision: int e^{-lambda t} dt = 1 / lambda
  Matrix P = Matrix::Zero(3, 3);
  P.diagonal() << 1.0, 2.0, 4.0;
  const GaussianModel diag(BlockStructure::uniform(3, 1), P, Vector::Zero(3));
  const auto e = empirical_delta(diag, Matrix::Zero(1, 3), {}, cfg);
  CHECK(e.value == doctest::Approx(1.0).epsilon(0.05));
  CHECK(e.argmax_block == 0);
  CHECK(e.per_block_sums[2] == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("test functions are 1-Lipschitz") {
  Vector x(2);
  x << 0.3, -0.7;
  for (const auto& f : standard_test_functions(3)) CHECK(f.gradient(x).norm() <= 1.0 + 1e-12);
  CHECK(coordinate_projection(1).value(x) == doctest::Approx(-0.7));
}
