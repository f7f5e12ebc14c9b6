#include <doctest.h>

#include <cmath>

#include "locality_lab/linalg.hpp"
#include "locality_lab/models.hpp"
#include "locality_lab/rng.hpp"

using namespace locality_lab;

namespace {

Vector fd_gradient(const BlockedDensityModel& m, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector p = x, q = x;
    p[i] += h;
    q[i] -= h;
    g[i] = (m.log_density(p) - m.log_density(q)) / (2 * h);
  }
  return g;
}

Matrix fd_hessian(const BlockedDensityModel& m, const Vector& x, double h = 1e-5) {
  Matrix H(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector p = x, q = x;
    p[i] += h;
    q[i] -= h;
    H.col(i) = (m.score(p) - m.score(q)) / (2 * h);
  }
  return H;
}

}  // namespace

TEST_CASE("GL chain derivatives match finite differences") {
  GinzburgLandauChain gl(6, 0.7, 1.2, {0.5, 1.0, 1.5, 0.3, 0.8}, 0.4);
  Philox rng(2, 0);
  for (int trial = 0; trial < 4; ++trial) {
    const Vector x = rng.normal_vector(6);
    CHECK((gl.score(x) - fd_gradient(gl, x)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((gl.hessian(x) - fd_hessian(gl, x)).cwiseAbs().maxCoeff() < 1e-5);
    for (Index j = 0; j < 6; ++j) CHECK(gl.block_score(x, j)[0] == doctest::Approx(gl.score(x)[j]));
    CHECK((Matrix(gl.sparse_hessian(x)) - gl.hessian(x)).norm() < 1e-12);
  }
}

TEST_CASE("GL chain special cases") {
  // lambda = 0: Gaussian with tridiagonal precision, linear score
  const auto gauss = gl_chain(5, 0.0, 1.0, 1.0, 0.5);
  CHECK(gauss.has_constant_hessian());
  const Vector x = Vector::LinSpaced(5, -1.0, 1.0);
  Matrix P = Matrix::Zero(5, 5);
  for (Index j = 0; j < 5; ++j) P(j, j) = 0.5;
  for (Index j = 0; j + 1 < 5; ++j) {
    P(j, j) += 1.0;
    P(j + 1, j + 1) += 1.0;
    P(j, j + 1) = P(j + 1, j) = -1.0;
  }
  CHECK((gauss.score(x) + P * x).norm() < 1e-12);

  // odd score vanishes at the origin
  const auto gl = gl_chain(5, 1.0, 1.5, 1.0);
  CHECK(gl.score(Vector::Zero(5)).norm() == 0.0);
  // not log-concave at the origin when m != 0
  const auto [lo, hi] = convexity_bounds(gl, Matrix::Zero(1, 5));
  CHECK(lo < 0.0);
  CHECK(hi > lo);
}

TEST_CASE("banded Gaussian precision") {
  const auto blocks = BlockStructure::uniform(12, 2);
  const auto g = gaussian_from_banded_precision(blocks, 2, 0.5, 3.0, 9);
  const auto [lo, hi] = linalg::spectral_range(g.precision());
  CHECK(lo >= 0.5 - 1e-9);
  CHECK(hi <= 3.0 + 1e-9);
  CHECK(g.graph() == banded_graph(12, 2));
  CHECK(graph_from_block_sparsity(blocks, g.precision(), 1e-12) == banded_graph(12, 2));
  CHECK((g.covariance() * g.precision() - Matrix::Identity(24, 24)).norm() < 1e-9);
  CHECK((g.sqrt_covariance() * g.sqrt_covariance() - g.covariance()).norm() < 1e-9);

  const auto diag = gaussian_from_banded_precision(blocks, 0, 1.0, 2.0, 3);
  CHECK(diag.graph().num_edges() == 0);

  const auto id = GaussianModel::standard(BlockStructure::uniform(3, 1));
  CHECK(id.covariance().isIdentity());
  CHECK(id.sqrt_covariance().isIdentity());
}

TEST_CASE("convexity bounds and graph extraction") {
  Matrix P = Matrix::Zero(2, 2);
  P.diagonal() << 1, 2;
  const GaussianModel g(BlockStructure::uniform(2, 1), P, Vector::Zero(2));
  const auto [lo, hi] = convexity_bounds(g, Matrix::Zero(1, 2));
  CHECK(lo == doctest::Approx(1.0));
  CHECK(hi == doctest::Approx(2.0));
  CHECK(extract_graph(g, 1e-12, Matrix::Zero(1, 2)).num_edges() == 0);

  const auto gl = gl_chain(6, 1.0, 0.0, 0.7);
  Philox rng(1, 0);
  Matrix probes(3, 6);
  for (Eigen::Index i = 0; i < 3; ++i) probes.row(i) = rng.normal_vector(6).transpose();
  CHECK(extract_graph(gl, 1e-12, probes) == banded_graph(6, 1));

  Matrix dense = Matrix::Constant(2, 2, 0.3);
  dense.diagonal().setConstant(1.0);
  CHECK_THROWS_AS(GaussianModel(BlockStructure::uniform(2, 1), dense, Vector::Zero(2), edgeless_graph(2)),
                  std::invalid_argument);
}

TEST_CASE("Gaussian exact sampling moments") {
  const auto blocks = BlockStructure::uniform(4, 1);
  const auto g = gaussian_from_banded_precision(blocks, 1, 1.0, 2.0, 4);
  const Matrix s = g.sample(40000, 17);
  const Vector mean = s.colwise().mean();
  const Matrix centered = s.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(s.rows() - 1);
  CHECK(mean.cwiseAbs().maxCoeff() < 0.03);
  CHECK((cov - g.covariance()).cwiseAbs().maxCoeff() < 0.03);
  CHECK(g.sample(5, 17) == g.sample(5, 17));
}

TEST_CASE("matrix exponential") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << -1, 0.5, 2;
  const Matrix e = linalg::expm(d);
  for (int i = 0; i < 3; ++i) CHECK(e(i, i) == doctest::Approx(std::exp(d(i, i))));

  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  const Matrix r = linalg::expm(rot);
  CHECK(r(0, 0) == doctest::Approx(std::cos(1.0)));
  CHECK(r(1, 0) == doctest::Approx(std::sin(1.0)));
}
