#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <vector>

#include "locality_lab/metrics.hpp"
#include "locality_lab/rng.hpp"

using namespace locality_lab;

namespace {

std::vector<double> normals(Index n, double mu, double sigma, std::uint64_t seed) {
  Philox rng(seed, 0);
  std::vector<double> v(n);
  for (auto& x : v) x = mu + sigma * rng.normal();
  return v;
}

// int_0^1 |F_a^{-1}(u) - F_b^{-1}(u)| du by adaptive quadrature.
double quantile_w1(double mu1, double s1, double mu2, double s2) {
  boost::math::normal_distribution<> a(mu1, s1), b(mu2, s2);
  auto f = [&](double u) { return std::abs(quantile(a, u) - quantile(b, u)); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 1e-15, 1.0 - 1e-15, 15, 1e-12);
}

}  // namespace

TEST_CASE("empirical 1D W1") {
  const auto a = normals(500, 0.0, 1.0, 1);
  CHECK(empirical_w1_1d(a, a) == 0.0);
  CHECK(empirical_w1_1d(std::vector<double>(7, 0.0), std::vector<double>(5, -2.5)) == doctest::Approx(2.5));

  const auto b = normals(300, 0.3, 2.0, 2);
  const auto c = normals(400, -1.0, 0.5, 3);
  CHECK(empirical_w1_1d(a, b) == doctest::Approx(empirical_w1_1d(b, a)));
  CHECK(empirical_w1_1d(a, c) <= empirical_w1_1d(a, b) + empirical_w1_1d(b, c) + 1e-12);

  std::vector<double> shifted = a;
  for (auto& x : shifted) x += 0.75;
  CHECK(empirical_w1_1d(a, shifted) == doctest::Approx(0.75));

  const Index n = 100000;
  const double w = empirical_w1_1d(normals(n, 0.0, 1.0, 4), normals(n, 0.4, 1.0, 5));
  CHECK(std::abs(w - 0.4) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("Gaussian 1D W1 matches quantile quadrature") {
  const double cases[][4] = {{0, 1, 0, 1}, {0, 1, 0.5, 1}, {0, 1, 0, 2}, {1, 0.3, -0.4, 1.7}, {2, 1.1, 2.1, 0.9}};
  for (const auto& c : cases)
    CHECK(gaussian_w1_1d(c[0], c[1], c[2], c[3]) == doctest::Approx(quantile_w1(c[0], c[1], c[2], c[3])).epsilon(1e-8));
  CHECK(folded_normal_mean(0.0, 1.0) == doctest::Approx(std::sqrt(2.0 / M_PI)));
  CHECK(folded_normal_mean(3.0, 0.0) == doctest::Approx(3.0));
}

TEST_CASE("Gaussian W2 bounds the marginal W1") {
  Vector mu1(2), mu2(2);
  mu1 << 0, 1;
  mu2 << 0.5, 0.5;
  Matrix c1(2, 2), c2(2, 2);
  c1 << 1, 0.3, 0.3, 2;
  c2 << 1.5, -0.2, -0.2, 0.7;
  const double w2 = gaussian_w2(mu1, c1, mu2, c2);
  CHECK(gaussian_w2(mu1, c1, mu1, c1) == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(w2 == doctest::Approx(gaussian_w2(mu2, c2, mu1, c1)));
  for (int i = 0; i < 2; ++i)
    CHECK(gaussian_w1_1d(mu1[i], std::sqrt(c1(i, i)), mu2[i], std::sqrt(c2(i, i))) <= w2 + 1e-12);
}

TEST_CASE("score discrepancy") {
  const auto blocks = BlockStructure::uniform(1, 1);
  const auto pi = GaussianModel::standard(blocks);
  const double eps = 0.3;
  const GaussianModel prime(blocks, Matrix::Constant(1, 1, 1.0 + eps), Vector::Zero(1));
  const Matrix s = pi.sample(200000, 8);
  const auto d = score_discrepancy(pi, prime, s);
  CHECK(std::abs(d.max_l1 - eps * std::sqrt(2.0 / M_PI)) < 3.0 * d.mc_standard_errors[0]);
  CHECK(score_discrepancy(pi, pi, s).max_l1 == 0.0);

  Matrix P = Matrix::Identity(4, 4);
  Matrix Q = P;
  Q(2, 2) = 1.5;
  const GaussianModel a(BlockStructure::uniform(4, 1), P, Vector::Zero(4));
  const GaussianModel b(BlockStructure::uniform(4, 1), Q, Vector::Zero(4));
  const auto local = score_discrepancy(a, b, a.sample(100, 1));
  for (Index j = 0; j < 4; ++j) CHECK((local.per_block_l1[j] > 0.0) == (j == 2));
}

TEST_CASE("marginal inequality on Gaussian pairs") {
  const auto blocks = BlockStructure::uniform(32, 1);
  const auto pi = gaussian_from_banded_precision(blocks, 1, 1.0, 2.0, 21);
  const auto same = verify_marginal_inequality(pi, pi, delta_graphical(2, 1, 1, 2), 2000, 3);
  CHECK(same.pass);
  CHECK(same.lhs == doctest::Approx(0.0));
  CHECK(same.rhs == 0.0);

  Matrix P = pi.precision();
  P(7, 7) += 0.5;
  const GaussianModel prime(blocks, P, Vector::Zero(32), pi.graph());
  const auto delta = delta_graphical(2, 1, prime.min_eigenvalue(), prime.max_eigenvalue());
  const auto rep = verify_marginal_inequality(pi, prime, delta, 4000, 5);
  CHECK(rep.pass);
  CHECK(rep.slack > 0.0);
  CHECK(rep.lhs_method == W1Method::gaussian_exact);

  const auto multi = verify_multiblock_inequality(pi, prime, delta, {6, 7}, 400, 6);
  CHECK(multi.pass);
  CHECK(multi.lhs_method == W1Method::assignment);
}
