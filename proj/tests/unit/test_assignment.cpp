#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "locality_lab/assignment.hpp"
#include "locality_lab/rng.hpp"

using namespace locality_lab;

TEST_CASE("assignment matches brute force over permutations") {
  Philox rng(5, 0);
  for (Index n = 1; n <= 7; ++n) {
    Matrix cost(n, n);
    for (Eigen::Index q = 0; q < cost.size(); ++q) cost.data()[q] = rng.uniform() * 10.0;

    std::vector<Index> perm(n);
    std::iota(perm.begin(), perm.end(), Index{0});
    double best = 1e300;
    do {
      double c = 0.0;
      for (Index i = 0; i < n; ++i) c += cost(i, perm[i]);
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));

    const auto a = solve_assignment(cost);
    CHECK(a.cost == doctest::Approx(best).epsilon(1e-12));
    std::vector<Index> seen = a.match;
    std::sort(seen.begin(), seen.end());
    for (Index i = 0; i < n; ++i) CHECK(seen[i] == i);
  }
}

TEST_CASE("empirical W1 by assignment") {
  Matrix a(3, 2);
  a << 0, 0, 1, 0, 0, 1;
  CHECK(empirical_w1_assignment(a, a) == doctest::Approx(0.0));

  Matrix shifted = a;
  shifted.col(0).array() += 2.0;
  CHECK(empirical_w1_assignment(a, shifted) == doctest::Approx(2.0));

  CHECK_THROWS(solve_assignment(Matrix(2, 3)));
}
