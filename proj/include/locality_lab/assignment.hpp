#pragma once

#include <vector>

#include "locality_lab/types.hpp"

namespace locality_lab {

struct Assignment {
  // row i is matched to column match[i]
  std::vector<Index> match;
  double cost = 0.0;
};

// Minimum-cost perfect matching for a square cost matrix (shortest
// augmenting paths with potentials, O(n^3)).
Assignment solve_assignment(const Matrix& cost);

// Exact W1 between two equal-size empirical measures (one point per row)
// under the Euclidean ground cost.
double empirical_w1_assignment(const Matrix& a, const Matrix& b);

}  // namespace locality_lab
