#pragma once

#include <compare>
#include <optional>
#include <utility>
#include <vector>

#include "locality_lab/types.hpp"

namespace locality_lab {

// Hop count on a graph; disconnected pairs carry an explicit infinite value.
class HopDistance {
 public:
  constexpr HopDistance() = default;
  constexpr explicit HopDistance(Index hops) : hops_(hops), finite_(true) {}
  static constexpr HopDistance infinite() { return HopDistance{}; }

  constexpr bool is_finite() const { return finite_; }
  // Throws std::logic_error when infinite.
  Index value() const;

  friend constexpr bool operator==(const HopDistance&, const HopDistance&) = default;
  friend constexpr std::strong_ordering operator<=>(const HopDistance& a, const HopDistance& b) {
    if (a.finite_ != b.finite_) return a.finite_ ? std::strong_ordering::less : std::strong_ordering::greater;
    if (!a.finite_) return std::strong_ordering::equal;
    return a.hops_ <=> b.hops_;
  }
  friend HopDistance operator+(const HopDistance& a, const HopDistance& b) {
    if (!a.finite_ || !b.finite_) return infinite();
    return HopDistance(a.hops_ + b.hops_);
  }

 private:
  Index hops_ = 0;
  bool finite_ = false;
};

// Undirected graph over blocks. Every vertex carries a self-loop and the
// adjacency lists are sorted and symmetric.
class DependencyGraph {
 public:
  // Validates symmetry; inserts missing self-loops.
  static DependencyGraph from_adjacency(std::vector<std::vector<Index>> adjacency);
  // Symmetrizes the edge list and adds self-loops.
  static DependencyGraph from_edges(Index num_vertices, const std::vector<std::pair<Index, Index>>& edges);

  Index num_vertices() const { return adjacency_.size(); }
  const std::vector<Index>& neighbors(Index j) const;
  const std::vector<std::vector<Index>>& adjacency() const { return adjacency_; }
  bool adjacent(Index j, Index k) const;
  // Number of edges between distinct vertices.
  Index num_edges() const;

  // Breadth-first distances from j to every vertex.
  std::vector<HopDistance> distances_from(Index j) const;
  // Largest finite eccentricity (0 for a single vertex).
  Index diameter() const;

  friend bool operator==(const DependencyGraph&, const DependencyGraph&) = default;

 private:
  DependencyGraph() = default;
  void check_vertex(Index j) const;

  std::vector<std::vector<Index>> adjacency_;
};

HopDistance graph_distance(const DependencyGraph& g, Index j, Index k);
std::vector<std::vector<HopDistance>> all_pairs_distances(const DependencyGraph& g);

// {k : d_G(j,k) <= q}, sorted.
std::vector<Index> q_neighborhood(const DependencyGraph& g, Index j, Index q);

// Edges between vertices with |j - k| <= bandwidth.
DependencyGraph banded_graph(Index num_vertices, Index bandwidth);
// Finite nu-dimensional grid with nearest-neighbor (von Neumann) edges;
// vertex index is row-major over `sides`.
DependencyGraph lattice_graph(const std::vector<Index>& sides);
DependencyGraph complete_graph(Index num_vertices);
DependencyGraph edgeless_graph(Index num_vertices);

struct LocalityWitness {
  Index vertex;
  Index radius;
  Index neighborhood_size;
};

struct LocalityViolation {
  Index vertex;
  Index radius;
  Index neighborhood_size;
  double allowed;  // 1 + S q^nu
};

struct LocalityCertificate {
  bool certified = false;
  double S = 0.0;
  int nu = 1;
  Index valid_up_to_radius = 0;
  // Pairs (vertex, radius) attaining the smallest slack 1 + S q^nu - |N_j^q|.
  std::vector<LocalityWitness> witnesses;
  double min_slack = 0.0;
  // First violating radius of each violating vertex, ordered by vertex.
  std::vector<LocalityViolation> violations;

  const LocalityViolation* first_violation() const {
    return violations.empty() ? nullptr : &violations.front();
  }
};

// Checks |N_j^q| <= 1 + S q^nu for every vertex and 1 <= q <= q_max.
// q_max defaults to the graph diameter (at least 1).
LocalityCertificate certify_locality(const DependencyGraph& g, double S, int nu,
                                     std::optional<Index> q_max = std::nullopt);

}  // namespace locality_lab
