#include "locality_lab/locality_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

namespace locality_lab {

Index HopDistance::value() const {
  if (!finite_) throw std::logic_error("distance is infinite");
  return hops_;
}

DependencyGraph DependencyGraph::from_adjacency(std::vector<std::vector<Index>> adjacency) {
  if (adjacency.empty()) throw std::invalid_argument("graph needs at least one vertex");
  const Index b = adjacency.size();
  for (Index j = 0; j < b; ++j) {
    auto& nb = adjacency[j];
    for (Index k : nb)
      if (k >= b) throw std::invalid_argument("neighbor index " + std::to_string(k) + " out of range");
    nb.push_back(j);
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  for (Index j = 0; j < b; ++j)
    for (Index k : adjacency[j])
      if (!std::binary_search(adjacency[k].begin(), adjacency[k].end(), j))
        throw std::invalid_argument("adjacency is not symmetric at (" + std::to_string(j) + "," +
                                    std::to_string(k) + ")");
  DependencyGraph g;
  g.adjacency_ = std::move(adjacency);
  return g;
}

DependencyGraph DependencyGraph::from_edges(Index num_vertices,
                                            const std::vector<std::pair<Index, Index>>& edges) {
  if (num_vertices == 0) throw std::invalid_argument("graph needs at least one vertex");
  std::vector<std::vector<Index>> adj(num_vertices);
  for (auto [j, k] : edges) {
    if (j >= num_vertices || k >= num_vertices) throw std::invalid_argument("edge endpoint out of range");
    adj[j].push_back(k);
    adj[k].push_back(j);
  }
  return from_adjacency(std::move(adj));
}

void DependencyGraph::check_vertex(Index j) const {
  if (j >= adjacency_.size())
    throw std::out_of_range("vertex " + std::to_string(j) + " out of range");
}

const std::vector<Index>& DependencyGraph::neighbors(Index j) const {
  check_vertex(j);
  return adjacency_[j];
}

bool DependencyGraph::adjacent(Index j, Index k) const {
  check_vertex(j);
  check_vertex(k);
  return std::binary_search(adjacency_[j].begin(), adjacency_[j].end(), k);
}

Index DependencyGraph::num_edges() const {
  Index total = 0;
  for (const auto& nb : adjacency_) total += nb.size() - 1;
  return total / 2;
}

std::vector<HopDistance> DependencyGraph::distances_from(Index j) const {
  check_vertex(j);
  std::vector<HopDistance> dist(adjacency_.size(), HopDistance::infinite());
  std::deque<Index> queue{j};
  dist[j] = HopDistance(0);
  while (!queue.empty()) {
    const Index v = queue.front();
    queue.pop_front();
    const Index next = dist[v].value() + 1;
    for (Index w : adjacency_[v]) {
      if (!dist[w].is_finite()) {
        dist[w] = HopDistance(next);
        queue.push_back(w);
      }
    }
  }
  return dist;
}

Index DependencyGraph::diameter() const {
  Index best = 0;
  for (Index j = 0; j < adjacency_.size(); ++j)
    for (const auto& d : distances_from(j))
      if (d.is_finite()) best = std::max(best, d.value());
  return best;
}

HopDistance graph_distance(const DependencyGraph& g, Index j, Index k) {
  if (k >= g.num_vertices()) throw std::out_of_range("vertex " + std::to_string(k) + " out of range");
  return g.distances_from(j)[k];
}

std::vector<std::vector<HopDistance>> all_pairs_distances(const DependencyGraph& g) {
  std::vector<std::vector<HopDistance>> out;
  out.reserve(g.num_vertices());
  for (Index j = 0; j < g.num_vertices(); ++j) out.push_back(g.distances_from(j));
  return out;
}

std::vector<Index> q_neighborhood(const DependencyGraph& g, Index j, Index q) {
  const auto dist = g.distances_from(j);
  std::vector<Index> out;
  for (Index k = 0; k < dist.size(); ++k)
    if (dist[k].is_finite() && dist[k].value() <= q) out.push_back(k);
  return out;
}

DependencyGraph banded_graph(Index num_vertices, Index bandwidth) {
  if (num_vertices == 0) throw std::invalid_argument("graph needs at least one vertex");
  std::vector<std::vector<Index>> adj(num_vertices);
  for (Index j = 0; j < num_vertices; ++j) {
    const Index lo = j >= bandwidth ? j - bandwidth : 0;
    const Index hi = std::min(num_vertices - 1, j + bandwidth);
    for (Index k = lo; k <= hi; ++k) adj[j].push_back(k);
  }
  return DependencyGraph::from_adjacency(std::move(adj));
}

DependencyGraph lattice_graph(const std::vector<Index>& sides) {
  if (sides.empty()) throw std::invalid_argument("lattice needs at least one dimension");
  Index n = 1;
  for (Index s : sides) {
    if (s == 0) throw std::invalid_argument("lattice side must be positive");
    n *= s;
  }
  // row-major strides: last coordinate varies fastest
  std::vector<Index> stride(sides.size(), 1);
  for (Index a = sides.size() - 1; a > 0; --a) stride[a - 1] = stride[a] * sides[a];
  std::vector<std::pair<Index, Index>> edges;
  for (Index v = 0; v < n; ++v) {
    for (Index a = 0; a < sides.size(); ++a) {
      const Index coord = (v / stride[a]) % sides[a];
      if (coord + 1 < sides[a]) edges.emplace_back(v, v + stride[a]);
    }
  }
  return DependencyGraph::from_edges(n, edges);
}

DependencyGraph complete_graph(Index num_vertices) {
  std::vector<std::vector<Index>> adj(num_vertices);
  for (auto& nb : adj) {
    nb.resize(num_vertices);
    std::iota(nb.begin(), nb.end(), Index{0});
  }
  return DependencyGraph::from_adjacency(std::move(adj));
}

DependencyGraph edgeless_graph(Index num_vertices) { return banded_graph(num_vertices, 0); }

LocalityCertificate certify_locality(const DependencyGraph& g, double S, int nu,
                                     std::optional<Index> q_max) {
  if (!(S >= 0.0) || !std::isfinite(S)) throw std::invalid_argument("S must be a finite nonnegative number");
  if (nu < 1) throw std::invalid_argument("nu must be at least 1");
  if (q_max && *q_max < 1) throw std::invalid_argument("q_max must be at least 1");
  const Index radius = q_max ? *q_max : std::max<Index>(1, g.diameter());

  LocalityCertificate cert;
  cert.S = S;
  cert.nu = nu;
  cert.valid_up_to_radius = radius;
  cert.min_slack = std::numeric_limits<double>::infinity();

  // Relative tolerance for the tightness test only; the bound itself is exact.
  constexpr double kTightTol = 1e-12;
  for (Index j = 0; j < g.num_vertices(); ++j) {
    const auto dist = g.distances_from(j);
    // counts[q] = #{k : d(j,k) == q}
    std::vector<Index> counts(radius + 1, 0);
    for (const auto& d : dist)
      if (d.is_finite() && d.value() <= radius) ++counts[d.value()];
    Index size = counts[0];
    bool violated = false;
    for (Index q = 1; q <= radius; ++q) {
      size += counts[q];
      const double allowed = 1.0 + S * std::pow(static_cast<double>(q), nu);
      const double slack = allowed - static_cast<double>(size);
      if (slack < 0.0) {
        if (!violated) cert.violations.push_back({j, q, size, allowed});
        violated = true;
        continue;
      }
      if (slack < cert.min_slack - kTightTol * allowed) {
        cert.min_slack = slack;
        cert.witnesses.clear();
      }
      if (std::abs(slack - cert.min_slack) <= kTightTol * allowed) cert.witnesses.push_back({j, q, size});
    }
  }
  cert.certified = cert.violations.empty();
  return cert;
}

}  // namespace locality_lab
