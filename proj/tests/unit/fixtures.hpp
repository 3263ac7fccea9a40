#pragma once

#include <random>
#include <vector>

#include "wormnet/graph.hpp"
#include "wormnet/status.hpp"

namespace wormnet::testing {

// Three nodes, two worms: 0 -> 2 and 1 -> 2 feed node 2.
inline WsnGraph g3(double w12_worm2 = 0.7) {
  return WsnGraph(3, 2, {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.6}},
                  {Edge{0, 2, {0.6, 0.5}}, Edge{1, 2, {0.4, w12_worm2}}});
}

inline InfectionState g3_initial() { return InfectionState({1, 2, 0}, 2); }

// Random digraph with U[0,1] thresholds and U[0, wmax] weights.
template <typename Rng>
WsnGraph random_graph(std::size_t n, std::size_t k, double p, Rng& rng, double wmax = 1.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> th(n, std::vector<double>(k));
  for (auto& row : th)
    for (auto& t : row) t = unit(rng);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = 0; v < n; ++v)
      if (u != v && unit(rng) < p) {
        Edge e{u, v, std::vector<double>(k)};
        for (auto& w : e.weights) w = wmax * unit(rng);
        edges.push_back(std::move(e));
      }
  return WsnGraph(n, k, std::move(th), std::move(edges));
}

// Random digraph whose weights and thresholds are drawn from a tiny lattice
// {0, 0.25, 0.5}, so equal sums, zero thresholds and zero weights are common.
template <typename Rng>
WsnGraph degenerate_graph(std::size_t n, std::size_t k, double p, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> lattice(0, 2);
  std::vector<std::vector<double>> th(n, std::vector<double>(k));
  for (auto& row : th)
    for (auto& t : row) t = 0.25 * lattice(rng);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = 0; v < n; ++v)
      if (u != v && unit(rng) < p) {
        Edge e{u, v, std::vector<double>(k)};
        for (auto& w : e.weights) w = 0.25 * lattice(rng);
        edges.push_back(std::move(e));
      }
  return WsnGraph(n, k, std::move(th), std::move(edges));
}

}  // namespace wormnet::testing
