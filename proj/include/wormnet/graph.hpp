#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "wormnet/error.hpp"

namespace wormnet {

using NodeId = std::size_t;

// True when k is 2^P for some P >= 1.
constexpr bool is_power_of_two_worms(std::size_t k) noexcept {
  return k >= 2 && (k & (k - 1)) == 0;
}

constexpr std::size_t log2_worms(std::size_t k) noexcept {
  std::size_t p = 0;
  while ((std::size_t{1} << p) < k) ++p;
  return p;
}

/// Worm label in [1, K].
class WormIndex {
 public:
  WormIndex(int value, std::size_t worm_count) : value_(value) {
    if (value < 1 || static_cast<std::size_t>(value) > worm_count)
      throw InvalidLabelError("worm index " + std::to_string(value) + " outside [1, " +
                              std::to_string(worm_count) + "]");
  }
  int value() const noexcept { return value_; }
  friend auto operator<=>(const WormIndex&, const WormIndex&) = default;

 private:
  int value_;
};

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  std::vector<double> weights;  // one per worm
};

/// Directed sensor graph with per-worm node thresholds and per-worm edge
/// weights. Edges are kept sorted by (dst, src); in-neighbour lists are sorted
/// by source id so every weighted sum visits sources in ascending order.
class WsnGraph {
 public:
  WsnGraph() = default;

  WsnGraph(std::size_t node_count, std::size_t worm_count,
           std::vector<std::vector<double>> thresholds, std::vector<Edge> edges)
      : n_(node_count), k_(worm_count), thresholds_(std::move(thresholds)), edges_(std::move(edges)) {
    if (n_ == 0) throw PreconditionError("graph needs at least one node");
    if (k_ == 0) throw PreconditionError("graph needs at least one worm");
    if (thresholds_.size() != n_) throw DimensionError("threshold table must have one row per node");
    for (const auto& row : thresholds_) {
      if (row.size() != k_) throw DimensionError("threshold row must have K entries");
      for (double t : row)
        if (!(t >= 0.0)) throw PreconditionError("thresholds must be finite and >= 0");
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
      return std::pair(a.dst, a.src) < std::pair(b.dst, b.src);
    });
    in_edges_.assign(n_, {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& edge = edges_[e];
      if (edge.src >= n_ || edge.dst >= n_) throw PreconditionError("edge endpoint out of range");
      if (edge.src == edge.dst) throw PreconditionError("self-loop on node " + std::to_string(edge.src));
      if (e > 0 && edges_[e - 1].src == edge.src && edges_[e - 1].dst == edge.dst)
        throw PreconditionError("duplicate edge " + std::to_string(edge.src) + "->" + std::to_string(edge.dst));
      if (edge.weights.size() != k_) throw DimensionError("edge weight vector must have K entries");
      for (double w : edge.weights)
        if (!(w >= 0.0) || w == std::numeric_limits<double>::infinity())
          throw PreconditionError("edge weights must be finite and >= 0");
      in_edges_[edge.dst].push_back(e);
    }
  }

  /// Topology-only graph: zero thresholds and weights.
  static WsnGraph topology(std::size_t node_count, std::size_t worm_count,
                           const std::vector<std::pair<NodeId, NodeId>>& arcs) {
    std::vector<Edge> edges;
    edges.reserve(arcs.size());
    for (auto [u, v] : arcs) edges.push_back(Edge{u, v, std::vector<double>(worm_count, 0.0)});
    return WsnGraph(node_count, worm_count,
                    std::vector<std::vector<double>>(node_count, std::vector<double>(worm_count, 0.0)),
                    std::move(edges));
  }

  std::size_t node_count() const noexcept { return n_; }
  std::size_t worm_count() const noexcept { return k_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }

  // Indices into edges() of the arcs entering v, ascending by source.
  const std::vector<std::size_t>& in_edges(NodeId v) const { return in_edges_.at(v); }

  std::vector<NodeId> in_neighbors(NodeId v) const {
    std::vector<NodeId> out;
    for (std::size_t e : in_edges(v)) out.push_back(edges_[e].src);
    return out;
  }

  std::size_t in_degree(NodeId v) const { return in_edges(v).size(); }

  /// Threshold of node v for worm k (1-based worm).
  double threshold(NodeId v, int k) const { return thresholds_.at(v).at(static_cast<std::size_t>(k - 1)); }
  const std::vector<std::vector<double>>& thresholds() const noexcept { return thresholds_; }

  double weight(std::size_t e, int k) const { return edges_.at(e).weights.at(static_cast<std::size_t>(k - 1)); }

  std::vector<std::pair<NodeId, NodeId>> arcs() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(edges_.size());
    for (const auto& e : edges_) out.emplace_back(e.src, e.dst);
    return out;
  }

  // Largest total incoming weight over all (node, worm) pairs.
  double max_in_weight_sum() const {
    double best = 0.0;
    for (NodeId v = 0; v < n_; ++v)
      for (std::size_t k = 0; k < k_; ++k) {
        double s = 0.0;
        for (std::size_t e : in_edges_[v]) s += edges_[e].weights[k];
        best = std::max(best, s);
      }
    return best;
  }

  double max_threshold() const {
    double best = 0.0;
    for (const auto& row : thresholds_)
      for (double t : row) best = std::max(best, t);
    return best;
  }

  /// Copy with replaced parameters; edge order follows edges().
  WsnGraph with_parameters(std::vector<std::vector<double>> thresholds,
                           std::vector<std::vector<double>> edge_weights) const {
    if (edge_weights.size() != edges_.size()) throw DimensionError("one weight vector per edge expected");
    std::vector<Edge> edges = edges_;
    for (std::size_t e = 0; e < edges.size(); ++e) edges[e].weights = std::move(edge_weights[e]);
    return WsnGraph(n_, k_, std::move(thresholds), std::move(edges));
  }

  friend bool operator==(const WsnGraph& a, const WsnGraph& b) {
    if (a.n_ != b.n_ || a.k_ != b.k_ || a.thresholds_ != b.thresholds_ || a.edges_.size() != b.edges_.size())
      return false;
    for (std::size_t e = 0; e < a.edges_.size(); ++e) {
      const auto &x = a.edges_[e], &y = b.edges_[e];
      if (x.src != y.src || x.dst != y.dst || x.weights != y.weights) return false;
    }
    return true;
  }

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<std::vector<double>> thresholds_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> in_edges_;
};

}  // namespace wormnet
