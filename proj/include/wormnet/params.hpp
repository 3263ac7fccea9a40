#pragma once

#include <span>
#include <vector>

#include "wormnet/error.hpp"
#include "wormnet/graph.hpp"

namespace wormnet {

/// Trainable model parameters: one weight vector per edge (in graph edge
/// order) and one threshold vector per node.
struct ModelParams {
  std::vector<std::vector<double>> edge_weights;
  std::vector<std::vector<double>> thresholds;

  static ModelParams of(const WsnGraph& g) {
    ModelParams p;
    for (const auto& e : g.edges()) p.edge_weights.push_back(e.weights);
    p.thresholds = g.thresholds();
    return p;
  }

  /// Flat vector in compiled-network binding order: weights edge-major and
  /// worm-minor, then thresholds node-major and worm-minor.
  std::vector<double> flatten() const {
    std::vector<double> out;
    for (const auto& w : edge_weights) out.insert(out.end(), w.begin(), w.end());
    for (const auto& t : thresholds) out.insert(out.end(), t.begin(), t.end());
    return out;
  }

  static ModelParams unflatten(const WsnGraph& g, std::span<const double> flat) {
    const std::size_t k = g.worm_count();
    if (flat.size() != (g.edge_count() + g.node_count()) * k) throw DimensionError("parameter vector length mismatch");
    ModelParams p;
    auto it = flat.begin();
    for (std::size_t e = 0; e < g.edge_count(); ++e, it += static_cast<std::ptrdiff_t>(k))
      p.edge_weights.emplace_back(it, it + static_cast<std::ptrdiff_t>(k));
    for (std::size_t v = 0; v < g.node_count(); ++v, it += static_cast<std::ptrdiff_t>(k))
      p.thresholds.emplace_back(it, it + static_cast<std::ptrdiff_t>(k));
    return p;
  }

  bool non_negative() const {
    for (const auto* table : {&edge_weights, &thresholds})
      for (const auto& row : *table)
        for (double x : row)
          if (!(x >= 0.0)) return false;
    return true;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline WsnGraph apply_params(const WsnGraph& topology, const ModelParams& p) {
  return topology.with_parameters(p.thresholds, p.edge_weights);
}

}  // namespace wormnet
