#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wormnet/error.hpp"
#include "wormnet/graph.hpp"
#include "wormnet/io.hpp"
#include "wormnet/params.hpp"
#include "wormnet/propagation.hpp"
#include "wormnet/status.hpp"

namespace wormnet {

/// Deterministic per-item generator derived from a master seed.
inline std::mt19937_64 child_rng(std::uint64_t master, std::uint64_t item) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(item), static_cast<std::uint32_t>(item >> 32)};
  return std::mt19937_64(seq);
}

/// Directed Erdos-Renyi graph: every ordered pair u != v independently with
/// probability p. Parameters are left at zero.
template <typename Rng>
WsnGraph gen_er_graph(std::size_t n, double p, std::size_t worm_count, Rng& rng) {
  if (n == 0) throw PreconditionError("gen_er_graph: n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("gen_er_graph: p must lie in [0, 1]");
  std::bernoulli_distribution coin(p);
  std::vector<std::pair<NodeId, NodeId>> arcs;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = 0; v < n; ++v)
      if (u != v && coin(rng)) arcs.emplace_back(u, v);
  return WsnGraph::topology(n, worm_count, arcs);
}

enum class SensorRule { EdgeList, Distance };

struct SensorGraph {
  WsnGraph graph;
  std::vector<std::string> warnings;
};

namespace detail {

inline bool weakly_connected(const WsnGraph& g) {
  std::vector<std::vector<NodeId>> adj(g.node_count());
  for (const auto& e : g.edges()) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  std::vector<char> seen(g.node_count(), 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
  }
  return reached == g.node_count();
}

}  // namespace detail

/// Reads a sensor topology.
///
/// Edge-list files hold an optional "nodes N" line followed by "u v" lines
/// (directed). Coordinate files hold "id x y" lines; the distance rule links
/// every pair closer than `radius` in both directions.
inline SensorGraph read_sensor_graph(std::istream& is, SensorRule rule, std::size_t worm_count, double radius = 0.0) {
  io::TokenReader r(is);
  if (r.done()) throw ParseError("sensor file is empty");
  std::vector<std::pair<NodeId, NodeId>> arcs;
  std::size_t n = 0;
  if (rule == SensorRule::EdgeList) {
    if (r.peek() == "nodes") n = r.count("nodes");
    std::size_t max_id = 0;
    while (!r.done()) {
      auto u = r.number<std::size_t>("source"), v = r.number<std::size_t>("target");
      if (u == v) continue;
      arcs.emplace_back(u, v);
      max_id = std::max({max_id, u, v});
    }
    if (n == 0) n = max_id + 1;
    if (max_id >= n) throw ParseError("edge references node beyond declared count");
    std::sort(arcs.begin(), arcs.end());
    arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
  } else {
    if (!(radius > 0.0)) throw PreconditionError("distance rule needs radius > 0");
    std::vector<std::pair<std::size_t, std::pair<double, double>>> pts;
    while (!r.done()) {
      auto id = r.number<std::size_t>("sensor id");
      double x = r.real("x");
      pts.push_back({id, {x, r.real("y")}});
    }
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (pts[i].first != i) throw ParseError("sensor ids must be 0..N-1 without gaps");
    n = pts.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        double dx = pts[i].second.first - pts[j].second.first, dy = pts[i].second.second - pts[j].second.second;
        if (std::hypot(dx, dy) <= radius) arcs.emplace_back(i, j);
      }
  }
  SensorGraph out{WsnGraph::topology(n, worm_count, arcs), {}};
  if (!detail::weakly_connected(out.graph)) out.warnings.push_back("sensor graph is not connected");
  return out;
}

inline SensorGraph load_sensor_graph(const std::string& path, SensorRule rule, std::size_t worm_count,
                                     double radius = 0.0) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_sensor_graph(is, rule, worm_count, radius);
}

/// Thresholds ~ U[0,1] per (node, worm); weight of (u,v) for worm k is
/// 1 / (|N_v| + k).
template <typename Rng>
ModelParams sample_model_params(const WsnGraph& topology, Rng& rng) {
  const std::size_t k = topology.worm_count();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ModelParams p;
  p.thresholds.assign(topology.node_count(), std::vector<double>(k));
  for (auto& row : p.thresholds)
    for (auto& t : row) t = unit(rng);
  for (const auto& e : topology.edges()) {
    std::vector<double> w(k);
    for (std::size_t j = 1; j <= k; ++j) w[j - 1] = 1.0 / static_cast<double>(topology.in_degree(e.dst) + j);
    p.edge_weights.push_back(std::move(w));
  }
  return p;
}

/// Q initial/final pairs: each initial picks num_seeds distinct nodes and a
/// uniform worm for each; the final is the simulator's fixed point. Pair i
/// draws from child_rng(master_seed, i).
inline SamplePool gen_sample_pool(const WsnGraph& g, std::size_t q, std::size_t num_seeds, std::uint64_t master_seed) {
  if (num_seeds < 1 || num_seeds > g.node_count()) throw PreconditionError("num_seeds must lie in [1, N]");
  SamplePool pool;
  pool.graph_id = io::graph_id(g);
  pool.worm_count = g.worm_count();
  pool.num_seeds = num_seeds;
  pool.master_seed = master_seed;
  pool.pairs.reserve(q);
  std::vector<NodeId> order(g.node_count());
  for (std::size_t i = 0; i < q; ++i) {
    auto rng = child_rng(master_seed, i);
    std::iota(order.begin(), order.end(), NodeId{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<int> worm(1, static_cast<int>(g.worm_count()));
    std::vector<int> labels(g.node_count(), 0);
    for (std::size_t s = 0; s < num_seeds; ++s) labels[order[s]] = worm(rng);
    InfectionState init(std::move(labels), g.worm_count());
    auto fin = propagate_final(g, init);
    pool.pairs.push_back({std::move(init), std::move(fin)});
  }
  return pool;
}

/// Number of stored pairs whose final state differs from the simulator's.
inline std::size_t audit_pool(const WsnGraph& g, const SamplePool& pool) {
  std::size_t bad = 0;
  for (const auto& p : pool.pairs) bad += !(propagate_final(g, p.initial) == p.final_state);
  return bad;
}

struct PoolSplit {
  std::vector<SamplePair> train;
  std::vector<SamplePair> test;
};

/// Disjoint uniformly random train/test subsets of the pool.
template <typename Rng>
PoolSplit split_pool(const SamplePool& pool, std::size_t train_size, std::size_t test_size, Rng& rng) {
  if (train_size + test_size > pool.size())
    throw SizeError("split_pool: " + std::to_string(train_size) + " + " + std::to_string(test_size) +
                    " exceeds pool size " + std::to_string(pool.size()));
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  PoolSplit s;
  for (std::size_t i = 0; i < train_size; ++i) s.train.push_back(pool.pairs[idx[i]]);
  for (std::size_t i = 0; i < test_size; ++i) s.test.push_back(pool.pairs[idx[train_size + i]]);
  return s;
}

}  // namespace wormnet
