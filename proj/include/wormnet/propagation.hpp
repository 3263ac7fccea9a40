#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <vector>

#include "wormnet/error.hpp"
#include "wormnet/graph.hpp"
#include "wormnet/status.hpp"

namespace wormnet {

struct WormPressure {
  double sum = 0.0;     // total weight from k-infected in-neighbours
  bool supported = false;  // at least one in-neighbour carries worm k
};

/// Incoming pressure on v from each worm under `state`, index k-1. Sums visit
/// in-neighbours in ascending source order starting from +0.0.
inline std::vector<WormPressure> incoming_pressure(const WsnGraph& g, const InfectionState& state, NodeId v) {
  std::vector<WormPressure> out(g.worm_count());
  for (std::size_t e : g.in_edges(v)) {
    int l = state[g.edge(e).src];
    if (l == 0) continue;
    auto& p = out[static_cast<std::size_t>(l - 1)];
    p.sum += g.weight(e, l);
    p.supported = true;
  }
  return out;
}

/// Worms whose accumulated weight reaches v's threshold. A worm with no
/// infected in-neighbour is never a candidate, even when its threshold is 0.
inline std::vector<WormIndex> candidate_worms(const WsnGraph& g, const InfectionState& state, NodeId v) {
  if (state.label(v) != 0) throw PreconditionError("candidate_worms: node " + std::to_string(v) + " is infected");
  std::vector<WormIndex> out;
  auto pressure = incoming_pressure(g, state, v);
  for (std::size_t k = 1; k <= g.worm_count(); ++k) {
    const auto& p = pressure[k - 1];
    if (p.supported && p.sum >= g.threshold(v, static_cast<int>(k)))
      out.emplace_back(static_cast<int>(k), g.worm_count());
  }
  return out;
}

/// Candidate with the largest incoming sum; ties go to the larger worm index.
inline WormIndex resolve_infection(const WsnGraph& g, const InfectionState& state, NodeId v,
                                   const std::vector<WormIndex>& candidates) {
  if (candidates.empty()) throw PreconditionError("resolve_infection: empty candidate set");
  auto pressure = incoming_pressure(g, state, v);
  const WormIndex* best = nullptr;
  double best_sum = 0.0;
  for (const auto& c : candidates) {
    if (c.value() < 1 || static_cast<std::size_t>(c.value()) > g.worm_count())
      throw PreconditionError("resolve_infection: candidate out of range");
    double s = pressure[static_cast<std::size_t>(c.value() - 1)].sum;
    if (!best || s > best_sum || (s == best_sum && c.value() > best->value())) {
      best = &c;
      best_sum = s;
    }
  }
  return *best;
}

/// One synchronous step: every innocent node is evaluated against the input
/// state, never against partially updated labels.
inline InfectionState step(const WsnGraph& g, const InfectionState& state) {
  if (state.node_count() != g.node_count()) throw DimensionError("step: state size differs from graph");
  std::vector<int> next = state.labels();
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (state[v] != 0) continue;
    auto cands = candidate_worms(g, state, v);
    if (!cands.empty()) next[v] = resolve_infection(g, state, v, cands).value();
  }
  return InfectionState(std::move(next), g.worm_count());
}

struct PropagationTrace {
  std::vector<InfectionState> states;  // states[t], t = 0..converged_at
  std::size_t converged_at = 0;
};

struct PropagationResult {
  InfectionState final_state;
  PropagationTrace trace;
};

/// Runs step() to the fixed point. converged_at is the last step that changed
/// anything (0 when the initial state is already fixed).
inline PropagationResult propagate(const WsnGraph& g, const InfectionState& initial) {
  PropagationTrace trace;
  trace.states.push_back(initial);
  InfectionState cur = initial;
  for (;;) {
    InfectionState next = step(g, cur);
    if (next == cur) break;
    trace.states.push_back(next);
    cur = std::move(next);
  }
  trace.converged_at = trace.states.size() - 1;
  return {cur, std::move(trace)};
}

inline InfectionState propagate_final(const WsnGraph& g, const InfectionState& initial) {
  InfectionState cur = initial;
  for (;;) {
    InfectionState next = step(g, cur);
    if (next == cur) return cur;
    cur = std::move(next);
  }
}

/// Enumerates all (K+1)^N initial states in lexicographic label order
/// (node 0 most significant) and calls fn(index, state).
template <typename Fn>
void for_each_state(std::size_t node_count, std::size_t worm_count, Fn&& fn) {
  std::vector<int> labels(node_count, 0);
  std::uint64_t index = 0;
  for (;;) {
    fn(index++, InfectionState(labels, worm_count));
    std::size_t i = node_count;
    while (i > 0) {
      --i;
      if (static_cast<std::size_t>(++labels[i]) <= worm_count) break;
      labels[i] = 0;
      if (i == 0) return;
    }
    if (node_count == 0) return;
  }
}

inline std::uint64_t state_space_size(std::size_t node_count, std::size_t worm_count, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < node_count; ++i) {
    if (total > cap / (worm_count + 1)) return cap + 1;
    total *= worm_count + 1;
  }
  return total;
}

/// Final state for every initial state of the graph.
inline std::map<std::vector<int>, InfectionState> exhaustive_oracle(const WsnGraph& g,
                                                                    std::uint64_t cap = 1'000'000) {
  if (state_space_size(g.node_count(), g.worm_count(), cap) > cap)
    throw SizeError("exhaustive_oracle: (K+1)^N exceeds cap " + std::to_string(cap));
  std::map<std::vector<int>, InfectionState> out;
  for_each_state(g.node_count(), g.worm_count(), [&](std::uint64_t, const InfectionState& s) {
    out.emplace(s.labels(), propagate_final(g, s));
  });
  return out;
}

/// One line per step: "t l0 l1 ... l(N-1)".
inline void write_trace(std::ostream& os, const PropagationTrace& trace) {
  for (std::size_t t = 0; t < trace.states.size(); ++t) {
    os << t;
    for (int l : trace.states[t].labels()) os << ' ' << l;
    os << '\n';
  }
}

}  // namespace wormnet
