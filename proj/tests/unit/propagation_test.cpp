#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "wormnet/propagation.hpp"

using namespace wormnet;
using wormnet::testing::g3;
using wormnet::testing::g3_initial;

namespace {

std::vector<int> values(const std::vector<WormIndex>& ws) {
  std::vector<int> out;
  for (const auto& w : ws) out.push_back(w.value());
  return out;
}

// Independent two-phase step: phase one reads only `state` to collect every
// candidate set, phase two writes the new labels.
InfectionState two_phase_step(const WsnGraph& g, const InfectionState& state) {
  const std::size_t n = g.node_count(), k = g.worm_count();
  std::vector<std::vector<double>> sums(n, std::vector<double>(k, 0.0));
  std::vector<std::vector<bool>> support(n, std::vector<bool>(k, false));
  for (NodeId v = 0; v < n; ++v)
    for (NodeId u = 0; u < n; ++u)
      for (const auto& e : g.edges())
        if (e.src == u && e.dst == v && state[u] != 0) {
          sums[v][state[u] - 1] += e.weights[state[u] - 1];
          support[v][state[u] - 1] = true;
        }
  std::vector<int> next = state.labels();
  for (NodeId v = 0; v < n; ++v) {
    if (state[v] != 0) continue;
    int best = 0;
    for (std::size_t j = 0; j < k; ++j) {
      bool cand = support[v][j] && sums[v][j] >= g.threshold(v, static_cast<int>(j + 1));
      if (cand && (best == 0 || sums[v][j] >= sums[v][best - 1])) best = static_cast<int>(j + 1);
    }
    next[v] = best;
  }
  return InfectionState(next, k);
}

WsnGraph chain5() {
  std::vector<Edge> edges;
  for (NodeId v = 0; v + 1 < 5; ++v) edges.push_back(Edge{v, v + 1, {1.0}});
  return WsnGraph(5, 1, std::vector<std::vector<double>>(5, {0.5}), edges);
}

}  // namespace

TEST(Graph, RejectsInvalidInput) {
  EXPECT_THROW(WsnGraph(2, 1, {{0.1}, {0.1}}, {Edge{0, 0, {1.0}}}), PreconditionError);
  EXPECT_THROW(WsnGraph(2, 1, {{0.1}, {0.1}}, {Edge{0, 1, {1.0}}, Edge{0, 1, {0.5}}}), PreconditionError);
  EXPECT_THROW(WsnGraph(2, 1, {{-0.1}, {0.1}}, {}), PreconditionError);
  EXPECT_THROW(WsnGraph(2, 1, {{0.1}, {0.1}}, {Edge{0, 1, {-1.0}}}), PreconditionError);
  EXPECT_THROW(WsnGraph(2, 1, {{0.1}, {0.1}}, {Edge{0, 2, {1.0}}}), PreconditionError);
  EXPECT_THROW(WsnGraph(2, 2, {{0.1}, {0.1}}, {}), DimensionError);
}

TEST(Graph, InNeighborsSortedAndConsistent) {
  WsnGraph g(4, 1, std::vector<std::vector<double>>(4, {0.0}),
             {Edge{3, 0, {1}}, Edge{1, 0, {1}}, Edge{2, 0, {1}}, Edge{0, 3, {1}}});
  EXPECT_EQ(g.in_neighbors(0), (std::vector<NodeId>{1, 2, 3}));
  EXPECT_EQ(g.in_neighbors(3), (std::vector<NodeId>{0}));
  EXPECT_EQ(g.edge_count(), 4u);
  EXPECT_THROW(WormIndex(0, 4), InvalidLabelError);
  EXPECT_THROW(WormIndex(5, 4), InvalidLabelError);
}

TEST(CandidateWorms, G3BothWormsQualify) {
  EXPECT_EQ(values(candidate_worms(g3(), g3_initial(), 2)), (std::vector<int>{1, 2}));
}

TEST(CandidateWorms, NoInfectedNeighbours) {
  EXPECT_TRUE(candidate_worms(g3(), InfectionState({0, 0, 0}, 2), 2).empty());
}

TEST(CandidateWorms, ZeroThresholdNeedsAnInfectedNeighbour) {
  WsnGraph g(2, 2, {{0.0, 0.0}, {0.0, 0.0}}, {Edge{0, 1, {0.0, 0.0}}});
  // worm 1 reaches node 1 with an empty-weight sum 0 >= 0; worm 2 is absent.
  EXPECT_EQ(values(candidate_worms(g, InfectionState({1, 0}, 2), 1)), (std::vector<int>{1}));
  EXPECT_TRUE(candidate_worms(g, InfectionState({0, 0}, 2), 1).empty());
}

TEST(CandidateWorms, InfectedNodeIsPreconditionError) {
  EXPECT_THROW(candidate_worms(g3(), g3_initial(), 0), PreconditionError);
}

TEST(ResolveInfection, LargestSumWins) {
  auto g = g3();
  auto s = g3_initial();
  EXPECT_EQ(resolve_infection(g, s, 2, candidate_worms(g, s, 2)).value(), 2);
}

TEST(ResolveInfection, TieGoesToLargerIndex) {
  auto g = g3(0.6);
  auto s = g3_initial();
  auto c = candidate_worms(g, s, 2);
  ASSERT_EQ(values(c), (std::vector<int>{1, 2}));
  EXPECT_EQ(resolve_infection(g, s, 2, c).value(), 2);
}

TEST(ResolveInfection, SingletonAndEmpty) {
  auto g = g3();
  auto s = g3_initial();
  EXPECT_EQ(resolve_infection(g, s, 2, {WormIndex(1, 2)}).value(), 1);
  EXPECT_THROW(resolve_infection(g, s, 2, {}), PreconditionError);
}

TEST(Step, G3AndFixedPoints) {
  auto g = g3();
  EXPECT_EQ(step(g, g3_initial()).labels(), (std::vector<int>{1, 2, 2}));
  InfectionState full({2, 1, 1}, 2);
  EXPECT_EQ(step(g, full), full);
  InfectionState none({0, 0, 0}, 2);
  EXPECT_EQ(step(g, none), none);
}

TEST(Propagate, G3) {
  auto r = propagate(g3(), g3_initial());
  EXPECT_EQ(r.final_state.labels(), (std::vector<int>{1, 2, 2}));
  EXPECT_EQ(r.trace.converged_at, 1u);
}

TEST(Propagate, Chain) {
  auto r = propagate(chain5(), InfectionState({1, 0, 0, 0, 0}, 1));
  EXPECT_EQ(r.final_state.labels(), (std::vector<int>{1, 1, 1, 1, 1}));
  EXPECT_EQ(r.trace.converged_at, 4u);
}

TEST(Propagate, NoSeeds) {
  InfectionState none({0, 0, 0}, 2);
  auto r = propagate(g3(), none);
  EXPECT_EQ(r.final_state, none);
  EXPECT_EQ(r.trace.converged_at, 0u);
}

TEST(Propagate, TraceExport) {
  std::ostringstream os;
  write_trace(os, propagate(g3(), g3_initial()).trace);
  EXPECT_EQ(os.str(), "0 1 2 0\n1 1 2 2\n");
}

TEST(PropagationProperties, RandomGraphs) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(1, 25)(rng);
    std::size_t k = std::size_t{1} << std::uniform_int_distribution<int>(0, 3)(rng);
    double p = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    auto g = trial % 2 ? wormnet::testing::random_graph(n, k, p, rng, 0.6)
                       : wormnet::testing::degenerate_graph(n, k, p, rng);
    std::uniform_int_distribution<int> lab(0, static_cast<int>(k));
    std::vector<int> labels(n);
    for (auto& l : labels) l = std::uniform_int_distribution<int>(0, 2)(rng) == 0 ? lab(rng) : 0;
    InfectionState init(labels, k);

    auto r = propagate(g, init);
    ASSERT_LE(r.trace.converged_at, n);
    ASSERT_EQ(propagate(g, init).trace.states, r.trace.states);  // deterministic
    for (std::size_t t = 0; t + 1 < r.trace.states.size(); ++t) {
      const auto &a = r.trace.states[t], &b = r.trace.states[t + 1];
      ASSERT_EQ(b, two_phase_step(g, a));
      for (std::size_t v = 0; v < n; ++v) {
        if (a[v] != 0) {
          ASSERT_EQ(a[v], b[v]);
        }
      }
    }
    ASSERT_EQ(step(g, r.final_state), r.final_state);
    // step == candidate_worms + resolve_infection per innocent node
    auto next = step(g, init);
    for (NodeId v = 0; v < n; ++v) {
      if (init[v] != 0) continue;
      auto c = candidate_worms(g, init, v);
      ASSERT_EQ(next[v], c.empty() ? 0 : resolve_infection(g, init, v, c).value());
    }
  }
}

TEST(ExhaustiveOracle, SingleNode) {
  WsnGraph g(1, 2, {{0.3, 0.3}}, {});
  auto all = exhaustive_oracle(g);
  ASSERT_EQ(all.size(), 3u);
  for (const auto& [init, fin] : all) EXPECT_EQ(fin.labels(), init);
}

TEST(ExhaustiveOracle, G3) {
  auto all = exhaustive_oracle(g3());
  ASSERT_EQ(all.size(), 27u);
  EXPECT_EQ(all.at({1, 2, 0}).labels(), (std::vector<int>{1, 2, 2}));
  for (const auto& [init, fin] : all) EXPECT_EQ(fin, propagate(g3(), InfectionState(init, 2)).final_state);
}

TEST(ExhaustiveOracle, SixNodesIsFast) {
  std::mt19937_64 rng(9);
  auto g = wormnet::testing::random_graph(6, 2, 0.4, rng, 0.6);
  auto t0 = std::chrono::steady_clock::now();
  auto all = exhaustive_oracle(g);
  auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(all.size(), 729u);
  EXPECT_LT(secs, 1.0);
}

TEST(ExhaustiveOracle, CapExceeded) {
  WsnGraph g(13, 2, std::vector<std::vector<double>>(13, {0.5, 0.5}), {});
  EXPECT_THROW(exhaustive_oracle(g), SizeError);
  EXPECT_THROW(exhaustive_oracle(g3(), 26), SizeError);
}
