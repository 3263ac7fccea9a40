#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "wormnet/datagen.hpp"
#include "wormnet/io.hpp"

using namespace wormnet;

#ifndef WORMNET_DATA_DIR
#define WORMNET_DATA_DIR "data"
#endif

TEST(ErGraph, ExtremeProbabilities) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(gen_er_graph(5, 0.0, 2, rng).edge_count(), 0u);
  auto full = gen_er_graph(4, 1.0, 2, rng);
  EXPECT_EQ(full.edge_count(), 12u);
  for (const auto& e : full.edges()) EXPECT_NE(e.src, e.dst);
  EXPECT_THROW(gen_er_graph(4, 1.5, 2, rng), PreconditionError);
  EXPECT_THROW(gen_er_graph(0, 0.5, 2, rng), PreconditionError);
}

TEST(ErGraph, EdgeCountWithinThreeSigma) {
  std::mt19937_64 rng(2024);
  const double n = 200, p = 0.2, mean = n * (n - 1) * p, sd = std::sqrt(mean * (1 - p));
  auto g = gen_er_graph(200, 0.2, 2, rng);
  EXPECT_NEAR(static_cast<double>(g.edge_count()), mean, 3 * sd);
}

TEST(ErGraph, SameSeedSameGraph) {
  std::mt19937_64 a(77), b(77);
  EXPECT_EQ(gen_er_graph(30, 0.3, 4, a), gen_er_graph(30, 0.3, 4, b));
}

TEST(SensorGraph, BundledCoordinatesAreConnected) {
  auto sg = load_sensor_graph(std::string(WORMNET_DATA_DIR) + "/intel_lab_synthetic.txt", SensorRule::Distance, 2, 6.0);
  EXPECT_EQ(sg.graph.node_count(), 54u);
  EXPECT_TRUE(sg.warnings.empty());
}

TEST(SensorGraph, CollinearPoints) {
  std::istringstream is("0 0 0\n1 1 0\n2 2 0\n");
  auto sg = read_sensor_graph(is, SensorRule::Distance, 2, 1.5);
  EXPECT_EQ(sg.graph.edge_count(), 4u);
}

TEST(SensorGraph, EdgeListAndWarnings) {
  std::istringstream is("nodes 4\n0 1\n1 0\n1 2\n");
  auto sg = read_sensor_graph(is, SensorRule::EdgeList, 2);
  EXPECT_EQ(sg.graph.node_count(), 4u);
  EXPECT_EQ(sg.graph.edge_count(), 3u);
  ASSERT_EQ(sg.warnings.size(), 1u);
}

TEST(SensorGraph, Rejections) {
  std::istringstream empty("");
  EXPECT_THROW(read_sensor_graph(empty, SensorRule::EdgeList, 2), ParseError);
  std::istringstream gap("0 0 0\n2 1 1\n");
  EXPECT_THROW(read_sensor_graph(gap, SensorRule::Distance, 2, 1.0), ParseError);
  std::istringstream beyond("nodes 2\n0 3\n");
  EXPECT_THROW(read_sensor_graph(beyond, SensorRule::EdgeList, 2), ParseError);
  EXPECT_THROW(load_sensor_graph("/nonexistent/file", SensorRule::EdgeList, 2), Error);
}

TEST(ModelParams, PriorWeights) {
  // node 4 has four in-neighbours, node 3 has three
  std::vector<std::pair<NodeId, NodeId>> arcs{{0, 4}, {1, 4}, {2, 4}, {3, 4}, {0, 3}, {1, 3}, {2, 3}};
  std::mt19937_64 rng(3);
  auto topo4 = WsnGraph::topology(5, 4, arcs);
  auto p = sample_model_params(topo4, rng);
  auto g = apply_params(topo4, p);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edges()[e];
    if (edge.dst == 4) {
      EXPECT_DOUBLE_EQ(edge.weights[3], 0.125);
    }
    if (edge.dst == 3) {
      EXPECT_DOUBLE_EQ(edge.weights[0], 0.25);
      EXPECT_DOUBLE_EQ(edge.weights[1], 0.2);
    }
  }
  for (const auto& row : p.thresholds)
    for (double t : row) {
      EXPECT_GE(t, 0.0);
      EXPECT_LT(t, 1.0);
    }
}

class PoolTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(10);
    auto topo = gen_er_graph(200, 0.05, 2, rng);
    graph = apply_params(topo, sample_model_params(topo, rng));
  }
  WsnGraph graph;
};

TEST_F(PoolTest, SeedCountsAndAudit) {
  auto pool = gen_sample_pool(graph, 1000, 100, 5);
  ASSERT_EQ(pool.size(), 1000u);
  for (const auto& p : pool.pairs) {
    ASSERT_EQ(p.initial.infected_count(), 100u);
    for (std::size_t v = 0; v < p.initial.node_count(); ++v)
      if (p.initial[v] != 0) {
        ASSERT_EQ(p.final_state[v], p.initial[v]);
      }
  }
  EXPECT_EQ(audit_pool(graph, pool), 0u);
  EXPECT_EQ(pool.graph_id, io::graph_id(graph));
}

TEST_F(PoolTest, AllSeededIsFixedPoint) {
  auto pool = gen_sample_pool(graph, 20, graph.node_count(), 6);
  for (const auto& p : pool.pairs) {
    EXPECT_EQ(p.initial.infected_count(), graph.node_count());
    EXPECT_EQ(p.final_state, p.initial);
  }
}

TEST_F(PoolTest, DeterministicAndPrefixStable) {
  auto a = gen_sample_pool(graph, 30, 10, 42), b = gen_sample_pool(graph, 30, 10, 42);
  EXPECT_EQ(a, b);
  auto c = gen_sample_pool(graph, 10, 10, 42);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c.pairs[i], a.pairs[i]);
  EXPECT_NE(gen_sample_pool(graph, 30, 10, 43).pairs, a.pairs);
}

TEST_F(PoolTest, AuditCatchesTampering) {
  auto pool = gen_sample_pool(graph, 10, 10, 1);
  auto labels = pool.pairs[3].final_state.labels();
  for (auto& l : labels) l = l == 0 ? 1 : 0;
  pool.pairs[3].final_state = InfectionState(labels, 2);
  EXPECT_EQ(audit_pool(graph, pool), 1u);
}

TEST_F(PoolTest, Rejections) {
  EXPECT_THROW(gen_sample_pool(graph, 5, 0, 1), PreconditionError);
  EXPECT_THROW(gen_sample_pool(graph, 5, 201, 1), PreconditionError);
}

TEST_F(PoolTest, Split) {
  auto pool = gen_sample_pool(graph, 1000, 100, 7);
  std::mt19937_64 rng(1), rng2(1);
  auto s = split_pool(pool, 600, 400, rng);
  EXPECT_EQ(s.train.size(), 600u);
  EXPECT_EQ(s.test.size(), 400u);
  // every pair lands in exactly one side
  std::multiset<std::vector<int>> all, seen;
  for (const auto& p : pool.pairs) all.insert(p.initial.labels());
  for (const auto* side : {&s.train, &s.test})
    for (const auto& p : *side) seen.insert(p.initial.labels());
  EXPECT_EQ(all, seen);
  auto again = split_pool(pool, 600, 400, rng2);
  EXPECT_EQ(again.train, s.train);

  auto none = split_pool(pool, 0, 1000, rng);
  EXPECT_TRUE(none.train.empty());
  EXPECT_EQ(none.test.size(), 1000u);
  EXPECT_THROW(split_pool(pool, 600, 401, rng), SizeError);
}
