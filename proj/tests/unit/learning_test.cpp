#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "wormnet/datagen.hpp"
#include "wormnet/learning.hpp"

using namespace wormnet;

namespace {

struct Setup {
  WsnGraph topology;
  WsnGraph truth;
  SamplePool pool;
};

Setup make_setup(std::size_t n, std::size_t k, std::size_t q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto topo = gen_er_graph(n, 0.2, k, rng);
  auto truth = apply_params(topo, sample_model_params(topo, rng));
  auto pool = gen_sample_pool(truth, q, n / 2, seed + 1);
  return {topo, truth, pool};
}

std::vector<Complex> one_hot_output(const InfectionState& s) { return encode_status(s, s.worm_count()).flat(); }

}  // namespace

TEST(InitParams, DegreePrior) {
  std::vector<std::pair<NodeId, NodeId>> arcs{{0, 3}, {1, 3}, {2, 3}};
  auto topo = WsnGraph::topology(4, 2, arcs);
  std::mt19937_64 rng(1);
  auto p = init_params(topo, rng, InitScheme::DegreePrior);
  for (const auto& w : p.edge_weights) {
    EXPECT_DOUBLE_EQ(w[0], 0.25);
    EXPECT_DOUBLE_EQ(w[1], 0.2);
  }
  auto u = init_params(topo, rng, InitScheme::Uniform01);
  EXPECT_TRUE(u.non_negative());
}

TEST(SurrogateLoss, ExactMatchIsFree) {
  InfectionState s({1, 0, 2, 2}, 2);
  auto l = surrogate_loss(one_hot_output(s), s);
  EXPECT_EQ(l.value, 0.0);
  for (auto g : l.grad) EXPECT_EQ(g, Complex{});
}

TEST(SurrogateLoss, UniformIsLogOfClassCount) {
  InfectionState s({0, 1, 4}, 4);
  std::vector<Complex> out(12, Complex(0.2, 0.0));
  EXPECT_NEAR(surrogate_loss(out, s).value, std::log(5.0), 1e-12);
}

TEST(SurrogateLoss, DecreasesTowardTarget) {
  InfectionState s({2}, 2);
  double prev = INFINITY;
  for (double a : {0.0, 0.2, 0.5, 0.8, 0.95}) {
    std::vector<Complex> out{Complex(0.3 * (1 - a), 0), Complex(a, 0)};
    double v = surrogate_loss(out, s).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(SurrogateLoss, GradientMatchesDifferences) {
  InfectionState s({0, 1, 2}, 2);
  std::vector<Complex> out{{0.1, 0}, {0.3, 0}, {0.6, 0}, {0.2, 0}, {0.3, 0}, {0.5, 0}};
  auto l = surrogate_loss(out, s);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto up = out, dn = out;
    up[i] += 1e-6;
    dn[i] -= 1e-6;
    double fd = (surrogate_loss(up, s).value - surrogate_loss(dn, s).value) / 2e-6;
    EXPECT_NEAR(l.grad[i].real(), fd, 1e-6);
  }
}

TEST(SurrogateLoss, Errors) {
  InfectionState s({0, 1}, 2);
  EXPECT_THROW(surrogate_loss(std::vector<Complex>(3), s), DimensionError);
  std::vector<Complex> bad(4);
  bad[1] = Complex(NAN, 0);
  EXPECT_THROW(surrogate_loss(bad, s), NumericError);
}

TEST(Metrics, PerfectAndInnocentPredictors) {
  auto st = make_setup(20, 2, 50, 3);
  std::vector<InfectionState> truth, innocent;
  for (const auto& p : st.pool.pairs) {
    truth.push_back(p.final_state);
    innocent.push_back(InfectionState::innocent(20, 2));
  }
  auto m = score_predictions(truth, truth, 2);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.mean_loss, 0.0);
  EXPECT_EQ(m.f1, 1.0);
  auto z = score_predictions(innocent, truth, 2);
  EXPECT_EQ(z.recall, 0.0);
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_NEAR(z.accuracy + z.mean_loss, 1.0, 1e-12);
}

TEST(Metrics, RandomBaselineMatchesClassCount) {
  for (std::size_t k : {2u, 4u}) {
    auto st = make_setup(50, k, 400, 5);
    std::mt19937_64 rng(9);
    auto m = random_baseline(st.pool.pairs, k, rng);  // 20000 node labels
    EXPECT_NEAR(m.accuracy, 1.0 / static_cast<double>(k + 1), 0.02);
    for (double x : {m.f1, m.precision, m.recall, m.accuracy}) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
}

TEST(Evaluate, TrueParametersAreExact) {
  for (std::size_t k : {2u, 4u}) {
    auto st = make_setup(30, k, 100, 11);
    auto m = evaluate(st.topology, ModelParams::of(st.truth), st.pool.pairs);
    EXPECT_EQ(m.mean_loss, 0.0);
    EXPECT_EQ(m.accuracy, 1.0);
  }
}

TEST(Train, ZeroLearningRateKeepsInitial) {
  auto st = make_setup(16, 2, 40, 12);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 2;
  cfg.keep_best = false;
  std::mt19937_64 rng(4);
  auto init = init_params(st.topology, rng, InitScheme::Uniform01);
  auto res = train(st.topology, st.pool.pairs, cfg, std::nullopt, init);
  EXPECT_EQ(res.params, init);
  EXPECT_EQ(res.history.size(), 2u);
}

TEST(Train, ReproducibleAndProjected) {
  auto st = make_setup(16, 2, 60, 13);
  TrainConfig cfg;
  cfg.learning_rate = 5.0;
  cfg.epochs = 3;
  cfg.keep_best = false;
  auto a = train(st.topology, st.pool.pairs, cfg), b = train(st.topology, st.pool.pairs, cfg);
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.history.size(), 3u);
  EXPECT_TRUE(a.params.non_negative());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.history[i].tau, cfg.tau_at(i));
    EXPECT_TRUE(std::isfinite(a.history[i].train_surrogate_loss));
  }
  EXPECT_EQ(a.history.front().tau, cfg.tau_start);
  EXPECT_EQ(a.history.back().tau, cfg.tau_end);
}

TEST(Train, KeepBestNeverLosesToInitial) {
  auto st = make_setup(20, 2, 80, 14);
  TrainConfig cfg;
  cfg.learning_rate = 50.0;
  cfg.epochs = 2;
  std::mt19937_64 rng(cfg.seed);
  auto init = init_params(st.topology, rng, cfg.init);
  auto res = train(st.topology, st.pool.pairs, cfg);
  EXPECT_GE(evaluate(st.topology, res.params, st.pool.pairs).accuracy,
            evaluate(st.topology, init, st.pool.pairs).accuracy);
}

TEST(Train, StartingFromTruthStaysExact) {
  auto st = make_setup(16, 2, 40, 15);
  TrainConfig cfg;
  cfg.epochs = 1;
  auto res = train(st.topology, st.pool.pairs, cfg, std::nullopt, ModelParams::of(st.truth));
  EXPECT_EQ(evaluate(st.topology, res.params, st.pool.pairs).accuracy, 1.0);
}

TEST(Train, ConfigErrors) {
  auto st = make_setup(8, 2, 10, 16);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(train(st.topology, st.pool.pairs, cfg), ConfigurationError);
  cfg = {};
  cfg.tau_start = 0.0;
  EXPECT_THROW(train(st.topology, st.pool.pairs, cfg), ConfigurationError);
  cfg = {};
  cfg.learning_rate = -1.0;
  EXPECT_THROW(train(st.topology, st.pool.pairs, cfg), ConfigurationError);
  EXPECT_THROW(train(st.topology, {}, TrainConfig{}), PreconditionError);
}

TEST(Train, HistoryCsv) {
  std::ostringstream os;
  write_history_csv(os, {{0, 2.0, 0.5, 0.25, 0.75}});
  EXPECT_EQ(os.str(), "epoch,tau,train_surrogate_loss,val_hard_loss,accuracy\n0,2,0.5,0.25,0.75\n");
}

TEST(Train, LocalMethodLeavesTruthUntouched) {
  // no mistakes at the generating parameters, so nothing is charged
  auto st = make_setup(20, 4, 60, 17);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.keep_best = false;
  auto truth = ModelParams::of(st.truth);
  auto res = train(st.topology, st.pool.pairs, cfg, std::nullopt, truth);
  EXPECT_EQ(res.params, truth);
  for (const auto& h : res.history) EXPECT_EQ(h.train_surrogate_loss, 0.0);
}

TEST(Train, LocalMethodImprovesHeldOutAccuracy) {
  auto st = make_setup(30, 2, 400, 18);
  std::vector<SamplePair> tr(st.pool.pairs.begin(), st.pool.pairs.begin() + 300),
      te(st.pool.pairs.begin() + 300, st.pool.pairs.end());
  TrainConfig cfg;
  cfg.epochs = 5;
  std::mt19937_64 rng(cfg.seed);
  auto init = init_params(st.topology, rng, cfg.init);
  auto res = train(st.topology, tr, cfg);
  EXPECT_FALSE(res.aborted);
  EXPECT_GT(evaluate(st.topology, res.params, te).accuracy, evaluate(st.topology, init, te).accuracy + 0.05);
}

TEST(Train, RelaxedMethodRuns) {
  auto st = make_setup(12, 2, 30, 19);
  TrainConfig cfg;
  cfg.method = TrainConfig::Method::Relaxed;
  cfg.epochs = 2;
  cfg.tau_start = 2.0;
  cfg.tau_end = 20.0;
  cfg.clip_norm = 1.0;
  auto res = train(st.topology, st.pool.pairs, cfg);
  ASSERT_EQ(res.history.size(), 2u);
  for (const auto& h : res.history) EXPECT_TRUE(std::isfinite(h.train_surrogate_loss));
  EXPECT_TRUE(res.params.non_negative());
}
