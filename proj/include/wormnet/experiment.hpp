#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "wormnet/datagen.hpp"
#include "wormnet/learning.hpp"

namespace wormnet {

struct TrialConfig {
  std::size_t pool_size = 1000;
  std::size_t num_seeds = 0;  // 0: N/2
  std::size_t train_size = 600;
  std::size_t test_size = 400;
  TrainConfig train;
};

struct TrialResult {
  Metrics proposed;
  Metrics random;
  bool aborted = false;
};

/// One simulation on a fixed topology: fresh parameters, pool, split,
/// training run and random baseline, all drawn from `seed`.
inline TrialResult run_trial(const WsnGraph& topology, const TrialConfig& cfg, std::uint64_t seed) {
  const std::size_t seeds = cfg.num_seeds ? cfg.num_seeds : topology.node_count() / 2;
  auto param_rng = child_rng(seed, 0);
  auto truth = apply_params(topology, sample_model_params(topology, param_rng));
  auto pool = gen_sample_pool(truth, cfg.pool_size, seeds, child_rng(seed, 1)());
  auto split_rng = child_rng(seed, 2);
  auto split = split_pool(pool, cfg.train_size, cfg.test_size, split_rng);
  if (split.test.empty()) throw PreconditionError("trial needs a non-empty test split");

  TrialResult r;
  TrainConfig tc = cfg.train;
  tc.seed = child_rng(seed, 3)();
  ModelParams params;
  if (split.train.empty()) {
    std::mt19937_64 init_rng(tc.seed);
    params = init_params(topology, init_rng, tc.init);
  } else {
    auto res = train(topology, split.train, tc);
    params = res.params;
    r.aborted = res.aborted;
  }
  r.proposed = evaluate(topology, params, split.test);
  auto baseline_rng = child_rng(seed, 4);
  r.random = random_baseline(split.test, topology.worm_count(), baseline_rng);
  return r;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

struct MetricSummary {
  MeanStd f1, precision, recall, accuracy;
};

inline MetricSummary summarize(const std::vector<Metrics>& runs) {
  std::vector<double> f1, p, r, a;
  for (const auto& m : runs) {
    f1.push_back(m.f1);
    p.push_back(m.precision);
    r.push_back(m.recall);
    a.push_back(m.accuracy);
  }
  return {mean_std(f1), mean_std(p), mean_std(r), mean_std(a)};
}

struct RepeatedResult {
  MetricSummary proposed;
  MetricSummary random;
  std::size_t aborted = 0;
};

/// `repeats` trials with seeds child_rng(seed, r).
inline RepeatedResult run_repeated(const WsnGraph& topology, const TrialConfig& cfg, std::size_t repeats,
                                   std::uint64_t seed) {
  std::vector<Metrics> prop, rnd;
  RepeatedResult out;
  for (std::size_t r = 0; r < repeats; ++r) {
    auto t = run_trial(topology, cfg, child_rng(seed, r)());
    prop.push_back(t.proposed);
    rnd.push_back(t.random);
    out.aborted += t.aborted;
  }
  out.proposed = summarize(prop);
  out.random = summarize(rnd);
  return out;
}

}  // namespace wormnet
