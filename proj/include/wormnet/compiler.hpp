#pragma once

// Builds the layered complex network that reproduces one propagation step
// exactly (the local block) and its N-fold unrolling (the global network).
//
// Block layout for K = 2^P worms and N nodes (2P + 4 layers):
//   stage 1       N*K  -> N*K     per (node, worm): (incoming sum, worm) or 0
//   P levels      pairwise maxima, two layers each
//   merge         -> N            per node: (max sum, winning worm) or 0
//   format 1      N   -> N*K      thermometer code of the winning worm
//   format 2      N*K -> N*K      one-hot status
//
// Every comparison level picks, per pair (a, b), the lexicographically larger
// of (real, imag); since a lower slot always carries the lower worm index this
// resolves equal sums towards the larger worm. Values move through the
// gadget only via additions of exact zeros, so hard-mode outputs are bit-exact
// copies of the stage-1 sums.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wormnet/cvnn.hpp"
#include "wormnet/graph.hpp"
#include "wormnet/propagation.hpp"
#include "wormnet/status.hpp"

namespace wormnet {

struct CompileOptions {
  double large = 1000.0;  // self-link weight keeping infected nodes infected
};

struct LocalBlockPlan {
  std::size_t node_count = 0;
  std::size_t worm_count = 0;
  std::size_t levels = 0;  // P
  LayerSpec stage1;
  std::vector<std::pair<LayerSpec, LayerSpec>> comparison_levels;
  LayerSpec merge;
  std::pair<LayerSpec, LayerSpec> format_adjust;

  std::size_t layer_count() const { return 1 + 2 * comparison_levels.size() + 1 + 2; }

  std::vector<LayerSpec> layers() const {
    std::vector<LayerSpec> out{stage1};
    for (const auto& [c1, c2] : comparison_levels) {
      out.push_back(c1);
      out.push_back(c2);
    }
    out.push_back(merge);
    out.push_back(format_adjust.first);
    out.push_back(format_adjust.second);
    return out;
  }
};

inline void require_power_of_two(std::size_t k) {
  if (!is_power_of_two_worms(k))
    throw StructureError("worm count " + std::to_string(k) + " is not a power of two >= 2");
}

inline void check_large(const WsnGraph& g, double large) {
  const double bound = g.max_in_weight_sum() + g.max_threshold();
  if (!(large > bound))
    throw ConfigurationError("LARGE=" + std::to_string(large) + " does not exceed max in-weight sum + max threshold (" +
                             std::to_string(bound) + ")");
}

/// Stage-1 layer: weighted sums per (node, worm) with a support count in the
/// imaginary part, gated by the node's threshold.
inline LayerSpec build_stage1_layer(const WsnGraph& g, CompileOptions opts = {}) {
  check_large(g, opts.large);
  const std::size_t n = g.node_count(), k = g.worm_count();
  std::vector<WeightEntry> entries;
  entries.reserve(g.edge_count() * k + n * k);
  for (const auto& e : g.edges())
    for (std::size_t w = 1; w <= k; ++w)
      entries.push_back({flat_index(e.dst, static_cast<int>(w), k), flat_index(e.src, static_cast<int>(w), k),
                         Complex(e.weights[w - 1], 1.0)});
  for (NodeId v = 0; v < n; ++v)
    for (std::size_t w = 1; w <= k; ++w) {
      auto i = flat_index(v, static_cast<int>(w), k);
      entries.push_back({i, i, Complex(opts.large, 1.0)});
    }
  std::vector<Activation> acts(n * k);
  for (NodeId v = 0; v < n; ++v)
    for (std::size_t w = 1; w <= k; ++w)
      acts[flat_index(v, static_cast<int>(w), k)] =
          Activation::support_threshold(g.threshold(v, static_cast<int>(w)), static_cast<int>(w));
  return LayerSpec(n * k, n * k, std::move(entries), {}, std::move(acts));
}

/// P levels of pairwise comparison. Level p consumes I_p = K/2^(p-1) slots
/// per node and yields O_p = K/2^p winners; each winner is carried as two
/// neurons (at most one nonzero) that the next layer adds back together.
inline std::vector<std::pair<LayerSpec, LayerSpec>> build_comparison_levels(std::size_t k, std::size_t n) {
  require_power_of_two(k);
  const std::size_t levels = log2_worms(k);
  const double offset = static_cast<double>(k + 1);
  std::vector<std::pair<LayerSpec, LayerSpec>> out;
  std::size_t in_per_node = k;  // neurons per node feeding this level
  for (std::size_t p = 1; p <= levels; ++p) {
    const std::size_t slots = k >> (p - 1);   // I_p
    const std::size_t pairs = slots / 2;      // O_p
    const std::size_t per_slot = p == 1 ? 1 : 2;
    std::vector<WeightEntry> w1;
    std::vector<Activation> a1(n * pairs * 4);
    for (NodeId v = 0; v < n; ++v)
      for (std::size_t q = 0; q < pairs; ++q) {
        const std::size_t row = v * pairs * 4 + q * 4;
        const std::size_t a0 = v * in_per_node + (2 * q) * per_slot;
        const std::size_t b0 = v * in_per_node + (2 * q + 1) * per_slot;
        for (std::size_t s = 0; s < per_slot; ++s) {
          w1.push_back({row + 0, a0 + s, Complex(1, 0)});
          w1.push_back({row + 1, b0 + s, Complex(1, 0)});
          w1.push_back({row + 2, a0 + s, Complex(1, 0)});
          w1.push_back({row + 2, b0 + s, Complex(-1, 0)});
          w1.push_back({row + 3, a0 + s, Complex(-1, 0)});
          w1.push_back({row + 3, b0 + s, Complex(1, 0)});
        }
        a1[row + 0] = Activation::identity();
        a1[row + 1] = Activation::identity();
        a1[row + 2] = Activation::lex_indicator(true, offset);
        a1[row + 3] = Activation::lex_indicator(false, offset);
      }
    LayerSpec c1(n * in_per_node, n * pairs * 4, std::move(w1), {}, std::move(a1));

    std::vector<WeightEntry> w2;
    std::vector<Complex> b2(n * pairs * 2, Complex(0.0, -offset));
    std::vector<Activation> a2(n * pairs * 2, Activation::im_gate(-0.5));
    for (NodeId v = 0; v < n; ++v)
      for (std::size_t q = 0; q < pairs; ++q) {
        const std::size_t src = v * pairs * 4 + q * 4, dst = v * pairs * 2 + q * 2;
        w2.push_back({dst, src + 0, Complex(1, 0)});
        w2.push_back({dst, src + 2, Complex(1, 0)});
        w2.push_back({dst + 1, src + 1, Complex(1, 0)});
        w2.push_back({dst + 1, src + 3, Complex(1, 0)});
      }
    LayerSpec c2(n * pairs * 4, n * pairs * 2, std::move(w2), std::move(b2), std::move(a2));
    out.emplace_back(std::move(c1), std::move(c2));
    in_per_node = pairs * 2;
  }
  return out;
}

/// Adds the two carrier neurons left by the last level: per node the result
/// is (largest stage-1 sum, its worm), or (0, 0) when nothing qualifies.
inline LayerSpec build_merge_layer(std::size_t n) {
  std::vector<WeightEntry> w;
  for (NodeId v = 0; v < n; ++v) {
    w.push_back({v, 2 * v, Complex(1, 0)});
    w.push_back({v, 2 * v + 1, Complex(1, 0)});
  }
  return LayerSpec(2 * n, n, std::move(w), {}, std::vector<Activation>(n, Activation::identity()));
}

/// (max, worm) per node -> K x N one-hot status. The first layer emits the
/// thermometer code [worm >= k]; the second takes adjacent differences.
inline std::pair<LayerSpec, LayerSpec> build_format_adjustment(std::size_t k, std::size_t n) {
  require_power_of_two(k);
  std::vector<WeightEntry> w1, w2;
  std::vector<Activation> a1(n * k), a2(n * k, Activation::one_hot_gate(0.5));
  for (NodeId v = 0; v < n; ++v)
    for (std::size_t l = 1; l <= k; ++l) {
      const auto i = flat_index(v, static_cast<int>(l), k);
      w1.push_back({i, v, Complex(1, 0)});
      a1[i] = Activation::index_gate(static_cast<int>(l));
      w2.push_back({i, i, Complex(1, 0)});
      if (l < k) w2.push_back({i, i + 1, Complex(-1, 0)});
    }
  return {LayerSpec(n, n * k, std::move(w1), {}, std::move(a1)),
          LayerSpec(n * k, n * k, std::move(w2), {}, std::move(a2))};
}

inline LocalBlockPlan plan_local_block(const WsnGraph& g, CompileOptions opts = {}) {
  require_power_of_two(g.worm_count());
  LocalBlockPlan plan;
  plan.node_count = g.node_count();
  plan.worm_count = g.worm_count();
  plan.levels = log2_worms(g.worm_count());
  plan.stage1 = build_stage1_layer(g, opts);
  plan.comparison_levels = build_comparison_levels(g.worm_count(), g.node_count());
  plan.merge = build_merge_layer(g.node_count());
  plan.format_adjust = build_format_adjustment(g.worm_count(), g.node_count());
  return plan;
}

/// Trainable parameters of a compiled network, in binding order: every edge
/// weight (edge-major, worm-minor), then every threshold (node-major,
/// worm-minor).
inline std::vector<ParameterBinding> stage1_bindings(const WsnGraph& g, const LayerSpec& stage1) {
  const std::size_t k = g.worm_count();
  std::vector<ParameterBinding> out;
  out.reserve(g.edge_count() * k + g.node_count() * k);
  for (const auto& e : g.edges())
    for (std::size_t w = 1; w <= k; ++w) {
      auto row = flat_index(e.dst, static_cast<int>(w), k), col = flat_index(e.src, static_cast<int>(w), k);
      out.push_back({"w[" + std::to_string(e.src) + "->" + std::to_string(e.dst) + "][" + std::to_string(w) + "]",
                     {{0, SiteKind::WeightRe, stage1.find_entry(row, col)}}});
    }
  for (NodeId v = 0; v < g.node_count(); ++v)
    for (std::size_t w = 1; w <= k; ++w)
      out.push_back({"theta[" + std::to_string(v) + "][" + std::to_string(w) + "]",
                     {{0, SiteKind::GateParam, flat_index(v, static_cast<int>(w), k)}}});
  return out;
}

/// One propagation step as a network of 2P+4 layers.
inline NetworkSpec build_local_block(const WsnGraph& g, CompileOptions opts = {}) {
  auto plan = plan_local_block(g, opts);
  auto bindings = stage1_bindings(g, plan.stage1);
  return NetworkSpec(plan.layers(), 1, std::move(bindings));
}

/// The local block unrolled N times with every parameter shared.
inline NetworkSpec build_global_network(const WsnGraph& g, CompileOptions opts = {}) {
  auto plan = plan_local_block(g, opts);
  auto bindings = stage1_bindings(g, plan.stage1);
  return NetworkSpec(plan.layers(), g.node_count(), std::move(bindings));
}

inline std::vector<Complex> to_input(const InfectionState& s, std::size_t k) { return encode_status(s, k).flat(); }

inline InfectionState from_output(const std::vector<Complex>& out, std::size_t k, std::size_t n) {
  return decode_status(AllInfectionMatrix(k, n, out));
}

/// Hard forward of a compiled network on a state.
inline InfectionState run_compiled(const NetworkSpec& net, const InfectionState& s, std::size_t k,
                                   bool early_exit = true) {
  auto res = forward(net, to_input(s, k), ForwardMode::hard(), {.early_exit = early_exit, .record = false});
  return from_output(res.output, k, s.node_count());
}

/// Decoded status after each repetition of the unit (hard mode).
inline std::vector<InfectionState> block_states(const NetworkSpec& net, const InfectionState& s, std::size_t k) {
  auto res = forward(net, to_input(s, k), ForwardMode::hard());
  std::vector<InfectionState> out{s};
  for (std::size_t b = 1; b * net.unit_size() < res.trace.post.size(); ++b)
    out.push_back(from_output(res.trace.post[b * net.unit_size()], k, s.node_count()));
  return out;
}

struct Counterexample {
  InfectionState initial;
  InfectionState expected;
  std::optional<InfectionState> got;  // empty when the output was not a valid status
  std::string detail;
};

struct EquivalenceReport {
  std::size_t trials = 0;
  std::size_t mismatches = 0;
  std::optional<Counterexample> first_counterexample;

  bool ok() const noexcept { return mismatches == 0; }
};

namespace detail {

inline std::string labels_str(const InfectionState& s) {
  std::string out;
  for (int l : s.labels()) out += (out.empty() ? "" : " ") + std::to_string(l);
  return out;
}

inline void check_one(const NetworkSpec& net, const WsnGraph& g, const InfectionState& init, EquivalenceReport& rep) {
  ++rep.trials;
  const std::size_t k = g.worm_count();
  auto expected = propagate(g, init);
  std::optional<InfectionState> got;
  std::string detail;
  try {
    got = run_compiled(net, init, k);
  } catch (const Error& e) {
    detail = e.what();
  }
  if (got && *got == expected.final_state) return;
  ++rep.mismatches;
  if (rep.first_counterexample) return;
  // Step-by-step diff against the simulator trace.
  try {
    auto blocks = block_states(net, init, k);
    for (std::size_t t = 0; t < blocks.size(); ++t) {
      const auto& ref = expected.trace.states[std::min(t, expected.trace.states.size() - 1)];
      if (!(blocks[t] == ref)) {
        detail += "first divergence at step " + std::to_string(t) + ": simulator [" + labels_str(ref) +
                  "] network [" + labels_str(blocks[t]) + "]";
        break;
      }
    }
  } catch (const Error& e) {
    if (detail.empty()) detail = e.what();
  }
  rep.first_counterexample = Counterexample{init, expected.final_state, got, detail};
}

}  // namespace detail

/// Random initial state: infection probability drawn per call, then each
/// infected node gets a uniform worm.
template <typename Rng>
InfectionState random_state(std::size_t n, std::size_t k, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> worm(1, static_cast<int>(k));
  const double density = unit(rng);
  std::vector<int> labels(n, 0);
  for (auto& l : labels)
    if (unit(rng) < density) l = worm(rng);
  return InfectionState(std::move(labels), k);
}

/// Compares a compiled network against the simulator on random initial states.
inline EquivalenceReport verify_network(const NetworkSpec& net, const WsnGraph& g, std::size_t trials,
                                        std::uint64_t seed) {
  if (trials == 0) throw PreconditionError("verify: trials must be >= 1");
  std::mt19937_64 rng(seed);
  EquivalenceReport rep;
  for (std::size_t t = 0; t < trials; ++t)
    detail::check_one(net, g, random_state(g.node_count(), g.worm_count(), rng), rep);
  return rep;
}

/// Compares on every one of the (K+1)^N initial states.
inline EquivalenceReport verify_network_exhaustive(const NetworkSpec& net, const WsnGraph& g,
                                                   std::uint64_t cap = 1'000'000) {
  if (state_space_size(g.node_count(), g.worm_count(), cap) > cap)
    throw SizeError("exhaustive verification: (K+1)^N exceeds cap " + std::to_string(cap));
  EquivalenceReport rep;
  for_each_state(g.node_count(), g.worm_count(),
                 [&](std::uint64_t, const InfectionState& s) { detail::check_one(net, g, s, rep); });
  return rep;
}

inline EquivalenceReport verify_equivalence(const WsnGraph& g, std::size_t trials, std::uint64_t seed,
                                            CompileOptions opts = {}) {
  return verify_network(build_global_network(g, opts), g, trials, seed);
}

inline EquivalenceReport verify_equivalence_exhaustive(const WsnGraph& g, CompileOptions opts = {}) {
  return verify_network_exhaustive(build_global_network(g, opts), g);
}

}  // namespace wormnet
