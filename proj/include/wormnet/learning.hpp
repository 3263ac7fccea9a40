#pragma once

// Fits edge weights and thresholds of the compiled global network to
// initial/final status pairs. Training runs the relaxed forward pass with a
// temperature schedule; every reported metric uses the exact hard pass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "wormnet/compiler.hpp"
#include "wormnet/cvnn.hpp"
#include "wormnet/graph.hpp"
#include "wormnet/params.hpp"
#include "wormnet/status.hpp"

namespace wormnet {

enum class InitScheme { Uniform01, DegreePrior };

template <typename Rng>
ModelParams init_params(const WsnGraph& topology, Rng& rng, InitScheme scheme) {
  const std::size_t k = topology.worm_count();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ModelParams p;
  p.thresholds.assign(topology.node_count(), std::vector<double>(k));
  for (auto& row : p.thresholds)
    for (auto& t : row) t = unit(rng);
  for (const auto& e : topology.edges()) {
    std::vector<double> w(k);
    for (std::size_t j = 0; j < k; ++j)
      w[j] = scheme == InitScheme::Uniform01 ? unit(rng)
                                             : 1.0 / static_cast<double>(topology.in_degree(e.dst) + j + 1);
    p.edge_weights.push_back(std::move(w));
  }
  return p;
}

struct SurrogateLoss {
  double value = 0.0;
  std::vector<Complex> grad;  // dL/d(Re, Im) per output entry
};

/// Mean over nodes of the cross-entropy between the target label and the
/// (K+1)-way distribution q_k = max(Re y_k, 0), q_0 = max(1 - sum_k Re y_k, 0),
/// each smoothed by `smoothing` and normalised. A column that already equals
/// the one-hot target costs nothing. Imaginary parts do not contribute.
inline SurrogateLoss surrogate_loss(std::span<const Complex> output, const InfectionState& target,
                                    double smoothing = 1e-3) {
  const std::size_t n = target.node_count(), k = target.worm_count();
  if (output.size() != n * k) throw DimensionError("surrogate_loss: output length must be N*K");
  SurrogateLoss res;
  res.grad.assign(output.size(), Complex{});
  std::vector<double> q(k + 1);
  for (std::size_t v = 0; v < n; ++v) {
    double ysum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double y = output[v * k + j].real();
      if (!std::isfinite(y)) throw NumericError("surrogate_loss: non-finite output", 0);
      ysum += y;
      q[j + 1] = std::max(y, 0.0);
    }
    q[0] = std::max(1.0 - ysum, 0.0);
    const auto t = static_cast<std::size_t>(target[v]);
    if (q[t] == 1.0 && std::accumulate(q.begin(), q.end(), 0.0) == 1.0) continue;
    for (auto& x : q) x += smoothing;
    const double z = std::accumulate(q.begin(), q.end(), 0.0);
    res.value += -std::log(q[t] / z);
    // dL/dq_c = -[c == t]/q_t + 1/z
    std::vector<double> dq(k + 1, 1.0 / z);
    dq[t] -= 1.0 / q[t];
    const double d0 = 1.0 - ysum > 0.0 ? dq[0] : 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double y = output[v * k + j].real();
      double g = (y > 0.0 ? dq[j + 1] : 0.0) - d0;
      res.grad[v * k + j] = Complex(g / static_cast<double>(n), 0.0);
    }
  }
  res.value /= static_cast<double>(n);
  return res;
}

struct Metrics {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double mean_loss = 0.0;  // fraction of mislabelled nodes, averaged over samples
  std::size_t samples = 0;
};

/// Accuracy over all node labels (K+1 classes); precision, recall and F1
/// macro-averaged over the K worm classes.
inline Metrics score_predictions(const std::vector<InfectionState>& predicted, const std::vector<InfectionState>& truth,
                                 std::size_t worm_count) {
  if (predicted.size() != truth.size()) throw DimensionError("score: sample counts differ");
  if (truth.empty()) throw PreconditionError("score: no samples");
  std::vector<std::size_t> tp(worm_count + 1, 0), pred_n(worm_count + 1, 0), true_n(worm_count + 1, 0);
  std::size_t correct = 0, total = 0;
  Metrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    m.mean_loss += node_loss(predicted[i], truth[i]);
    for (std::size_t v = 0; v < truth[i].node_count(); ++v) {
      auto p = static_cast<std::size_t>(predicted[i][v]), t = static_cast<std::size_t>(truth[i][v]);
      ++total;
      ++pred_n[p];
      ++true_n[t];
      if (p == t) {
        ++correct;
        ++tp[p];
      }
    }
  }
  for (std::size_t c = 1; c <= worm_count; ++c) {
    double prec = pred_n[c] ? static_cast<double>(tp[c]) / static_cast<double>(pred_n[c]) : 0.0;
    double rec = true_n[c] ? static_cast<double>(tp[c]) / static_cast<double>(true_n[c]) : 0.0;
    m.precision += prec;
    m.recall += rec;
    m.f1 += prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  const auto kd = static_cast<double>(worm_count);
  m.precision /= kd;
  m.recall /= kd;
  m.f1 /= kd;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  m.mean_loss /= static_cast<double>(truth.size());
  m.samples = truth.size();
  return m;
}

/// Hard-mode predictions of the network compiled from `graph` (topology plus
/// parameters) on each sample's initial state.
inline Metrics evaluate(const WsnGraph& graph, const std::vector<SamplePair>& samples, CompileOptions opts = {}) {
  if (samples.empty()) throw PreconditionError("evaluate: no samples");
  auto net = build_global_network(graph, opts);
  std::vector<InfectionState> pred, truth;
  for (const auto& s : samples) {
    pred.push_back(run_compiled(net, s.initial, graph.worm_count()));
    truth.push_back(s.final_state);
  }
  return score_predictions(pred, truth, graph.worm_count());
}

inline Metrics evaluate(const WsnGraph& topology, const ModelParams& params, const std::vector<SamplePair>& samples,
                        CompileOptions opts = {}) {
  return evaluate(apply_params(topology, params), samples, opts);
}

/// Uniform label over {0..K} for every node.
template <typename Rng>
Metrics random_baseline(const std::vector<SamplePair>& samples, std::size_t worm_count, Rng& rng) {
  if (samples.empty()) throw PreconditionError("random_baseline: no samples");
  std::uniform_int_distribution<int> label(0, static_cast<int>(worm_count));
  std::vector<InfectionState> pred, truth;
  for (const auto& s : samples) {
    std::vector<int> labels(s.final_state.node_count());
    for (auto& l : labels) l = label(rng);
    pred.emplace_back(std::move(labels), worm_count);
    truth.push_back(s.final_state);
  }
  return score_predictions(pred, truth, worm_count);
}

struct TrainConfig {
  // Relaxed: cross-entropy on the soft output of the whole unrolled network.
  // Local: the hard network's own trajectory supplies the mistakes, and each
  // mistake is charged to the soft stage-1 gate that caused it.
  enum class Method { Relaxed, Local } method = Method::Local;
  double learning_rate = 0.1;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double tau_start = 5.0;
  double tau_end = 5.0;
  std::uint64_t seed = 1;
  InitScheme init = InitScheme::DegreePrior;
  // Hard-mode validation is computed on at most this many samples per epoch.
  std::size_t validation_limit = 200;
  // Batch gradients longer than this (L2) are rescaled; 0 disables.
  double clip_norm = 0.0;
  // Return the parameters with the best validation accuracy seen, counting
  // the initial ones, instead of the last.
  bool keep_best = true;

  double tau_at(std::size_t epoch) const {
    if (epochs <= 1) return tau_start;
    return tau_start + (tau_end - tau_start) * static_cast<double>(epoch) / static_cast<double>(epochs - 1);
  }

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigurationError("learning rate must be >= 0");
    if (epochs == 0) throw ConfigurationError("epochs must be positive");
    if (batch_size == 0) throw ConfigurationError("batch size must be positive");
    if (!(clip_norm >= 0.0)) throw ConfigurationError("clip norm must be >= 0");
    if (!(tau_start > 0.0) || !(tau_end >= tau_start))
      throw ConfigurationError("temperature schedule must be positive and non-decreasing");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double tau = 0.0;
  double train_surrogate_loss = 0.0;
  double val_hard_loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  bool aborted = false;
  std::string abort_reason;
};

namespace detail {

// Stage-1 gate firing levels g = Im(y)/k for the listed output slots, under
// the soft mode. Adds d/dparams of sum(g over `down`) + sum(1 - g over `up`)
// to `grad` and returns that loss.
inline double charge_stage1(const NetworkSpec& stage1, const InfectionState& in, ForwardMode mode,
                            const std::vector<std::size_t>& down, const std::vector<std::size_t>& up,
                            std::vector<double>& grad) {
  if (down.empty() && up.empty()) return 0.0;
  const std::size_t k = in.worm_count();
  auto f = forward(stage1, to_input(in, k), mode);
  std::vector<Complex> og(f.output.size());
  double loss = 0.0;
  for (std::size_t idx : down) {
    const double worm = static_cast<double>(idx % k + 1);
    loss += f.output[idx].imag() / worm;
    og[idx] += Complex(0.0, 1.0 / worm);
  }
  for (std::size_t idx : up) {
    const double worm = static_cast<double>(idx % k + 1);
    loss += 1.0 - f.output[idx].imag() / worm;
    og[idx] -= Complex(0.0, 1.0 / worm);
  }
  auto g = backward(stage1, f.trace, og);
  for (std::size_t p = 0; p < g.size(); ++p) grad[p] += g[p];
  return loss;
}

// Runs the hard global network on one sample and charges its mistakes:
// a node infected by a worm other than its true final label pushes that
// worm's gate down at the step it fired; a node that ends without its true
// label pushes the true worm's gate up at the converged state.
inline double local_sample_gradient(const NetworkSpec& global, const NetworkSpec& stage1, const SamplePair& s,
                                    ForwardMode mode, std::vector<double>& grad) {
  const std::size_t k = s.initial.worm_count(), n = s.initial.node_count();
  auto f = forward(global, to_input(s.initial, k), ForwardMode::hard(), {.early_exit = true, .record = true});
  const std::size_t unit = global.unit_size();
  std::vector<InfectionState> states;
  for (std::size_t i = 0; i < f.trace.post.size(); i += unit) states.push_back(from_output(f.trace.post[i], k, n));

  double loss = 0.0;
  std::vector<std::size_t> down, up;
  for (std::size_t t = 0; t + 1 < states.size(); ++t) {
    down.clear();
    for (std::size_t v = 0; v < n; ++v) {
      const int was = states[t][v], now = states[t + 1][v];
      if (was == 0 && now != 0 && now != s.final_state[v]) down.push_back(flat_index(v, now, k));
    }
    loss += charge_stage1(stage1, states[t], mode, down, {}, grad);
  }
  for (std::size_t v = 0; v < n; ++v) {
    const int want = s.final_state[v];
    if (want != 0 && states.back()[v] != want) up.push_back(flat_index(v, want, k));
  }
  return loss + charge_stage1(stage1, states.back(), mode, {}, up, grad);
}

}  // namespace detail

/// Mini-batch gradient descent; parameters are clamped to >= 0 after every
/// update. `validation` (default: the training samples) is scored in hard
/// mode after each epoch.
inline TrainResult train(const WsnGraph& topology, const std::vector<SamplePair>& samples, const TrainConfig& config,
                         std::optional<std::vector<SamplePair>> validation = std::nullopt,
                         std::optional<ModelParams> initial = std::nullopt) {
  config.validate();
  if (samples.empty()) throw PreconditionError("train: no samples");
  for (const auto& s : samples)
    if (s.initial.node_count() != topology.node_count() || s.initial.worm_count() != topology.worm_count())
      throw DimensionError("train: sample does not match graph");

  std::mt19937_64 rng(config.seed);
  TrainResult res;
  res.params = initial ? *initial : init_params(topology, rng, config.init);
  const std::size_t k = topology.worm_count();
  const bool local = config.method == TrainConfig::Method::Local;
  auto net = build_global_network(apply_params(topology, res.params));
  std::optional<NetworkSpec> stage1;
  if (local) {
    auto g = apply_params(topology, res.params);
    auto layer = build_stage1_layer(g);
    auto binds = stage1_bindings(g, layer);
    stage1.emplace(std::vector<LayerSpec>{std::move(layer)}, 1, std::move(binds));
  }
  std::vector<double> theta = res.params.flatten();

  const auto& val = validation ? *validation : samples;
  std::vector<SamplePair> val_subset(val.begin(), val.begin() + static_cast<std::ptrdiff_t>(std::min(val.size(), config.validation_limit)));

  ModelParams best = res.params;
  double best_acc = config.keep_best ? evaluate(apply_params(topology, res.params), val_subset).accuracy : 0.0;

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double tau = config.tau_at(epoch);
    const ForwardMode mode = ForwardMode::soft(tau);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        std::vector<double> grad(theta.size(), 0.0);
        for (std::size_t i = start; i < end; ++i) {
          const auto& s = samples[order[i]];
          if (local) {
            epoch_loss += detail::local_sample_gradient(net, *stage1, s, mode, grad);
            continue;
          }
          auto f = forward(net, to_input(s.initial, k), mode);
          auto loss = surrogate_loss(f.output, s.final_state);
          epoch_loss += loss.value;
          auto g = backward(net, f.trace, loss.grad);
          for (std::size_t p = 0; p < g.size(); ++p) grad[p] += g[p];
        }
        double scale = config.learning_rate / static_cast<double>(end - start);
        double norm = 0.0;
        for (double g : grad) {
          if (!std::isfinite(g)) throw NumericError("non-finite gradient", 0);
          norm += g * g;
        }
        norm = std::sqrt(norm) / static_cast<double>(end - start);
        if (config.clip_norm > 0.0 && norm > config.clip_norm) scale *= config.clip_norm / norm;
        for (std::size_t p = 0; p < theta.size(); ++p) theta[p] = std::max(0.0, theta[p] - scale * grad[p]);
        net.set_parameters(theta);
        if (stage1) stage1->set_parameters(theta);
      }
    } catch (const NumericError& e) {
      res.aborted = true;
      res.abort_reason = e.what();
      break;
    }
    res.params = ModelParams::unflatten(topology, theta);
    EpochRecord rec{epoch, tau, epoch_loss / static_cast<double>(samples.size()), 0.0, 0.0};
    Metrics m;
    try {
      m = evaluate(apply_params(topology, res.params), val_subset);
    } catch (const ConfigurationError& e) {  // weights outgrew the compiler's LARGE
      res.aborted = true;
      res.abort_reason = e.what();
      break;
    }
    rec.val_hard_loss = m.mean_loss;
    rec.accuracy = m.accuracy;
    res.history.push_back(rec);
    if (config.keep_best && m.accuracy > best_acc) {
      best_acc = m.accuracy;
      best = res.params;
    }
  }
  if (config.keep_best) res.params = best;
  return res;
}

inline void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
  os << "epoch,tau,train_surrogate_loss,val_hard_loss,accuracy\n";
  for (const auto& r : history)
    os << r.epoch << ',' << r.tau << ',' << r.train_surrogate_loss << ',' << r.val_hard_loss << ',' << r.accuracy
       << '\n';
}

}  // namespace wormnet
