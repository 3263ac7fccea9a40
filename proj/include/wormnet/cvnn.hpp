#pragma once

// Complex-valued layered networks: sparse complex layers with per-neuron
// gates, an exact ("hard") forward pass, a temperature-relaxed forward pass
// and a backward pass over the real/imaginary split of every value.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wormnet/error.hpp"
#include "wormnet/status.hpp"

namespace wormnet {

inline Complex cmul(Complex a, Complex b) noexcept {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

enum class GateKind {
  Identity,          // x
  Threshold,         // x if Re(x) >= theta
  SupportThreshold,  // (Re(x), index) if Re(x) >= theta and Im(x) >= 1/2
  Compare,           // (Im(x), Re(x)) if Im(x) >= 0
  LexIndicator,      // (0, scale) if (Re, Im) >lex 0 (strict) or >=lex 0
  ImGate,            // x if Im(x) >= level
  IndexGate,         // (1,0) if Im(x) >= index - 1/2
  OneHotGate,        // (1,0) if Re(x) > level
};

/// Per-neuron activation. `param` is the continuous parameter (threshold or
/// level) and may be bound to a trainable value.
struct Activation {
  GateKind kind = GateKind::Identity;
  double param = 0.0;
  int index = 0;
  bool strict = false;
  double scale = 1.0;

  static Activation identity() { return {}; }
  static Activation threshold(double theta) { return {GateKind::Threshold, theta}; }
  static Activation support_threshold(double theta, int worm) { return {GateKind::SupportThreshold, theta, worm}; }
  static Activation compare() { return {GateKind::Compare}; }
  static Activation lex_indicator(bool strict, double scale) {
    return {GateKind::LexIndicator, 0.0, 0, strict, scale};
  }
  static Activation im_gate(double level) { return {GateKind::ImGate, level}; }
  static Activation index_gate(int k) { return {GateKind::IndexGate, 0.0, k}; }
  static Activation one_hot_gate(double level) { return {GateKind::OneHotGate, level}; }

  friend bool operator==(const Activation&, const Activation&) = default;
};

/// hard: exact gates. soft(tau): every gate indicator becomes a logistic ramp
/// of temperature tau.
struct ForwardMode {
  bool relaxed = false;
  double tau = 0.0;

  static ForwardMode hard() { return {}; }
  static ForwardMode soft(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw PreconditionError("relaxed mode needs finite tau > 0");
    return {true, tau};
  }
};

/// Partial derivatives of a gate output (yr, yi) with respect to its input
/// (xr, xi) and to its continuous parameter.
struct GateJacobian {
  double rr = 0, ri = 0, ir = 0, ii = 0;  // d y{r,i} / d x{r,i}
  double rp = 0, ip = 0;                  // d y{r,i} / d param
};

namespace detail {

inline bool lex_holds(double re, double im, bool strict) {
  if (re != 0.0) return re > 0.0;
  return strict ? im > 0.0 : im >= 0.0;
}

}  // namespace detail

inline Complex apply_gate(const Activation& a, Complex x, ForwardMode mode, GateJacobian* jac = nullptr) {
  const double xr = x.real(), xi = x.imag();
  if (!mode.relaxed) {
    switch (a.kind) {
      case GateKind::Identity: return x;
      case GateKind::Threshold: return xr >= a.param ? x : Complex{};
      case GateKind::SupportThreshold:
        return (xr >= a.param && xi >= 0.5) ? Complex(xr, static_cast<double>(a.index)) : Complex{};
      case GateKind::Compare: return xi >= 0.0 ? Complex(xi, xr) : Complex{};
      case GateKind::LexIndicator: return detail::lex_holds(xr, xi, a.strict) ? Complex(0.0, a.scale) : Complex{};
      case GateKind::ImGate: return xi >= a.param ? x : Complex{};
      case GateKind::IndexGate: return xi >= a.index - 0.5 ? Complex(1.0, 0.0) : Complex{};
      case GateKind::OneHotGate: return xr > a.param ? Complex(1.0, 0.0) : Complex{};
    }
    return {};
  }

  const double tau = mode.tau;
  GateJacobian j;
  Complex y;
  switch (a.kind) {
    case GateKind::Identity:
      j.rr = j.ii = 1.0;
      y = x;
      break;
    case GateKind::Threshold: {
      double s = sigmoid(tau * (xr - a.param)), ds = tau * s * (1.0 - s);
      y = x * s;
      j.rr = s + xr * ds;
      j.ir = xi * ds;
      j.ii = s;
      j.rp = -xr * ds;
      j.ip = -xi * ds;
      break;
    }
    case GateKind::SupportThreshold: {
      double s1 = sigmoid(tau * (xr - a.param)), d1 = tau * s1 * (1.0 - s1);
      double s2 = sigmoid(tau * (xi - 0.5)), d2 = tau * s2 * (1.0 - s2);
      double g = s1 * s2, k = a.index;
      y = Complex(xr * g, k * g);
      j.rr = g + xr * d1 * s2;
      j.ri = xr * s1 * d2;
      j.ir = k * d1 * s2;
      j.ii = k * s1 * d2;
      j.rp = -xr * d1 * s2;
      j.ip = -k * d1 * s2;
      break;
    }
    case GateKind::Compare: {
      double s = sigmoid(tau * xi), ds = tau * s * (1.0 - s);
      y = Complex(xi * s, xr * s);
      j.ri = s + xi * ds;
      j.ir = s;
      j.ii = xr * ds;
      break;
    }
    case GateKind::LexIndicator: {
      double s = sigmoid(tau * xr), ds = tau * s * (1.0 - s);
      y = Complex(0.0, a.scale * s);
      j.ir = a.scale * ds;
      break;
    }
    case GateKind::ImGate: {
      double s = sigmoid(tau * (xi - a.param)), ds = tau * s * (1.0 - s);
      y = x * s;
      j.rr = s;
      j.ri = xr * ds;
      j.ii = s + xi * ds;
      j.rp = -xr * ds;
      j.ip = -xi * ds;
      break;
    }
    case GateKind::IndexGate: {
      double s = sigmoid(tau * (xi - (a.index - 0.5))), ds = tau * s * (1.0 - s);
      y = Complex(s, 0.0);
      j.ri = ds;
      break;
    }
    case GateKind::OneHotGate: {
      double s = sigmoid(tau * (xr - a.param)), ds = tau * s * (1.0 - s);
      y = Complex(s, 0.0);
      j.rr = ds;
      j.rp = -ds;
      break;
    }
  }
  if (jac) *jac = j;
  return y;
}

struct WeightEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  Complex value;
};

/// One layer: out = gate(W * in + bias), W stored sparse, sorted by (row, col).
class LayerSpec {
 public:
  LayerSpec() = default;
  LayerSpec(std::size_t in_dim, std::size_t out_dim, std::vector<WeightEntry> weights, std::vector<Complex> bias,
            std::vector<Activation> activations)
      : in_dim_(in_dim), out_dim_(out_dim), weights_(std::move(weights)), bias_(std::move(bias)),
        activations_(std::move(activations)) {
    if (bias_.empty()) bias_.assign(out_dim_, Complex{});
    if (bias_.size() != out_dim_) throw DimensionError("bias length must equal out_dim");
    if (activations_.size() != out_dim_) throw DimensionError("one activation per output neuron expected");
    std::stable_sort(weights_.begin(), weights_.end(), [](const WeightEntry& a, const WeightEntry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_start_.assign(out_dim_ + 1, 0);
    for (std::size_t e = 0; e < weights_.size(); ++e) {
      const auto& w = weights_[e];
      if (w.row >= out_dim_ || w.col >= in_dim_) throw DimensionError("weight entry outside layer shape");
      if (e > 0 && weights_[e - 1].row == w.row && weights_[e - 1].col == w.col)
        throw DimensionError("duplicate weight entry");
      if (!std::isfinite(w.value.real()) || !std::isfinite(w.value.imag()))
        throw NumericError("non-finite weight", 0);
      ++row_start_[w.row + 1];
    }
    for (std::size_t r = 0; r < out_dim_; ++r) row_start_[r + 1] += row_start_[r];
    for (const auto& b : bias_)
      if (!std::isfinite(b.real()) || !std::isfinite(b.imag())) throw NumericError("non-finite bias", 0);
  }

  std::size_t in_dim() const noexcept { return in_dim_; }
  std::size_t out_dim() const noexcept { return out_dim_; }
  const std::vector<WeightEntry>& weights() const noexcept { return weights_; }
  const std::vector<Complex>& bias() const noexcept { return bias_; }
  const std::vector<Activation>& activations() const noexcept { return activations_; }

  std::vector<WeightEntry>& mutable_weights() noexcept { return weights_; }
  std::vector<Complex>& mutable_bias() noexcept { return bias_; }
  std::vector<Activation>& mutable_activations() noexcept { return activations_; }

  std::size_t row_begin(std::size_t r) const { return row_start_[r]; }
  std::size_t row_end(std::size_t r) const { return row_start_[r + 1]; }

  /// Index into weights() of entry (row, col), or weights().size() if absent.
  std::size_t find_entry(std::size_t row, std::size_t col) const {
    for (std::size_t e = row_start_.at(row); e < row_start_.at(row + 1); ++e)
      if (weights_[e].col == col) return e;
    return weights_.size();
  }

  Complex weight_at(std::size_t row, std::size_t col) const {
    std::size_t e = find_entry(row, col);
    return e == weights_.size() ? Complex{} : weights_[e].value;
  }

  void pre_activation(std::span<const Complex> in, std::span<Complex> pre) const {
    for (std::size_t r = 0; r < out_dim_; ++r) {
      Complex z{};
      for (std::size_t e = row_start_[r]; e < row_start_[r + 1]; ++e) z += cmul(weights_[e].value, in[weights_[e].col]);
      pre[r] = z + bias_[r];
    }
  }

  friend bool operator==(const LayerSpec& a, const LayerSpec& b) {
    if (a.in_dim_ != b.in_dim_ || a.out_dim_ != b.out_dim_ || a.bias_ != b.bias_ ||
        a.activations_ != b.activations_ || a.weights_.size() != b.weights_.size())
      return false;
    for (std::size_t e = 0; e < a.weights_.size(); ++e) {
      const auto &x = a.weights_[e], &y = b.weights_[e];
      if (x.row != y.row || x.col != y.col || x.value != y.value) return false;
    }
    return true;
  }

 private:
  std::size_t in_dim_ = 0;
  std::size_t out_dim_ = 0;
  std::vector<WeightEntry> weights_;
  std::vector<Complex> bias_;
  std::vector<Activation> activations_;
  std::vector<std::size_t> row_start_;
};

enum class SiteKind { WeightRe, WeightIm, BiasRe, BiasIm, GateParam };

/// A position of a trainable scalar: layer is an index into the repeated unit.
struct BindingSite {
  std::size_t layer = 0;
  SiteKind kind = SiteKind::WeightRe;
  std::size_t index = 0;  // weight entry, bias slot or neuron
  friend bool operator==(const BindingSite&, const BindingSite&) = default;
};

struct ParameterBinding {
  std::string name;
  std::vector<BindingSite> sites;
  friend bool operator==(const ParameterBinding&, const ParameterBinding&) = default;
};

/// Ordered layers, optionally executed `repeats` times in sequence with shared
/// storage, so a bound parameter occupies the same sites in every repetition.
class NetworkSpec {
 public:
  NetworkSpec() = default;
  NetworkSpec(std::vector<LayerSpec> layers, std::size_t repeats = 1, std::vector<ParameterBinding> bindings = {})
      : layers_(std::move(layers)), repeats_(repeats), bindings_(std::move(bindings)) {
    if (layers_.empty()) throw StructureError("network needs at least one layer");
    if (repeats_ == 0) throw StructureError("repeat count must be positive");
    for (std::size_t l = 1; l < layers_.size(); ++l)
      if (layers_[l].in_dim() != layers_[l - 1].out_dim())
        throw DimensionError("layer " + std::to_string(l) + " input does not chain");
    if (repeats_ > 1 && layers_.front().in_dim() != layers_.back().out_dim())
      throw DimensionError("repeated unit must map its input space to itself");
    for (std::size_t p = 0; p < bindings_.size(); ++p) {
      if (bindings_[p].sites.empty()) throw StructureError("binding '" + bindings_[p].name + "' has no sites");
      double v0 = site_value(bindings_[p].sites.front());
      for (const auto& s : bindings_[p].sites)
        if (site_value(s) != v0) throw StructureError("binding '" + bindings_[p].name + "' is inconsistent");
    }
  }

  std::size_t input_dim() const noexcept { return layers_.front().in_dim(); }
  std::size_t output_dim() const noexcept { return layers_.back().out_dim(); }
  std::size_t repeats() const noexcept { return repeats_; }
  std::size_t unit_size() const noexcept { return layers_.size(); }
  std::size_t depth() const noexcept { return layers_.size() * repeats_; }

  const std::vector<LayerSpec>& unit_layers() const noexcept { return layers_; }
  const LayerSpec& layer_at(std::size_t i) const { return layers_.at(i % layers_.size()); }

  const std::vector<ParameterBinding>& bindings() const noexcept { return bindings_; }
  std::size_t parameter_count() const noexcept { return bindings_.size(); }

  double parameter(std::size_t p) const { return site_value(bindings_.at(p).sites.front()); }

  std::vector<double> parameters() const {
    std::vector<double> out(bindings_.size());
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = parameter(p);
    return out;
  }

  void set_parameter(std::size_t p, double value) {
    if (!std::isfinite(value)) throw NumericError("non-finite parameter '" + bindings_.at(p).name + "'", 0);
    for (const auto& s : bindings_.at(p).sites) site_ref(s) = value;
  }

  void set_parameters(std::span<const double> values) {
    if (values.size() != bindings_.size()) throw DimensionError("parameter vector length mismatch");
    for (std::size_t p = 0; p < values.size(); ++p) set_parameter(p, values[p]);
  }

  double site_value(const BindingSite& s) const { return const_cast<NetworkSpec*>(this)->site_ref(s); }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;

 private:
  double& site_ref(const BindingSite& s) {
    if (s.layer >= layers_.size()) throw DimensionError("binding site layer out of range");
    auto& layer = layers_[s.layer];
    auto part = [](Complex& z, bool re) -> double& { return reinterpret_cast<double(&)[2]>(z)[re ? 0 : 1]; };
    switch (s.kind) {
      case SiteKind::WeightRe:
      case SiteKind::WeightIm:
        if (s.index >= layer.weights().size()) throw DimensionError("binding site weight out of range");
        return part(layer.mutable_weights()[s.index].value, s.kind == SiteKind::WeightRe);
      case SiteKind::BiasRe:
      case SiteKind::BiasIm:
        if (s.index >= layer.out_dim()) throw DimensionError("binding site bias out of range");
        return part(layer.mutable_bias()[s.index], s.kind == SiteKind::BiasRe);
      case SiteKind::GateParam:
        if (s.index >= layer.out_dim()) throw DimensionError("binding site neuron out of range");
        return layer.mutable_activations()[s.index].param;
    }
    throw StructureError("unknown binding site kind");
  }

  std::vector<LayerSpec> layers_;
  std::size_t repeats_ = 1;
  std::vector<ParameterBinding> bindings_;
};

/// Per-layer pre/post activations; post[0] is the network input and post[i+1]
/// the output of layer i.
struct ForwardTrace {
  ForwardMode mode;
  std::vector<std::vector<Complex>> pre;
  std::vector<std::vector<Complex>> post;
};

struct ForwardOptions {
  // Hard mode only: stop once a whole repetition leaves its input unchanged.
  bool early_exit = false;
  bool record = true;
};

struct ForwardResult {
  std::vector<Complex> output;
  ForwardTrace trace;
  std::size_t layers_run = 0;
};

inline ForwardResult forward(const NetworkSpec& net, std::span<const Complex> input, ForwardMode mode,
                             ForwardOptions opts = {}) {
  if (input.size() != net.input_dim())
    throw DimensionError("forward: input length " + std::to_string(input.size()) + " != " +
                         std::to_string(net.input_dim()));
  ForwardResult res;
  res.trace.mode = mode;
  std::vector<Complex> cur(input.begin(), input.end()), block_in;
  if (opts.record) res.trace.post.push_back(cur);
  const std::size_t unit = net.unit_size();
  for (std::size_t i = 0; i < net.depth(); ++i) {
    if (i % unit == 0) block_in = cur;
    const LayerSpec& layer = net.layer_at(i);
    std::vector<Complex> pre(layer.out_dim()), out(layer.out_dim());
    layer.pre_activation(cur, pre);
    for (std::size_t n = 0; n < pre.size(); ++n) {
      out[n] = apply_gate(layer.activations()[n], pre[n], mode);
      if (!std::isfinite(pre[n].real()) || !std::isfinite(pre[n].imag()) || !std::isfinite(out[n].real()) ||
          !std::isfinite(out[n].imag()))
        throw NumericError("non-finite value at neuron " + std::to_string(n), i);
    }
    if (opts.record) {
      res.trace.pre.push_back(std::move(pre));
      res.trace.post.push_back(out);
    }
    cur = std::move(out);
    res.layers_run = i + 1;
    if (opts.early_exit && !mode.relaxed && (i + 1) % unit == 0 && cur == block_in) break;
  }
  res.output = std::move(cur);
  return res;
}

/// Gradient with respect to every bound parameter. `output_grad[n]` holds
/// (dL/dRe y_n, dL/dIm y_n). Contributions from all sites and repetitions
/// are summed.
inline std::vector<double> backward(const NetworkSpec& net, const ForwardTrace& trace,
                                    std::span<const Complex> output_grad) {
  if (!trace.mode.relaxed) throw ModeError("backward needs a relaxed trace");
  if (trace.pre.size() != net.depth() || trace.post.size() != net.depth() + 1)
    throw DimensionError("trace does not match network depth");
  if (output_grad.size() != net.output_dim()) throw DimensionError("output gradient length mismatch");

  const std::size_t unit = net.unit_size();
  // Which unit layers need weight / bias / gate gradients.
  std::vector<char> need_w(unit, 0), need_b(unit, 0), need_g(unit, 0);
  for (const auto& b : net.bindings())
    for (const auto& s : b.sites) {
      if (s.kind == SiteKind::WeightRe || s.kind == SiteKind::WeightIm) need_w[s.layer] = 1;
      else if (s.kind == SiteKind::GateParam) need_g[s.layer] = 1;
      else need_b[s.layer] = 1;
    }
  std::vector<std::vector<Complex>> w_grad(unit), b_grad(unit);
  std::vector<std::vector<double>> g_grad(unit);
  for (std::size_t l = 0; l < unit; ++l) {
    if (need_w[l]) w_grad[l].assign(net.unit_layers()[l].weights().size(), Complex{});
    if (need_b[l]) b_grad[l].assign(net.unit_layers()[l].out_dim(), Complex{});
    if (need_g[l]) g_grad[l].assign(net.unit_layers()[l].out_dim(), 0.0);
  }

  std::vector<Complex> g(output_grad.begin(), output_grad.end());
  for (std::size_t i = net.depth(); i-- > 0;) {
    const std::size_t ul = i % unit;
    const LayerSpec& layer = net.layer_at(i);
    const auto& pre = trace.pre[i];
    const auto& in = trace.post[i];
    std::vector<Complex> gz(layer.out_dim());
    for (std::size_t n = 0; n < layer.out_dim(); ++n) {
      GateJacobian j;
      apply_gate(layer.activations()[n], pre[n], trace.mode, &j);
      const double gr = g[n].real(), gi = g[n].imag();
      gz[n] = Complex(gr * j.rr + gi * j.ir, gr * j.ri + gi * j.ii);
      if (need_g[ul]) g_grad[ul][n] += gr * j.rp + gi * j.ip;
      if (need_b[ul]) b_grad[ul][n] += gz[n];
    }
    std::vector<Complex> gin(layer.in_dim());
    const auto& ws = layer.weights();
    for (std::size_t e = 0; e < ws.size(); ++e) {
      const Complex w = ws[e].value, h = in[ws[e].col], d = gz[ws[e].row];
      gin[ws[e].col] += Complex(w.real() * d.real() + w.imag() * d.imag(), -w.imag() * d.real() + w.real() * d.imag());
      if (need_w[ul])
        w_grad[ul][e] += Complex(d.real() * h.real() + d.imag() * h.imag(), -d.real() * h.imag() + d.imag() * h.real());
    }
    g = std::move(gin);
  }

  std::vector<double> out(net.parameter_count(), 0.0);
  for (std::size_t p = 0; p < out.size(); ++p)
    for (const auto& s : net.bindings()[p].sites) switch (s.kind) {
        case SiteKind::WeightRe: out[p] += w_grad[s.layer][s.index].real(); break;
        case SiteKind::WeightIm: out[p] += w_grad[s.layer][s.index].imag(); break;
        case SiteKind::BiasRe: out[p] += b_grad[s.layer][s.index].real(); break;
        case SiteKind::BiasIm: out[p] += b_grad[s.layer][s.index].imag(); break;
        case SiteKind::GateParam: out[p] += g_grad[s.layer][s.index]; break;
      }
  return out;
}

/// Real loss of the network output; writes dL/d(Re, Im) per output into grad.
using LossFn = std::function<double(std::span<const Complex> output, std::vector<Complex>& grad)>;

struct GradientCheck {
  double max_relative_error = 0.0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Compares backward() against central differences on every bound parameter.
inline GradientCheck finite_diff_check(const NetworkSpec& net, std::span<const Complex> input, const LossFn& loss,
                                       double tau, double step = 1e-5, double eps = 1e-6) {
  const ForwardMode mode = ForwardMode::soft(tau);
  GradientCheck res;
  auto fwd = forward(net, input, mode);
  std::vector<Complex> grad;
  loss(fwd.output, grad);
  res.analytic = backward(net, fwd.trace, grad);
  NetworkSpec probe = net;
  std::vector<Complex> scratch;
  auto eval = [&](const NetworkSpec& n) {
    return loss(forward(n, input, mode, {.early_exit = false, .record = false}).output, scratch);
  };
  for (std::size_t p = 0; p < net.parameter_count(); ++p) {
    const double v = net.parameter(p);
    probe.set_parameter(p, v + step);
    double up = eval(probe);
    probe.set_parameter(p, v - step);
    double down = eval(probe);
    probe.set_parameter(p, v);
    double numeric = (up - down) / (2.0 * step);
    res.numeric.push_back(numeric);
    res.max_relative_error =
        std::max(res.max_relative_error, std::abs(res.analytic[p] - numeric) / (std::abs(numeric) + eps));
  }
  return res;
}

}  // namespace wormnet
