#pragma once

// Network checkpoint, text format version 1:
//
//   cvnnet 1
//   layers L repeats R
//   layer i in D_in out D_out entries E biases B
//   w row col re im                    (E lines)
//   b neuron re im                     (B lines, nonzero biases only)
//   a neuron kind param index strict scale   (D_out lines)
//   ...
//   bindings P
//   bind name S (layer site index)*S   (P lines)
//
// kind and site are the lowercase names below.

#include <array>
#include <istream>
#include <ostream>
#include <string>

#include "wormnet/cvnn.hpp"
#include "wormnet/io.hpp"

namespace wormnet::io {

inline constexpr std::array<std::string_view, 8> kGateNames{"identity", "threshold", "support", "compare",
                                                             "lex",      "imgate",    "index",   "onehot"};
inline constexpr std::array<std::string_view, 5> kSiteNames{"wre", "wim", "bre", "bim", "gate"};

template <std::size_t N>
std::size_t lookup(const std::array<std::string_view, N>& names, const std::string& s, std::string_view what) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return i;
  throw ParseError("unknown " + std::string(what) + " '" + s + "'");
}

inline void write_network(std::ostream& os, const NetworkSpec& net) {
  os << "cvnnet 1\nlayers " << net.unit_size() << " repeats " << net.repeats() << '\n';
  for (std::size_t l = 0; l < net.unit_size(); ++l) {
    const auto& layer = net.unit_layers()[l];
    std::size_t nb = 0;
    for (const auto& b : layer.bias()) nb += b != Complex{};
    os << "layer " << l << " in " << layer.in_dim() << " out " << layer.out_dim() << " entries "
       << layer.weights().size() << " biases " << nb << '\n';
    for (const auto& w : layer.weights())
      os << "w " << w.row << ' ' << w.col << ' ' << fmt_real(w.value.real()) << ' ' << fmt_real(w.value.imag())
         << '\n';
    for (std::size_t n = 0; n < layer.out_dim(); ++n)
      if (layer.bias()[n] != Complex{})
        os << "b " << n << ' ' << fmt_real(layer.bias()[n].real()) << ' ' << fmt_real(layer.bias()[n].imag()) << '\n';
    for (std::size_t n = 0; n < layer.out_dim(); ++n) {
      const auto& a = layer.activations()[n];
      os << "a " << n << ' ' << kGateNames[static_cast<std::size_t>(a.kind)] << ' ' << fmt_real(a.param) << ' '
         << a.index << ' ' << (a.strict ? 1 : 0) << ' ' << fmt_real(a.scale) << '\n';
    }
  }
  os << "bindings " << net.parameter_count() << '\n';
  for (const auto& b : net.bindings()) {
    os << "bind " << b.name << ' ' << b.sites.size();
    for (const auto& s : b.sites)
      os << ' ' << s.layer << ' ' << kSiteNames[static_cast<std::size_t>(s.kind)] << ' ' << s.index;
    os << '\n';
  }
}

inline NetworkSpec read_network(std::istream& is) {
  TokenReader r(is);
  r.header("cvnnet", 1);
  const auto count = r.count("layers"), repeats = r.count("repeats");
  std::vector<LayerSpec> layers;
  for (std::size_t l = 0; l < count; ++l) {
    if (r.count("layer") != l) throw ParseError("layers out of order");
    const auto in = r.count("in"), out = r.count("out"), entries = r.count("entries"), biases = r.count("biases");
    std::vector<WeightEntry> w(entries);
    for (auto& e : w) {
      r.expect("w");
      e.row = r.number<std::size_t>("row");
      e.col = r.number<std::size_t>("col");
      double re = r.real("weight re");
      e.value = Complex(re, r.real("weight im"));
    }
    std::vector<Complex> bias(out);
    for (std::size_t i = 0; i < biases; ++i) {
      auto n = r.count("b");
      if (n >= out) throw ParseError("bias neuron out of range");
      double re = r.real("bias re");
      bias[n] = Complex(re, r.real("bias im"));
    }
    std::vector<Activation> acts(out);
    for (std::size_t i = 0; i < out; ++i) {
      if (r.count("a") != i) throw ParseError("activations out of order");
      Activation a;
      a.kind = static_cast<GateKind>(lookup(kGateNames, r.next("gate kind"), "gate kind"));
      a.param = r.real("gate param");
      a.index = r.number<int>("gate index");
      a.strict = r.number<int>("gate strict") != 0;
      a.scale = r.real("gate scale");
      acts[i] = a;
    }
    try {
      layers.emplace_back(in, out, std::move(w), std::move(bias), std::move(acts));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError("invalid layer " + std::to_string(l) + ": " + e.what());
    }
  }
  const auto nb = r.count("bindings");
  std::vector<ParameterBinding> binds(nb);
  for (auto& b : binds) {
    r.expect("bind");
    b.name = r.next("binding name");
    const auto sites = r.number<std::size_t>("site count");
    for (std::size_t s = 0; s < sites; ++s) {
      BindingSite site;
      site.layer = r.number<std::size_t>("site layer");
      site.kind = static_cast<SiteKind>(lookup(kSiteNames, r.next("site kind"), "site kind"));
      site.index = r.number<std::size_t>("site index");
      b.sites.push_back(site);
    }
  }
  if (!r.done()) throw ParseError("trailing data after network");
  try {
    return NetworkSpec(std::move(layers), repeats, std::move(binds));
  } catch (const Error& e) {
    throw ParseError(std::string("invalid network: ") + e.what());
  }
}

inline void save_network(const std::string& path, const NetworkSpec& net) {
  save_file(path, net, [](std::ostream& os, const NetworkSpec& x) { write_network(os, x); });
}
inline NetworkSpec load_network(const std::string& path) {
  return load_file(path, [](std::istream& is) { return read_network(is); });
}

}  // namespace wormnet::io
