#pragma once

// Text file formats. Every file starts with "<magic> <version>"; readers
// reject other versions. Reals are written in shortest round-trip form, so
// write -> read reproduces every value bit for bit. Lines starting with '#'
// are ignored by the readers.
//
//   graph:  wsngraph 1 / nodes N worms K edges M / node id th_1..th_K (N lines)
//           / edge src dst w_1..w_K (M lines)
//   state:  wsnstate 1 / nodes N worms K / labels l_0..l_{N-1}
//   pool:   wsnpool 1 / graph ID nodes N worms K pairs Q seeds S master_seed U
//           / then per pair: initial l_0.. / final l_0..
//   trace:  one line per step "t l_0 .. l_{N-1}" (see write_trace)

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wormnet/error.hpp"
#include "wormnet/graph.hpp"
#include "wormnet/status.hpp"

namespace wormnet::io {

inline std::string fmt_real(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw Error("cannot format real");
  return std::string(buf, p);
}

/// Whitespace tokenizer over the non-comment lines of a stream.
class TokenReader {
 public:
  explicit TokenReader(std::istream& is) {
    std::string line;
    while (std::getline(is, line)) {
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) tokens_.push_back(tok);
    }
  }

  bool done() const noexcept { return pos_ >= tokens_.size(); }

  const std::string& next(std::string_view what) {
    if (done()) throw ParseError("unexpected end of input, expected " + std::string(what));
    return tokens_[pos_++];
  }

  std::string_view peek() const { return done() ? std::string_view{} : std::string_view(tokens_[pos_]); }

  void expect(std::string_view word) {
    const auto& t = next(word);
    if (t != word) throw ParseError("expected '" + std::string(word) + "', found '" + t + "'");
  }

  template <typename T>
  T number(std::string_view what) {
    const auto& t = next(what);
    T v{};
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size())
      throw ParseError("bad " + std::string(what) + ": '" + t + "'");
    return v;
  }

  double real(std::string_view what) { return number<double>(what); }

  std::size_t count(std::string_view word) {
    expect(word);
    return number<std::size_t>(word);
  }

  void header(std::string_view magic, int version) {
    if (done()) throw ParseError("empty input, expected '" + std::string(magic) + "' header");
    expect(magic);
    int v = number<int>("version");
    if (v != version)
      throw ParseError("unsupported " + std::string(magic) + " version " + std::to_string(v));
  }

 private:
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
};

inline void write_graph(std::ostream& os, const WsnGraph& g) {
  os << "wsngraph 1\n";
  os << "nodes " << g.node_count() << " worms " << g.worm_count() << " edges " << g.edge_count() << '\n';
  for (NodeId v = 0; v < g.node_count(); ++v) {
    os << "node " << v;
    for (double t : g.thresholds()[v]) os << ' ' << fmt_real(t);
    os << '\n';
  }
  for (const auto& e : g.edges()) {
    os << "edge " << e.src << ' ' << e.dst;
    for (double w : e.weights) os << ' ' << fmt_real(w);
    os << '\n';
  }
}

inline WsnGraph read_graph(std::istream& is) {
  TokenReader r(is);
  r.header("wsngraph", 1);
  const auto n = r.count("nodes"), k = r.count("worms"), m = r.count("edges");
  std::vector<std::vector<double>> th(n);
  std::vector<char> seen(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    r.expect("node");
    auto id = r.number<std::size_t>("node id");
    if (id >= n || seen[id]) throw ParseError("bad or repeated node id " + std::to_string(id));
    seen[id] = 1;
    th[id].resize(k);
    for (auto& t : th[id]) t = r.real("threshold");
  }
  std::vector<Edge> edges(m);
  for (auto& e : edges) {
    r.expect("edge");
    e.src = r.number<std::size_t>("edge source");
    e.dst = r.number<std::size_t>("edge target");
    e.weights.resize(k);
    for (auto& w : e.weights) w = r.real("weight");
  }
  if (!r.done()) throw ParseError("trailing data after graph: '" + std::string(r.peek()) + "'");
  try {
    return WsnGraph(n, k, std::move(th), std::move(edges));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("invalid graph: ") + e.what());
  }
}

inline std::string graph_to_string(const WsnGraph& g) {
  std::ostringstream os;
  write_graph(os, g);
  return os.str();
}

/// FNV-1a 64 of the canonical graph text, as 16 hex digits.
inline std::string graph_id(const WsnGraph& g) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : graph_to_string(g)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline void write_labels(std::ostream& os, std::string_view tag, const InfectionState& s) {
  os << tag;
  for (int l : s.labels()) os << ' ' << l;
  os << '\n';
}

inline InfectionState read_labels(TokenReader& r, std::string_view tag, std::size_t n, std::size_t k) {
  r.expect(tag);
  std::vector<int> labels(n);
  for (auto& l : labels) l = r.number<int>("label");
  try {
    return InfectionState(std::move(labels), k);
  } catch (const InvalidLabelError& e) {
    throw ParseError(e.what());
  }
}

inline void write_state(std::ostream& os, const InfectionState& s) {
  os << "wsnstate 1\nnodes " << s.node_count() << " worms " << s.worm_count() << '\n';
  write_labels(os, "labels", s);
}

inline InfectionState read_state(std::istream& is) {
  TokenReader r(is);
  r.header("wsnstate", 1);
  const auto n = r.count("nodes"), k = r.count("worms");
  auto s = read_labels(r, "labels", n, k);
  if (!r.done()) throw ParseError("trailing data after state");
  return s;
}

inline void write_pool(std::ostream& os, const SamplePool& pool) {
  const std::size_t n = pool.pairs.empty() ? 0 : pool.pairs.front().initial.node_count();
  os << "wsnpool 1\n";
  os << "graph " << pool.graph_id << " nodes " << n << " worms " << pool.worm_count << " pairs " << pool.size()
     << " seeds " << pool.num_seeds << " master_seed " << pool.master_seed << '\n';
  for (const auto& p : pool.pairs) {
    write_labels(os, "initial", p.initial);
    write_labels(os, "final", p.final_state);
  }
}

inline SamplePool read_pool(std::istream& is) {
  TokenReader r(is);
  r.header("wsnpool", 1);
  SamplePool pool;
  r.expect("graph");
  pool.graph_id = r.next("graph id");
  const auto n = r.count("nodes");
  pool.worm_count = r.count("worms");
  const auto q = r.count("pairs");
  pool.num_seeds = r.count("seeds");
  r.expect("master_seed");
  pool.master_seed = r.number<std::uint64_t>("master seed");
  pool.pairs.reserve(q);
  for (std::size_t i = 0; i < q; ++i) {
    auto init = read_labels(r, "initial", n, pool.worm_count);
    auto fin = read_labels(r, "final", n, pool.worm_count);
    pool.pairs.push_back({std::move(init), std::move(fin)});
  }
  if (!r.done()) throw ParseError("trailing data after pool");
  return pool;
}

template <typename T, typename Writer>
void save_file(const std::string& path, const T& value, Writer&& write) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write(os, value);
  if (!os) throw Error("write to '" + path + "' failed");
}

template <typename Reader>
auto load_file(const std::string& path, Reader&& read) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read(is);
}

inline void save_graph(const std::string& path, const WsnGraph& g) {
  save_file(path, g, [](std::ostream& os, const WsnGraph& x) { write_graph(os, x); });
}
inline WsnGraph load_graph(const std::string& path) { return load_file(path, [](std::istream& is) { return read_graph(is); }); }
inline void save_state(const std::string& path, const InfectionState& s) {
  save_file(path, s, [](std::ostream& os, const InfectionState& x) { write_state(os, x); });
}
inline InfectionState load_state(const std::string& path) {
  return load_file(path, [](std::istream& is) { return read_state(is); });
}
inline void save_pool(const std::string& path, const SamplePool& p) {
  save_file(path, p, [](std::ostream& os, const SamplePool& x) { write_pool(os, x); });
}
inline SamplePool load_pool(const std::string& path) { return load_file(path, [](std::istream& is) { return read_pool(is); }); }

}  // namespace wormnet::io
