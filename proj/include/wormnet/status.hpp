#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wormnet/error.hpp"

namespace wormnet {

using Complex = std::complex<double>;

/// Per-node infection labels: 0 = innocent, k in [1, K] = infected by worm k.
/// A node carries exactly one label, so seed sets of different worms are
/// disjoint.
class InfectionState {
 public:
  InfectionState() = default;
  InfectionState(std::vector<int> labels, std::size_t worm_count)
      : labels_(std::move(labels)), k_(worm_count) {
    for (std::size_t v = 0; v < labels_.size(); ++v)
      if (labels_[v] < 0 || static_cast<std::size_t>(labels_[v]) > k_)
        throw InvalidLabelError("label " + std::to_string(labels_[v]) + " at node " + std::to_string(v) +
                                " outside [0, " + std::to_string(k_) + "]");
  }

  static InfectionState innocent(std::size_t node_count, std::size_t worm_count) {
    return InfectionState(std::vector<int>(node_count, 0), worm_count);
  }

  std::size_t node_count() const noexcept { return labels_.size(); }
  std::size_t worm_count() const noexcept { return k_; }
  int operator[](std::size_t v) const { return labels_[v]; }
  int label(std::size_t v) const { return labels_.at(v); }
  const std::vector<int>& labels() const noexcept { return labels_; }

  std::size_t infected_count() const noexcept {
    std::size_t c = 0;
    for (int l : labels_) c += l != 0;
    return c;
  }

  friend bool operator==(const InfectionState&, const InfectionState&) = default;

 private:
  std::vector<int> labels_;
  std::size_t k_ = 0;
};

/// K x N complex one-hot encoding of a state, stored column-major so that the
/// flat index of (worm k, node v) is v*K + (k-1).
class AllInfectionMatrix {
 public:
  AllInfectionMatrix(std::size_t worm_count, std::size_t node_count)
      : k_(worm_count), n_(node_count), entries_(worm_count * node_count) {}

  AllInfectionMatrix(std::size_t worm_count, std::size_t node_count, std::vector<Complex> flat)
      : k_(worm_count), n_(node_count), entries_(std::move(flat)) {
    if (entries_.size() != k_ * n_) throw DimensionError("flat status length must be K*N");
  }

  std::size_t worm_count() const noexcept { return k_; }
  std::size_t node_count() const noexcept { return n_; }

  // Row k is 1-based.
  Complex& at(int k, std::size_t v) { return entries_.at(v * k_ + static_cast<std::size_t>(k - 1)); }
  const Complex& at(int k, std::size_t v) const { return entries_.at(v * k_ + static_cast<std::size_t>(k - 1)); }

  const std::vector<Complex>& flat() const noexcept { return entries_; }

  friend bool operator==(const AllInfectionMatrix&, const AllInfectionMatrix&) = default;

 private:
  std::size_t k_;
  std::size_t n_;
  std::vector<Complex> entries_;
};

inline std::size_t flat_index(std::size_t v, int k, std::size_t worm_count) {
  return v * worm_count + static_cast<std::size_t>(k - 1);
}

inline AllInfectionMatrix encode_status(const InfectionState& state, std::size_t worm_count) {
  AllInfectionMatrix m(worm_count, state.node_count());
  for (std::size_t v = 0; v < state.node_count(); ++v) {
    int l = state[v];
    if (l < 0 || static_cast<std::size_t>(l) > worm_count)
      throw InvalidLabelError("label " + std::to_string(l) + " invalid for K=" + std::to_string(worm_count));
    if (l != 0) m.at(l, v) = Complex(1.0, 0.0);
  }
  return m;
}

inline InfectionState decode_status(const AllInfectionMatrix& m) {
  std::vector<int> labels(m.node_count(), 0);
  for (std::size_t v = 0; v < m.node_count(); ++v) {
    for (std::size_t k = 1; k <= m.worm_count(); ++k) {
      const Complex& z = m.at(static_cast<int>(k), v);
      if (z == Complex(0.0, 0.0)) continue;
      if (z != Complex(1.0, 0.0) || labels[v] != 0)
        throw MalformedStatusError("column " + std::to_string(v) + " is not one-hot or zero");
      labels[v] = static_cast<int>(k);
    }
  }
  return InfectionState(std::move(labels), m.worm_count());
}

/// True when every column is all-zero or a single (1,0).
inline bool is_one_hot_or_zero(const AllInfectionMatrix& m) {
  try {
    (void)decode_status(m);
    return true;
  } catch (const MalformedStatusError&) {
    return false;
  }
}

/// Fraction of nodes whose labels differ.
inline double node_loss(const InfectionState& predicted, const InfectionState& truth) {
  if (predicted.node_count() != truth.node_count())
    throw DimensionError("node_loss: node counts differ");
  if (truth.node_count() == 0) return 0.0;
  std::size_t diff = 0;
  for (std::size_t v = 0; v < truth.node_count(); ++v) diff += predicted[v] != truth[v];
  return static_cast<double>(diff) / static_cast<double>(truth.node_count());
}

struct SamplePair {
  InfectionState initial;
  InfectionState final_state;

  friend bool operator==(const SamplePair&, const SamplePair&) = default;
};

struct SamplePool {
  std::string graph_id;
  std::size_t worm_count = 0;
  std::size_t num_seeds = 0;
  std::uint64_t master_seed = 0;
  std::vector<SamplePair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }

  friend bool operator==(const SamplePool&, const SamplePool&) = default;
};

}  // namespace wormnet
