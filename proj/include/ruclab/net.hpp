#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ruclab/common.hpp"

namespace ruclab {

/// Index model (0,1] directed by the converse of the usual order:
/// a succeeds b (a is "later") iff a <= b. Models t -> 0+.
struct ReversedUnitInterval {
  using Index = double;
  bool succeeds(Index a, Index b) const { return a <= b; } // a >= b in net order
};

/// Explicit finite directed set. dominates[a][b] == true means a succeeds b.
struct FinitePoset {
  using Index = int;
  std::vector<std::vector<char>> dominates;

  int size() const { return static_cast<int>(dominates.size()); }
  bool succeeds(Index a, Index b) const {
    return dominates.at(static_cast<std::size_t>(a)).at(static_cast<std::size_t>(b)) != 0;
  }
};

/// A net of values over a directed index model, observed through a finite
/// sample set. `cofinal` is the designated co-final anchor sequence
/// (j_{n+1} succeeds j_n); tail statements quantify over samples that
/// succeed a given anchor.
template <class Order, class V>
struct Net {
  using Index = typename Order::Index;

  Order order;
  std::function<V(Index)> eval;
  std::vector<Index> samples;
  std::vector<Index> cofinal;

  std::vector<Index> tail(Index anchor) const {
    std::vector<Index> out;
    for (const Index& j : samples)
      if (order.succeeds(j, anchor)) out.push_back(j);
    return out;
  }
};

/// Anchors t_n = start * ratio^n, n = 0..count-1.
inline std::vector<double> geometric_schedule(int count = 41, double ratio = 0.5,
                                              double start = 1.0) {
  if (count < 1 || !(ratio > 0.0) || !(ratio < 1.0) || !(start > 0.0))
    throw invalid_parameter("geometric_schedule: need count >= 1, ratio in (0,1), start > 0");
  std::vector<double> t(static_cast<std::size_t>(count));
  double v = start;
  for (int n = 0; n < count; ++n, v *= ratio) t[static_cast<std::size_t>(n)] = v;
  return t;
}

/// Default observation grid for (0,1] nets: t = 2^{-k/2}, k = 0..2*levels,
/// i.e. the dyadic anchors 2^{-n} interleaved with midpoints in log scale.
inline std::vector<double> default_samples(int levels = 40) {
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(2 * levels + 1));
  for (int k = 0; k <= 2 * levels; ++k) t.push_back(std::pow(2.0, -0.5 * k));
  return t;
}

/// Validates the sampled net: nonempty, anchors monotone in the net order,
/// and (finite poset) every element dominated by some anchor.
template <class Order, class V>
void validate_net(const Net<Order, V>& net) {
  if (net.samples.empty()) throw structural_error("net: empty sample set");
  if (net.cofinal.empty()) throw structural_error("net: empty co-final sequence");
  for (std::size_t n = 0; n + 1 < net.cofinal.size(); ++n)
    if (!net.order.succeeds(net.cofinal[n + 1], net.cofinal[n]))
      throw structural_error("net: co-final sequence not monotone at position " +
                             std::to_string(n));
  if constexpr (std::is_same_v<Order, FinitePoset>) {
    for (const auto& j : net.samples) {
      bool dominated = false;
      for (const auto& a : net.cofinal)
        if (net.order.succeeds(a, j)) { dominated = true; break; }
      if (!dominated)
        throw structural_error("net: sample " + std::to_string(j) +
                               " not dominated by any co-final anchor");
    }
  }
}

/// Net over (0,1] with the default anchor/sample schedules. The anchors stop
/// two levels short of the deepest samples so that every anchor's tail holds
/// several observations, not just the endpoint.
template <class V>
Net<ReversedUnitInterval, V> make_unit_interval_net(std::function<V(double)> eval,
                                                    int levels = 40) {
  Net<ReversedUnitInterval, V> net;
  net.eval = std::move(eval);
  net.samples = default_samples(levels);
  net.cofinal = geometric_schedule(std::max(1, levels - 1));
  return net;
}

} // namespace ruclab
