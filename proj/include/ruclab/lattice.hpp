#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ruclab/common.hpp"
#include "ruclab/net.hpp"

namespace ruclab {

/// A vector in a finite-dimensional vector lattice: coordinates over a fixed
/// index set, ordered coordinatewise. All lattice operations (abs, sup, inf)
/// act coordinatewise.
class LatticeVector {
public:
  LatticeVector() = default;
  explicit LatticeVector(std::vector<double> values) : values_(std::move(values)) {}
  LatticeVector(std::initializer_list<double> values) : values_(values) {}

  static LatticeVector zeros(std::size_t n) { return LatticeVector(std::vector<double>(n, 0.0)); }
  static LatticeVector ones(std::size_t n) { return LatticeVector(std::vector<double>(n, 1.0)); }
  static LatticeVector constant(std::size_t n, double c) {
    return LatticeVector(std::vector<double>(n, c));
  }
  /// One-hot coordinate vector e_k.
  static LatticeVector unit(std::size_t n, std::size_t k) {
    LatticeVector e = zeros(n);
    e.values_.at(k) = 1.0;
    return e;
  }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  friend bool operator==(const LatticeVector& a, const LatticeVector& b) {
    return a.values_ == b.values_;
  }

  LatticeVector& operator+=(const LatticeVector& o) {
    check_same_size(o, "operator+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  LatticeVector& operator-=(const LatticeVector& o) {
    check_same_size(o, "operator-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  LatticeVector& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }

  friend LatticeVector operator+(LatticeVector a, const LatticeVector& b) { return a += b; }
  friend LatticeVector operator-(LatticeVector a, const LatticeVector& b) { return a -= b; }
  friend LatticeVector operator*(double c, LatticeVector a) { return a *= c; }
  friend LatticeVector operator*(LatticeVector a, double c) { return a *= c; }
  friend LatticeVector operator-(LatticeVector a) {
    for (double& v : a.values_) v = -v;
    return a;
  }

  void check_same_size(const LatticeVector& o, const char* where) const {
    if (values_.size() != o.values_.size())
      throw structural_error(std::string(where) + ": dimension mismatch (" +
                             std::to_string(values_.size()) + " vs " +
                             std::to_string(o.values_.size()) + ")");
  }

private:
  std::vector<double> values_;
};

inline LatticeVector abs(const LatticeVector& x) {
  LatticeVector r = x;
  for (double& v : r.values()) v = std::abs(v);
  return r;
}

inline LatticeVector sup(const LatticeVector& x, const LatticeVector& y) {
  x.check_same_size(y, "sup");
  LatticeVector r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::max(x[i], y[i]);
  return r;
}

inline LatticeVector inf(const LatticeVector& x, const LatticeVector& y) {
  x.check_same_size(y, "inf");
  LatticeVector r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::min(x[i], y[i]);
  return r;
}

inline LatticeVector pos_part(const LatticeVector& x) {
  LatticeVector r = x;
  for (double& v : r.values()) v = std::max(v, 0.0);
  return r;
}

/// Coordinatewise x <= y.
inline bool leq(const LatticeVector& x, const LatticeVector& y) {
  x.check_same_size(y, "leq");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] <= y[i])) return false;
  return true;
}

inline bool is_nonnegative(const LatticeVector& x) {
  for (double v : x) if (!(v >= 0.0)) return false;
  return true;
}

inline double max_entry(const LatticeVector& x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  return x.empty() ? 0.0 : m;
}

inline double min_entry(const LatticeVector& x) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : x) m = std::min(m, v);
  return x.empty() ? 0.0 : m;
}

/// Lattice norm on coordinate vectors: weighted l^p for p in [1, inf) or the
/// sup norm. Weights are coordinate masses; they default to all ones and are
/// ignored by the sup norm. Both kinds are monotone on the positive cone and
/// satisfy |x| <= |y|  =>  norm(x) <= norm(y).
struct LatticeNorm {
  enum class Kind { Lp, Sup };

  Kind kind = Kind::Sup;
  double p = 0.0;                // only for Lp
  std::vector<double> weights;   // empty = all ones

  static LatticeNorm sup_norm() { return LatticeNorm{Kind::Sup, 0.0, {}}; }

  static LatticeNorm lp(double p, std::vector<double> weights = {}) {
    if (!(p >= 1.0) || !std::isfinite(p))
      throw invalid_parameter("LatticeNorm: p must be finite and >= 1, got " + std::to_string(p));
    for (double w : weights)
      if (!(w > 0.0))
        throw invalid_parameter("LatticeNorm: weights must be positive");
    return LatticeNorm{Kind::Lp, p, std::move(weights)};
  }

  double operator()(const LatticeVector& x) const {
    if (kind == Kind::Sup) {
      double m = 0.0;
      for (double v : x) m = std::max(m, std::abs(v));
      return m;
    }
    if (!weights.empty() && weights.size() != x.size())
      throw structural_error("LatticeNorm: weight/vector dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = weights.empty() ? 1.0 : weights[i];
      s += w * std::pow(std::abs(x[i]), p);
    }
    return std::pow(s, 1.0 / p);
  }
};

/// Smallest eps >= 0 with |x_j - x| <= eps * u coordinatewise.
/// Conventions: a coordinate with zero deviation never contributes (0/0 = 0);
/// a positive deviation over a vanishing u coordinate yields +inf.
inline double ru_eps(const LatticeVector& x_j, const LatticeVector& x, const LatticeVector& u) {
  x_j.check_same_size(x, "ru_eps");
  x_j.check_same_size(u, "ru_eps");
  if (!is_nonnegative(u)) throw invalid_parameter("ru_eps: regulator must be >= 0");
  double eps = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = std::abs(x_j[i] - x[i]);
    if (d == 0.0) continue;
    if (u[i] == 0.0) return std::numeric_limits<double>::infinity();
    eps = std::max(eps, d / u[i]);
  }
  return eps;
}

/// Regulator of a relatively uniform convergence: the controlling vector u
/// together with the recorded per-index eps levels, where eps(j) is the
/// smallest value with |x_j - x| <= eps(j) * u.
struct Regulator {
  LatticeVector u;
  std::vector<std::pair<double, double>> eps_schedule; // (index, eps), index = time for t-nets
};

/// Weighted sum u = sum_n u_n / (2^n (||u_n|| + 1)) over a finite list of
/// nonnegative regulators, n starting at 1. The discarded tail of the
/// countable version is bounded by 2^{-N} in norm; callers report that bound.
inline LatticeVector common_regulator(std::span<const LatticeVector> regulators,
                                      const LatticeNorm& norm) {
  if (regulators.empty()) return LatticeVector();
  LatticeVector acc = LatticeVector::zeros(regulators[0].size());
  double scale = 1.0;
  for (std::size_t n = 0; n < regulators.size(); ++n) {
    const LatticeVector& u_n = regulators[n];
    if (!is_nonnegative(u_n))
      throw invalid_parameter("common_regulator: regulator " + std::to_string(n + 1) +
                              " has a negative entry");
    scale *= 0.5; // 2^{-(n+1)}
    acc += (scale / (norm(u_n) + 1.0)) * u_n;
  }
  return acc;
}

inline LatticeVector common_regulator(const std::vector<LatticeVector>& regulators,
                                      const LatticeNorm& norm) {
  return common_regulator(std::span<const LatticeVector>(regulators), norm);
}

/// Certification of relatively uniform convergence against a fixed regulator:
/// the first co-final anchor j0 such that every sampled index succeeding j0
/// has ru_eps(x_j, x, u) <= eps_target. Empty result = not certified at the
/// sampled resolution.
template <class Order>
std::optional<typename Order::Index> ru_converges(const Net<Order, LatticeVector>& net,
                                                  const LatticeVector& limit,
                                                  const LatticeVector& u, double eps_target) {
  if (!(eps_target > 0.0)) throw invalid_parameter("ru_converges: eps_target must be > 0");
  if (!is_nonnegative(u)) throw invalid_parameter("ru_converges: regulator must be >= 0");
  validate_net(net);
  for (const auto& anchor : net.cofinal) {
    bool ok = true;
    for (const auto& j : net.tail(anchor)) {
      if (ru_eps(net.eval(j), limit, u) > eps_target) { ok = false; break; }
    }
    if (ok) return anchor;
  }
  return std::nullopt;
}

} // namespace ruclab
