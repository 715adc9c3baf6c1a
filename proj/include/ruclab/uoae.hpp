#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ruclab/common.hpp"
#include "ruclab/lattice.hpp"
#include "ruclab/net.hpp"
#include "ruclab/ruc.hpp"
#include "ruclab/semigroup.hpp"

namespace ruclab {

/// Desk-scale sigma-finite measure space: finitely many atoms with positive
/// mass plus explicitly tagged points of mass zero. Equivalence classes of
/// functions live on the atoms; representatives additionally carry values at
/// the null points.
struct MeasureSpaceModel {
  std::vector<std::pair<std::string, double>> atoms;
  std::vector<std::string> null_points;

  void validate() const {
    if (atoms.empty()) throw structural_error("MeasureSpaceModel: needs at least one atom");
    double total = 0.0;
    std::vector<std::string> labels;
    for (const auto& [label, mass] : atoms) {
      if (!(mass > 0.0))
        throw invalid_parameter("MeasureSpaceModel: atom '" + label + "' must have mass > 0");
      total += mass;
      labels.push_back(label);
    }
    for (const std::string& l : null_points) labels.push_back(l);
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
      throw invalid_parameter("MeasureSpaceModel: duplicate point label");
    if (!(total > 0.0) || !std::isfinite(total))
      throw invalid_parameter("MeasureSpaceModel: total mass must be finite and positive");
  }

  std::size_t atom_count() const { return atoms.size(); }
  std::size_t null_count() const { return null_points.size(); }

  LatticeNorm lp(double p) const {
    std::vector<double> w;
    w.reserve(atoms.size());
    for (const auto& [label, mass] : atoms) w.push_back(mass);
    return LatticeNorm::lp(p, std::move(w));
  }
};

/// An L^p element together with a choice of representative: classValues on
/// the atoms determine the equivalence class; nullValues are the
/// representative's data on the null points and never enter norms or
/// class-level lattice operations.
struct RepresentedFunction {
  LatticeVector class_values;
  LatticeVector null_values;

  friend bool operator==(const RepresentedFunction& a, const RepresentedFunction& b) {
    return a.class_values == b.class_values && a.null_values == b.null_values;
  }
};

inline bool class_equal(const RepresentedFunction& a, const RepresentedFunction& b) {
  return a.class_values == b.class_values;
}

// ---------------------------------------------------------------------------
// Named (0,1]-net families.
// ---------------------------------------------------------------------------

/// x_t = t * v.
inline Net<ReversedUnitInterval, LatticeVector> linear_net(const LatticeVector& v,
                                                           int levels = 40) {
  return make_unit_interval_net<LatticeVector>([v](double t) { return t * v; }, levels);
}

/// (1,0) on the dyadic bands [2^{-2k-1}, 2^{-2k}], (0,1) in between.
inline Net<ReversedUnitInterval, LatticeVector> band_alternating_net(int levels = 40) {
  return make_unit_interval_net<LatticeVector>(
      [](double t) {
        const double l = -std::log2(t);
        const double m = std::fmod(l, 2.0);
        const bool first_band = m <= 1.0 + 1e-9 || m >= 2.0 - 1e-9;
        return first_band ? LatticeVector{1.0, 0.0} : LatticeVector{0.0, 1.0};
      },
      levels);
}

/// Moving one-hot spike e_{ceil(log2(1/t)) mod dim}.
inline Net<ReversedUnitInterval, LatticeVector> moving_spike_net(std::size_t dim,
                                                                 int levels = 40) {
  return make_unit_interval_net<LatticeVector>(
      [dim](double t) {
        const long k = static_cast<long>(std::ceil(-std::log2(t) - 1e-12));
        const long idx = ((k % static_cast<long>(dim)) + static_cast<long>(dim)) %
                         static_cast<long>(dim);
        return LatticeVector::unit(dim, static_cast<std::size_t>(idx));
      },
      levels);
}

// ---------------------------------------------------------------------------
// Unbounded order convergence and the co-final sequence constructions.
// ---------------------------------------------------------------------------

template <class Order>
struct UoReport {
  std::vector<typename Order::Index> anchors;
  std::vector<LatticeVector> envelope;  // g_n = sup_{j >= j_n} |f_j - f| /\ u
  std::vector<double> envelope_sup;     // sup norms of g_n
  std::vector<std::optional<std::size_t>> first_anchor; // per threshold
  std::vector<double> thresholds;
  bool converges = false;
};

/// Tail envelopes of |f_j - f| /\ u over the sampled net; the verdict is
/// "converges" when the envelope drops below every target threshold.
template <class Order>
UoReport<Order> uo_check(const Net<Order, LatticeVector>& net, const LatticeVector& f,
                         const LatticeVector& u,
                         std::vector<double> thresholds = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5,
                                                           1e-6}) {
  if (!is_nonnegative(u)) throw invalid_parameter("uo_check: u must be >= 0");
  validate_net(net);

  UoReport<Order> report;
  report.anchors = net.cofinal;
  report.thresholds = std::move(thresholds);
  for (const auto& anchor : net.cofinal) {
    LatticeVector g = LatticeVector::zeros(f.size());
    for (const auto& j : net.tail(anchor)) g = sup(g, inf(abs(net.eval(j) - f), u));
    report.envelope_sup.push_back(LatticeNorm::sup_norm()(g));
    report.envelope.push_back(std::move(g));
  }
  report.converges = true;
  for (double eps : report.thresholds) {
    std::optional<std::size_t> hit;
    for (std::size_t n = 0; n < report.envelope_sup.size(); ++n)
      if (report.envelope_sup[n] <= eps) { hit = n; break; }
    if (!hit) report.converges = false;
    report.first_anchor.push_back(hit);
  }
  return report;
}

template <class Order>
struct EnvelopeResult {
  std::vector<typename Order::Index> anchors;
  std::vector<LatticeVector> y_n; // tail suprema, decreasing
  LatticeVector y;                // coordinatewise infimum of the y_n
  double y_sup_norm = 0.0;
};

/// Tail suprema y_n = sup_{j >= j_n} x_j and their infimum y. At sample
/// resolution the dichotomy reads: y (essentially) zero iff the net order
/// converges to zero.
template <class Order>
EnvelopeResult<Order> cofinal_envelope(const Net<Order, LatticeVector>& net) {
  validate_net(net);
  EnvelopeResult<Order> result;
  result.anchors = net.cofinal;
  for (const auto& anchor : net.cofinal) {
    const auto tail = net.tail(anchor);
    if (tail.empty()) throw structural_error("cofinal_envelope: empty sampled tail");
    LatticeVector y_n = net.eval(tail.front());
    for (std::size_t k = 1; k < tail.size(); ++k) y_n = sup(y_n, net.eval(tail[k]));
    for (double v : y_n)
      if (!std::isfinite(v)) throw order_unbounded("cofinal_envelope: sample not order bounded");
    result.y_n.push_back(std::move(y_n));
  }
  result.y = result.y_n.front();
  for (const LatticeVector& y_n : result.y_n) result.y = inf(result.y, y_n);
  result.y_sup_norm = LatticeNorm::sup_norm()(result.y);
  return result;
}

template <class Order>
struct CofinalWitness {
  std::vector<typename Order::Index> sequence;          // F_1 then F_2 then ...
  std::vector<std::vector<typename Order::Index>> groups;
  LatticeVector limsup_bound; // z = inf_n sup_{j in F_n} x_j
  double limsup_norm = 0.0;
  double envelope_norm = 0.0; // ||y||
};

/// When the envelope infimum y is not zero, assembles a co-final sequence
/// along which the net provably fails to order-converge to 0: greedily picks
/// finite tail subsets F_n with ||y_n - sup_{F_n} x_j|| <= 2^{-(n+1)} ||y||
/// and concatenates them. The meet z of the F_n suprema then keeps norm at
/// least ||y||/2. Returns nothing when y is already (essentially) zero.
template <class Order>
std::optional<CofinalWitness<Order>> cofinal_witness(const Net<Order, LatticeVector>& net,
                                                     double zero_tol = 1e-8,
                                                     const LatticeNorm& norm =
                                                         LatticeNorm::sup_norm()) {
  const EnvelopeResult<Order> env = cofinal_envelope(net);
  const double y_norm = norm(env.y);
  if (y_norm <= zero_tol) return std::nullopt; // no witness needed

  CofinalWitness<Order> witness;
  witness.envelope_norm = y_norm;
  for (std::size_t pos = 0; pos < net.cofinal.size(); ++pos) {
    const auto tail = net.tail(net.cofinal[pos]);
    const LatticeVector& y_n = env.y_n[pos];
    const double target = std::ldexp(y_norm, -static_cast<int>(pos) - 2); // 2^{-(n+1)}||y||, n = pos+1
    std::vector<typename Order::Index> group;
    LatticeVector current = LatticeVector::zeros(y_n.size());
    std::vector<bool> used(tail.size(), false);
    while (norm(y_n - current) > target) {
      double best_gap = std::numeric_limits<double>::infinity();
      std::size_t best = tail.size();
      for (std::size_t k = 0; k < tail.size(); ++k) {
        if (used[k]) continue;
        const double gap = norm(y_n - sup(current, net.eval(tail[k])));
        if (gap < best_gap) { best_gap = gap; best = k; }
      }
      if (best == tail.size()) break; // tail exhausted: current == y_n exactly
      used[best] = true;
      current = sup(current, net.eval(tail[best]));
      group.push_back(tail[best]);
    }
    witness.sequence.insert(witness.sequence.end(), group.begin(), group.end());
    if (pos == 0) witness.limsup_bound = current;
    else witness.limsup_bound = inf(witness.limsup_bound, current);
    witness.groups.push_back(std::move(group));
  }
  witness.limsup_norm = norm(witness.limsup_bound);
  return witness;
}

// ---------------------------------------------------------------------------
// Representative selection (atoms + null points).
// ---------------------------------------------------------------------------

struct SelectOptions {
  double pointwise_tol = 1e-6;
  std::vector<double> uo_thresholds{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
};

template <class Order>
struct SelectionResult {
  std::vector<typename Order::Index> indices;
  std::vector<RepresentedFunction> before;
  std::vector<RepresentedFunction> after;
  std::vector<typename Order::Index> anchors; // thinned to strictly increasing
  std::vector<LatticeVector> g_atoms;         // envelope on atoms per anchor
  std::vector<double> g_null;                 // envelope value at null points per anchor
  std::vector<int> partition;                 // per index: band n (0 = J_0)
  std::size_t j0_size = 0;
  long overrides = 0;
  bool class_values_untouched = true;
  bool all_points_converged = false;  // atoms and null points
  bool atoms_only_converged = false;  // the "almost all" variant
  std::vector<std::vector<double>> traces; // per point: tail deviation per anchor
};

namespace detail {

/// Thins an anchor sequence to the strictly increasing reduction the
/// selection proof assumes: j_{n+1} succeeds j_n but not conversely.
template <class Order>
std::vector<typename Order::Index> thin_anchors(const Order& order,
                                                const std::vector<typename Order::Index>& in) {
  std::vector<typename Order::Index> out;
  for (const auto& j : in) {
    if (!out.empty()) {
      if (!order.succeeds(j, out.back())) continue;      // not an advance
      if (order.succeeds(out.back(), j)) continue;       // equivalent index
    }
    out.push_back(j);
  }
  return out;
}

} // namespace detail

/// The representative-selection construction: tail envelopes g_n of
/// |f_j - f| /\ u at class level, a decreasing-to-zero extension of the g_n
/// to the null points, the band partition J_n of the sampled indices, and the
/// override of a representative's null values wherever they break the
/// envelope bound. Class values are never touched; after selection the
/// representatives converge pointwise at every atom and every null point.
template <class Order>
SelectionResult<Order> select_representatives(const Net<Order, RepresentedFunction>& net,
                                              const MeasureSpaceModel& model,
                                              const RepresentedFunction& f,
                                              const RepresentedFunction& u,
                                              const SelectOptions& options = {}) {
  model.validate();
  validate_net(net);
  const std::size_t n_atoms = model.atom_count();
  const std::size_t n_null = model.null_count();
  if (f.class_values.size() != n_atoms || f.null_values.size() != n_null)
    throw structural_error("select_representatives: f has wrong shape for the model");
  if (u.class_values.size() != n_atoms || u.null_values.size() != n_null)
    throw structural_error("select_representatives: u has wrong shape for the model");
  for (std::size_t i = 0; i < n_atoms; ++i)
    if (!(u.class_values[i] > 0.0))
      throw precondition_error("select_representatives: u vanishes at atom '" +
                               model.atoms[i].first + "'");
  for (std::size_t i = 0; i < n_null; ++i)
    if (!(u.null_values[i] > 0.0))
      throw precondition_error("select_representatives: u vanishes at null point '" +
                               model.null_points[i] + "'");

  SelectionResult<Order> result;
  result.indices = net.samples;
  for (const auto& j : net.samples) result.before.push_back(net.eval(j));
  result.after = result.before;

  // Precondition: unbounded order convergence at class level.
  Net<Order, LatticeVector> class_net;
  class_net.order = net.order;
  class_net.samples = net.samples;
  class_net.cofinal = net.cofinal;
  class_net.eval = [&net](typename Order::Index j) { return net.eval(j).class_values; };
  const UoReport<Order> uo =
      uo_check(class_net, f.class_values, u.class_values, options.uo_thresholds);
  if (!uo.converges)
    throw precondition_error("select_representatives: the net is not uo-convergent to f at "
                             "class level on the sampled schedule");

  result.anchors = detail::thin_anchors(net.order, net.cofinal);
  const std::size_t n_anchors = result.anchors.size();

  // Envelopes on atoms; decreasing-to-zero extension max(atom sup, 2^{-n})
  // at the null points.
  for (std::size_t pos = 0; pos < n_anchors; ++pos) {
    LatticeVector g = LatticeVector::zeros(n_atoms);
    for (std::size_t k = 0; k < result.indices.size(); ++k)
      if (net.order.succeeds(result.indices[k], result.anchors[pos]))
        g = sup(g, inf(abs(result.before[k].class_values - f.class_values), u.class_values));
    double g_null = std::max(max_entry(g), std::ldexp(1.0, -static_cast<int>(pos) - 1));
    if (pos > 0) g_null = std::min(g_null, result.g_null.back());
    result.g_atoms.push_back(std::move(g));
    result.g_null.push_back(g_null);
  }

  // Band partition: index j belongs to J_n for the largest n with j >= j_n;
  // J_0 collects indices dominated by no anchor.
  result.partition.assign(result.indices.size(), 0);
  for (std::size_t k = 0; k < result.indices.size(); ++k) {
    int band = 0;
    for (std::size_t pos = 0; pos < n_anchors; ++pos)
      if (net.order.succeeds(result.indices[k], result.anchors[pos]))
        band = static_cast<int>(pos) + 1;
    result.partition[k] = band;
    if (band == 0) ++result.j0_size;
  }

  // Override rule: inside band n, force the null values that violate the
  // envelope bound to f's representative value there.
  for (std::size_t k = 0; k < result.indices.size(); ++k) {
    const int band = result.partition[k];
    if (band == 0) continue;
    const double g = result.g_null[static_cast<std::size_t>(band - 1)];
    for (std::size_t i = 0; i < n_null; ++i) {
      const double dev =
          std::min(std::abs(result.after[k].null_values[i] - f.null_values[i]),
                   u.null_values[i]);
      if (dev > g) {
        result.after[k].null_values[i] = f.null_values[i];
        ++result.overrides;
      }
    }
  }

  for (std::size_t k = 0; k < result.indices.size(); ++k)
    result.class_values_untouched =
        result.class_values_untouched &&
        result.after[k].class_values == result.before[k].class_values;

  // Pointwise convergence traces at every atom and every null point.
  const auto point_value = [&](const RepresentedFunction& rf, std::size_t point) {
    return point < n_atoms ? rf.class_values[point] : rf.null_values[point - n_atoms];
  };
  result.all_points_converged = true;
  result.atoms_only_converged = true;
  for (std::size_t point = 0; point < n_atoms + n_null; ++point) {
    std::vector<double> trace;
    for (std::size_t pos = 0; pos < n_anchors; ++pos) {
      double dev = 0.0;
      for (std::size_t k = 0; k < result.indices.size(); ++k)
        if (net.order.succeeds(result.indices[k], result.anchors[pos]))
          dev = std::max(dev, std::abs(point_value(result.after[k], point) -
                                       point_value(f, point)));
      trace.push_back(dev);
    }
    const bool converged = !trace.empty() && trace.back() <= options.pointwise_tol;
    if (!converged) {
      result.all_points_converged = false;
      if (point < n_atoms) result.atoms_only_converged = false;
    }
    result.traces.push_back(std::move(trace));
  }
  return result;
}

/// Pointwise convergence of a tabulated representative net, point by point;
/// used to compare representatives before and after selection.
template <class Order>
std::vector<bool> pointwise_converged(const Order& order,
                                      const std::vector<typename Order::Index>& indices,
                                      const std::vector<RepresentedFunction>& values,
                                      const std::vector<typename Order::Index>& anchors,
                                      const RepresentedFunction& f, double tol = 1e-6) {
  const std::size_t n_atoms = f.class_values.size();
  const std::size_t n_null = f.null_values.size();
  std::vector<bool> ok(n_atoms + n_null, true);
  if (anchors.empty()) return ok;
  const auto& last = anchors.back();
  for (std::size_t point = 0; point < n_atoms + n_null; ++point) {
    double dev = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (!order.succeeds(indices[k], last)) continue;
      const double v = point < n_atoms ? values[k].class_values[point]
                                       : values[k].null_values[point - n_atoms];
      const double fv =
          point < n_atoms ? f.class_values[point] : f.null_values[point - n_atoms];
      dev = std::max(dev, std::abs(v - fv));
    }
    ok[point] = dev <= tol;
  }
  return ok;
}

struct OrbitAeReport {
  SelectionResult<ReversedUnitInterval> selection;
  bool pre_all_converged = false;
  bool post_all_converged = false;
};

/// Orbit continuity at t = 0 through representative selection: the orbit
/// t -> T(t)f is given adversarially randomized null values (seeded), the
/// selection is run, and pointwise convergence at every point is checked
/// along t -> 0.
inline OrbitAeReport orbit_ae_continuity(const SemigroupHandle& handle,
                                         const MeasureSpaceModel& model,
                                         const RepresentedFunction& f,
                                         const RepresentedFunction& u, std::uint64_t seed,
                                         double t0 = 1.0, const SelectOptions& options = {}) {
  model.validate();
  if (state_dim(handle) != model.atom_count())
    throw structural_error("orbit_ae_continuity: handle dimension != atom count");

  const RucCertificate cert = certify_theorem21(handle, {f.class_values}, t0);
  if (!cert.i.certified)
    throw precondition_error("orbit_ae_continuity: the semigroup is not ru-continuous at f "
                             "on the sampled schedule");

  // Tabulate the orbit net with adversarial null values: at every sampled
  // time the representative is off by at least 1/2 at every null point.
  Net<ReversedUnitInterval, RepresentedFunction> net;
  net.samples = default_samples();
  net.cofinal = geometric_schedule();
  for (double& t : net.samples) t *= t0;
  for (double& t : net.cofinal) t *= t0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::bernoulli_distribution flip(0.5);
  std::vector<RepresentedFunction> table;
  table.reserve(net.samples.size());
  for (double t : net.samples) {
    RepresentedFunction rf;
    rf.class_values = apply(handle, f.class_values, t);
    rf.null_values = f.null_values;
    for (std::size_t i = 0; i < rf.null_values.size(); ++i)
      rf.null_values[i] += (flip(rng) ? 1.0 : -1.0) * mag(rng);
    table.push_back(std::move(rf));
  }
  net.eval = [&net, &table](double t) {
    for (std::size_t k = 0; k < net.samples.size(); ++k)
      if (net.samples[k] == t) return table[k];
    throw structural_error("orbit_ae_continuity: index not tabulated");
  };

  OrbitAeReport report;
  report.selection = select_representatives(net, model, f, u, options);
  const auto pre =
      pointwise_converged(net.order, report.selection.indices, report.selection.before,
                          report.selection.anchors, f, options.pointwise_tol);
  report.pre_all_converged = std::all_of(pre.begin(), pre.end(), [](bool b) { return b; });
  report.post_all_converged = report.selection.all_points_converged;
  return report;
}

} // namespace ruclab
