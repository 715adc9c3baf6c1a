#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ruclab/common.hpp"
#include "ruclab/lattice.hpp"
#include "ruclab/net.hpp"
#include "ruclab/semigroup.hpp"
#include "ruclab/spectral.hpp"

namespace ruclab {

/// Sampled time set for orbit suprema: {0} followed by log-spaced points.
struct TimeGrid {
  std::vector<double> times;

  static TimeGrid log_spaced(double t_lo, double t_hi, int n, bool include_zero = true) {
    if (!(0.0 < t_lo) || !(t_lo <= t_hi)) throw invalid_parameter("TimeGrid: need 0 < t_lo <= t_hi");
    if (n < 2) throw invalid_parameter("TimeGrid: need n >= 2");
    TimeGrid grid;
    if (include_zero) grid.times.push_back(0.0);
    const double la = std::log(t_lo), lb = std::log(t_hi);
    for (int i = 0; i < n; ++i)
      grid.times.push_back(std::exp(la + (lb - la) * i / (n - 1)));
    grid.times.back() = t_hi; // exact endpoint
    return grid;
  }
};

/// Default orbit grid: {0} plus 256 log-spaced points down to the handle's
/// honest time floor (or t0 * 1e-6 when the handle has none).
inline TimeGrid default_time_grid(const SemigroupHandle& handle, double t0, int n = 256) {
  const double floor_t = std::max(time_floor(handle), t0 * 1e-6);
  return TimeGrid::log_spaced(std::min(floor_t, t0), t0, n);
}

/// Sampled order bound of an orbit: y >= |T(t)x| coordinatewise at every
/// sampled t (exact by construction). `stability` is the relative sup-norm
/// change of y under doubling the time grid; values above 1e-3 mean the
/// supremum is still grid-sensitive.
struct OrbitBound {
  LatticeVector bound;
  double t0 = 0.0;
  std::vector<double> times;
  double stability = 0.0;
  double norm_of_bound = 0.0; // sup norm
  int under_resolved_times = 0;
};

namespace detail {

inline LatticeVector orbit_sup(const SemigroupHandle& handle, const LatticeVector& x,
                               const std::vector<double>& times) {
  LatticeVector y = LatticeVector::zeros(x.size());
  for (double t : times) y = sup(y, abs(apply(handle, x, t)));
  return y;
}

} // namespace detail

/// Pointwise supremum of |T(t)x| over a sampled time window [0, t0] -- the
/// minimal sampled order bound of the orbit.
inline OrbitBound maximal_function(const SemigroupHandle& handle, const LatticeVector& x,
                                   double t0, const TimeGrid& grid) {
  if (!(t0 > 0.0)) throw invalid_parameter("maximal_function: t0 must be > 0");
  if (grid.times.empty()) throw structural_error("maximal_function: empty time grid");
  if (grid.times.front() != 0.0 || grid.times.back() != t0)
    throw invalid_parameter("maximal_function: time grid must include 0 and t0");
  for (double t : grid.times)
    if (!(t >= 0.0) || t > t0)
      throw invalid_parameter("maximal_function: time grid must lie in [0, t0]");

  OrbitBound ob;
  ob.t0 = t0;
  ob.times = grid.times;
  ob.bound = detail::orbit_sup(handle, x, grid.times);
  ob.norm_of_bound = LatticeNorm::sup_norm()(ob.bound);

  const double floor_t = time_floor(handle);
  for (double t : grid.times)
    if (t > 0.0 && t < floor_t) ++ob.under_resolved_times;

  // Refinement stability: recompute on a doubled log grid.
  const int n = static_cast<int>(grid.times.size()) - 1; // minus the zero entry
  if (n >= 2) {
    const double t_lo = grid.times[1];
    const TimeGrid fine = TimeGrid::log_spaced(t_lo, t0, 2 * n);
    const LatticeVector y2 = detail::orbit_sup(handle, x, fine.times);
    ob.stability = LatticeNorm::sup_norm()(y2 - ob.bound) / (1.0 + ob.norm_of_bound);
  }
  return ob;
}

inline OrbitBound maximal_function(const SemigroupHandle& handle, const LatticeVector& x,
                                   double t0) {
  return maximal_function(handle, x, t0, default_time_grid(handle, t0));
}

/// Orbit regulator z = R(0,A)|Ay| for a generator with s(A) < 0, together
/// with the measured domination defect of |e^{tA} y| <= z over a log-spaced
/// horizon reaching 100/|s(A)|.
struct RegulatorDomination {
  LatticeVector regulator;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool certified = false;
  std::vector<double> times;
};

namespace detail {

inline void require_negative_bound(const MetzlerGenerator& A, double s, const char* who) {
  if (!(s < 0.0))
    throw precondition_error(std::string(who) + ": requires s(A) < 0 but s(A) = " +
                             std::to_string(s) + "; rescale the generator to A - " +
                             std::to_string(s + 1.0) + " I first");
}

} // namespace detail

inline RegulatorDomination regulator_from_domA(const MetzlerGenerator& A,
                                               const LatticeVector& y, int n_times = 200) {
  const double s = spectral_bound(A);
  detail::require_negative_bound(A, s, "regulator_from_domA");
  if (static_cast<int>(y.size()) != A.dim())
    throw structural_error("regulator_from_domA: dimension mismatch");

  const Vector ay = A.matrix() * to_eigen(y);
  const LatticeVector z = from_eigen(resolvent(A, 0.0) * ay.cwiseAbs().matrix());

  RegulatorDomination result;
  result.regulator = z;
  result.tolerance = 1e-9 * (1.0 + LatticeNorm::sup_norm()(z));
  const double horizon = 100.0 / (-s);
  TimeGrid grid = TimeGrid::log_spaced(horizon * 1e-6, horizon, n_times - 1);
  result.times = grid.times;
  for (double t : result.times) {
    const LatticeVector orbit = abs(from_eigen(detail::matrix_exp(t * A.matrix()) * to_eigen(y)));
    for (std::size_t i = 0; i < z.size(); ++i)
      result.max_violation = std::max(result.max_violation, orbit[i] - z[i]);
  }
  result.max_violation = std::max(result.max_violation, 0.0);
  result.certified = result.max_violation <= result.tolerance;
  return result;
}

/// Rate bound |e^{tA} y - y| <= t R(0,A)|A^2 y| per sampled t.
struct RateReport {
  std::vector<std::pair<double, double>> violations; // (t, max positive part)
  double tolerance = 0.0;
  bool certified = false;
};

inline RateReport rate_domA2(const MetzlerGenerator& A, const LatticeVector& y,
                             const std::vector<double>& ts) {
  const double s = spectral_bound(A);
  detail::require_negative_bound(A, s, "rate_domA2");
  if (static_cast<int>(y.size()) != A.dim())
    throw structural_error("rate_domA2: dimension mismatch");

  const Vector a2y = A.matrix() * (A.matrix() * to_eigen(y));
  const Vector rate = resolvent(A, 0.0) * a2y.cwiseAbs().matrix();
  const Vector ye = to_eigen(y);

  RateReport report;
  report.tolerance = 1e-9 * (1.0 + LatticeNorm::sup_norm()(y));
  report.certified = true;
  for (double t : ts) {
    if (!(t >= 0.0)) throw invalid_parameter("rate_domA2: t must be >= 0");
    const Vector dev = (detail::matrix_exp(t * A.matrix()) * ye - ye).cwiseAbs();
    const double viol = std::max(0.0, (dev - t * rate).maxCoeff());
    report.violations.emplace_back(t, viol);
    if (viol > report.tolerance) report.certified = false;
  }
  return report;
}

struct ConditionVerdict {
  bool certified = false;
  std::string note;
};

/// Everything recorded while certifying one sample vector.
struct SampleCertificate {
  OrbitBound orbit;                                    // conditions (iii)/(iv)
  std::vector<std::pair<double, double>> eps_schedule; // (t, pointwise eps vs final regulator)
  double eps_max = 0.0;                                // max eps over sampled (0, t0]
  bool ru_certified = false;
  std::optional<double> certified_at;                  // anchor for the smallest target
  std::string regulator_route;                         // "resolvent" or "empirical"
  std::vector<double> approx_errors;                   // mollified stages, when used
  bool derived_bound_holds = false;                    // eps_max*w + |x| >= sampled orbit
};

struct RucCertificate {
  Regulator regulator; // final regulator w = v + 2u and its aggregated schedule
  ConditionVerdict i, ii, iii, iv;
  std::vector<SampleCertificate> samples;
  double stability = 0.0;            // worst orbit-bound stability
  double eps_at_t0 = 0.0;            // aggregated certification level over [0, t0]
  double regulator_tail_bound = 0.0; // 2^{-N}: norm bound on the discarded series tail
  bool implication_consistent = false;
};

struct CertifySchedule {
  int time_points = 256;                         // orbit grid resolution
  std::vector<double> eps_targets{1e-1, 1e-2, 1e-3};
  int net_levels = 40;                           // certification net reaches t0 * 2^{-levels}
};

namespace detail {

/// Per-sample regulator of T(t)x -> x. For matrix semigroups with s(A) < 0
/// this is the resolvent construction R(0,A)|A^2 x| (rate eps(t) <= t);
/// otherwise the sampled deviation supremum sup_t |T(t)x - x|, whose eps
/// stays <= 1 and decays with the deviations themselves.
inline LatticeVector sample_regulator(const SemigroupHandle& handle, const LatticeVector& x,
                                      const TimeGrid& grid, std::string& route) {
  if (const auto* ms = std::get_if<MatrixSemigroup>(&handle)) {
    const MetzlerGenerator& gen = ms->generator();
    if (spectral_bound(gen) < 0.0) {
      route = "resolvent";
      const Vector a2x = gen.matrix() * (gen.matrix() * to_eigen(x));
      return from_eigen(resolvent(gen, 0.0) * a2x.cwiseAbs().matrix());
    }
  }
  route = "empirical";
  LatticeVector dev = LatticeVector::zeros(x.size());
  for (double t : grid.times) dev = sup(dev, abs(apply(handle, x, t) - x));
  return dev;
}

/// Mollified approximation stages for samples outside the handle's smooth
/// class; the semigroup itself is the mollifier.
inline std::vector<LatticeVector> approximation_stages(const SemigroupHandle& handle,
                                                       const LatticeVector& x) {
  const auto* grid = std::get_if<HeatGrid>(&handle);
  if (grid == nullptr) return {x};
  const double rough =
      LatticeNorm::sup_norm()(grid->apply(x, grid->t_min()) - x) /
      (1.0 + LatticeNorm::sup_norm()(x));
  if (rough <= 1e-2) return {x};
  std::vector<LatticeVector> stages;
  for (double factor : {8.0, 4.0, 2.0, 1.0})
    stages.push_back(grid->apply(x, factor * grid->t_min()));
  return stages;
}

} // namespace detail

/// Sampled certification of the four equivalent descriptions of relative
/// uniform continuity at t = 0: (i) ru-convergence T(t)x -> x, (ii) order
/// convergence (implied by (i)), (iii)/(iv) order boundedness of the orbit
/// over [0, t_x] resp. every [0, t0]. The regulator is assembled the way the
/// equivalence proof does: per-sample regulators -> weighted common regulator
/// u -> order bound v of the orbit of u -> final regulator v + 2u.
inline RucCertificate certify_theorem21(const SemigroupHandle& handle,
                                        const std::vector<LatticeVector>& samples, double t0,
                                        const CertifySchedule& schedule = {}) {
  if (!(t0 > 0.0)) throw invalid_parameter("certify_theorem21: t0 must be > 0");
  const std::size_t n = state_dim(handle);
  RucCertificate cert;

  const TimeGrid grid = default_time_grid(handle, t0, schedule.time_points);

  // Conditions (iii)/(iv): sampled orbit bounds, plus per-sample regulators.
  std::vector<LatticeVector> regulators;
  std::vector<LatticeVector> approx_error_terms;
  for (const LatticeVector& x : samples) {
    if (x.size() != n) throw structural_error("certify_theorem21: sample dimension mismatch");
    SampleCertificate sc;
    sc.orbit = maximal_function(handle, x, t0, grid);
    cert.stability = std::max(cert.stability, sc.orbit.stability);

    const std::vector<LatticeVector> stages = detail::approximation_stages(handle, x);
    for (const LatticeVector& stage : stages) {
      std::string route;
      regulators.push_back(detail::sample_regulator(handle, stage, grid, route));
      sc.regulator_route = route;
      if (!(stage == x)) {
        const LatticeVector e = abs(stage - x);
        const double en = LatticeNorm::sup_norm()(e);
        sc.approx_errors.push_back(en);
        if (en > 0.0) approx_error_terms.push_back((1.0 / std::sqrt(en)) * e);
      }
    }
    cert.samples.push_back(std::move(sc));
  }

  // Common regulator u, enlarged so it also regulates the approximation
  // stages; order bound v of the orbit of u; final regulator w = v + 2u.
  LatticeVector u = samples.empty() ? LatticeVector::zeros(n)
                                    : common_regulator(regulators, LatticeNorm::sup_norm());
  if (u.size() != n) u = LatticeVector::zeros(n);
  cert.regulator_tail_bound = std::ldexp(1.0, -static_cast<int>(regulators.size()));
  for (const LatticeVector& e : approx_error_terms) u = sup(u, e);
  const LatticeVector v = maximal_function(handle, u, t0, grid).bound;
  const LatticeVector w = v + 2.0 * u;

  // Condition (i): certify T(t)x -> x against w on the sampled net in (0, t0].
  Net<ReversedUnitInterval, LatticeVector> net;
  net.samples = default_samples(schedule.net_levels);
  net.cofinal = geometric_schedule(schedule.net_levels + 1);
  for (double& t : net.samples) t *= t0;
  for (double& t : net.cofinal) t *= t0;

  const double smallest_target =
      *std::min_element(schedule.eps_targets.begin(), schedule.eps_targets.end());
  bool all_ru = true;
  std::vector<std::pair<double, double>> aggregated;
  for (std::size_t si = 0; si < samples.size(); ++si) {
    const LatticeVector& x = samples[si];
    SampleCertificate& sc = cert.samples[si];
    net.eval = [&](double t) { return apply(handle, x, t); };

    for (double t : net.samples) {
      const double eps = ru_eps(net.eval(t), x, w);
      sc.eps_schedule.emplace_back(t, eps);
      sc.eps_max = std::max(sc.eps_max, eps);
    }
    // eps_max is the certification level over the whole sampled window, so it
    // must also cover the orbit grid the order bound was computed on.
    for (double t : grid.times)
      if (t > 0.0) sc.eps_max = std::max(sc.eps_max, ru_eps(apply(handle, x, t), x, w));
    sc.ru_certified = true;
    for (double target : schedule.eps_targets) {
      const auto anchor = ru_converges(net, x, w, target);
      if (!anchor) { sc.ru_certified = false; break; }
      if (target == smallest_target) sc.certified_at = *anchor;
    }
    all_ru = all_ru && sc.ru_certified;

    if (aggregated.empty()) aggregated = sc.eps_schedule;
    else
      for (std::size_t k = 0; k < aggregated.size(); ++k)
        aggregated[k].second = std::max(aggregated[k].second, sc.eps_schedule[k].second);
  }

  cert.regulator = Regulator{w, aggregated};
  for (const auto& sc : cert.samples) cert.eps_at_t0 = std::max(cert.eps_at_t0, sc.eps_max);

  cert.i = {all_ru, "ru-convergence against the assembled regulator"};
  cert.ii = {all_ru, "implied by (i): ru-convergence implies order convergence"};
  cert.iii = {true, "sampled orbit bound exists for t_x = t0"};
  cert.iv = {true, "sampled orbit bound exists for the given t0"};

  // Sample-wise consistency: a certification level eps_max for (i) makes
  // eps_max * w + |x| an order bound of the sampled orbit.
  cert.implication_consistent = true;
  for (std::size_t si = 0; si < samples.size(); ++si) {
    SampleCertificate& sc = cert.samples[si];
    if (!sc.ru_certified) continue;
    const LatticeVector derived = sc.eps_max * w + abs(samples[si]);
    const double slack = 1e-12 * (1.0 + LatticeNorm::sup_norm()(derived));
    bool holds = true;
    for (std::size_t i = 0; i < derived.size(); ++i)
      if (sc.orbit.bound[i] > derived[i] + slack) { holds = false; break; }
    sc.derived_bound_holds = holds;
    cert.implication_consistent = cert.implication_consistent && holds;
  }
  if (all_ru)
    cert.implication_consistent =
        cert.implication_consistent && cert.iii.certified && cert.iv.certified;
  return cert;
}

} // namespace ruclab
