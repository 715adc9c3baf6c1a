#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ruclab/common.hpp"
#include "ruclab/lattice.hpp"
#include "ruclab/ruc.hpp"
#include "ruclab/semigroup.hpp"

namespace ruclab {

/// Finite family u(i), i in I, of vectors over a common coordinate set.
struct ObFamily {
  std::vector<LatticeVector> members;

  void validate() const {
    if (members.empty()) throw structural_error("ObFamily: empty family");
    for (const LatticeVector& m : members) m.check_same_size(members.front(), "ObFamily");
  }
};

struct ObNormResult {
  double norm = 0.0;
  LatticeVector bound; // minimal order bound: coordinatewise sup of |members|
};

/// Order-bound norm: inf ||y|| over y >= 0 with all members in [-y, y].
/// In R^n the coordinatewise sup of the moduli is the minimal such y, and
/// norm monotonicity makes its norm the exact infimum.
inline ObNormResult ob_norm(const ObFamily& fam, const LatticeNorm& n) {
  fam.validate();
  LatticeVector y = abs(fam.members.front());
  for (std::size_t i = 1; i < fam.members.size(); ++i) y = sup(y, abs(fam.members[i]));
  return {n(y), y};
}

struct SupObPair {
  double sup_norm = 0.0; // max over members of ||member||
  double ob_norm = 0.0;
};

/// ||u||_inf <= ||u||_ob; the inequality is re-checked on the computed pair.
inline SupObPair ob_vs_sup_inequality(const ObFamily& fam, const LatticeNorm& n) {
  fam.validate();
  SupObPair pair;
  for (const LatticeVector& m : fam.members) pair.sup_norm = std::max(pair.sup_norm, n(m));
  pair.ob_norm = ob_norm(fam, n).norm;
  if (pair.sup_norm > pair.ob_norm + 1e-12)
    throw numerical_error("ob_vs_sup_inequality: sup norm exceeded ob norm");
  return pair;
}

struct SeriesTailReport {
  int truncation = 0;
  double tail_ob_norm = 0.0; // ob norm of u - sum_{n<=N} u_n
  double z_bound_norm = 0.0; // ||z_N|| = ||sum_{n>N} y_n||
  bool verified = false;
};

/// Constructive completeness bound: with y_n the minimal order bound of u_n,
/// the ob-norm distance between u = sum u_n and its N-term truncation is
/// dominated by ||z_N||, z_N = sum_{n>N} y_n.
inline SeriesTailReport ob_series(const std::vector<ObFamily>& families, const LatticeNorm& n,
                                  int truncation) {
  if (families.empty()) throw structural_error("ob_series: empty family list");
  for (const ObFamily& fam : families) {
    fam.validate();
    if (fam.members.size() != families.front().members.size() ||
        fam.members.front().size() != families.front().members.front().size())
      throw structural_error("ob_series: families have incompatible index sets");
  }
  if (truncation < 0 || truncation > static_cast<int>(families.size()))
    throw invalid_parameter("ob_series: truncation out of range");

  const std::size_t members = families.front().members.size();
  const std::size_t dim = families.front().members.front().size();

  ObFamily tail;
  tail.members.assign(members, LatticeVector::zeros(dim));
  LatticeVector z = LatticeVector::zeros(dim);
  for (std::size_t k = static_cast<std::size_t>(truncation); k < families.size(); ++k) {
    for (std::size_t m = 0; m < members; ++m) tail.members[m] += families[k].members[m];
    z += ob_norm(families[k], n).bound;
  }

  SeriesTailReport report;
  report.truncation = truncation;
  report.tail_ob_norm = ob_norm(tail, n).norm;
  report.z_bound_norm = n(z);
  report.verified = report.tail_ob_norm <= report.z_bound_norm + 1e-12;
  return report;
}

/// Linear operator used by the uniform order boundedness estimator.
using LinearOp = std::function<LatticeVector(const LatticeVector&)>;

/// Certified lower bound for the uniform order boundedness constant
/// M = sup_{||x||_in = 1} || sup_i |T_i x| ||_out, with the witness that
/// attains it.
struct UobEstimate {
  double M_lower = 0.0;
  LatticeVector witness;
  std::string method;
  long n_evals = 0;
  std::vector<double> running_max; // convergence diagnostics of the sampler
};

namespace detail {

inline double uob_objective(const std::vector<LinearOp>& ops, const LatticeVector& x,
                            const LatticeNorm& n_in, const LatticeNorm& n_out) {
  const double nx = n_in(x);
  if (nx == 0.0) return 0.0;
  LatticeVector y = LatticeVector::zeros(ops.empty() ? x.size() : ops.front()(x).size());
  for (const LinearOp& op : ops) y = sup(y, abs(op(x)));
  return n_out(y) / nx;
}

} // namespace detail

/// Seeded lower-bound estimator: extreme-point enumeration (sign patterns for
/// sup-norm inputs with n <= 10, signed coordinate vectors for l^p inputs),
/// random sphere sampling, then coordinate-ascent polish of the best point.
inline UobEstimate uob_constant(const std::vector<LinearOp>& ops, std::size_t dim,
                                const LatticeNorm& n_in, const LatticeNorm& n_out, long budget,
                                std::uint64_t seed) {
  if (budget < 1) throw invalid_parameter("uob_constant: budget must be >= 1");
  if (ops.empty()) throw structural_error("uob_constant: empty operator family");

  UobEstimate best;
  best.witness = LatticeVector::zeros(dim);
  long evals = 0;
  const long snapshot_every = std::max<long>(1, budget / 20);

  const auto consider = [&](const LatticeVector& x) {
    if (evals >= budget) return false;
    ++evals;
    const double value = detail::uob_objective(ops, x, n_in, n_out);
    if (value > best.M_lower) {
      best.M_lower = value;
      best.witness = x;
    }
    if (evals % snapshot_every == 0) best.running_max.push_back(best.M_lower);
    return true;
  };

  // Extreme points first.
  if (n_in.kind == LatticeNorm::Kind::Sup && dim <= 10) {
    best.method = "sign-enumeration+sampling+ascent";
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << dim); ++mask) {
      LatticeVector x = LatticeVector::ones(dim);
      for (std::size_t i = 0; i < dim; ++i)
        if (mask & (std::uint64_t{1} << i)) x[i] = -1.0;
      if (!consider(x)) break;
    }
  } else {
    best.method = "basis-enumeration+sampling+ascent";
    for (std::size_t i = 0; i < dim && evals < budget; ++i) {
      for (double sign : {1.0, -1.0}) {
        LatticeVector x = LatticeVector::zeros(dim);
        x[i] = sign;
        if (!consider(x)) break;
      }
    }
  }

  // Random directions up to ~60% of the budget.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const long sampling_budget = (budget * 3) / 5;
  while (evals < sampling_budget) {
    LatticeVector x = LatticeVector::zeros(dim);
    for (std::size_t i = 0; i < dim; ++i) x[i] = gauss(rng);
    const double nx = n_in(x);
    if (nx == 0.0) continue;
    consider((1.0 / nx) * x);
  }

  // Coordinate ascent around the incumbent.
  double step = 0.25;
  while (evals < budget && step > 1e-6) {
    bool improved = false;
    const double scale = LatticeNorm::sup_norm()(best.witness);
    for (std::size_t i = 0; i < dim && evals < budget; ++i) {
      for (double sign : {1.0, -1.0}) {
        LatticeVector x = best.witness;
        x[i] += sign * step * (scale > 0.0 ? scale : 1.0);
        const double nx = n_in(x);
        if (nx == 0.0) continue;
        const double before = best.M_lower;
        consider((1.0 / nx) * x);
        if (best.M_lower > before) improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }

  best.n_evals = evals;
  // Exact invariant: M_lower is the objective at the recorded witness.
  const double nw = n_in(best.witness);
  if (nw > 0.0) {
    best.witness = (1.0 / nw) * best.witness;
    best.M_lower = detail::uob_objective(ops, best.witness, n_in, n_out);
  }
  return best;
}

inline std::vector<LinearOp> matrix_ops(const std::vector<Matrix>& mats) {
  std::vector<LinearOp> ops;
  ops.reserve(mats.size());
  for (const Matrix& m : mats)
    ops.push_back([m](const LatticeVector& x) { return from_eigen(m * to_eigen(x)); });
  return ops;
}

inline std::vector<LinearOp> semigroup_ops(const SemigroupHandle& handle,
                                           const std::vector<double>& times) {
  auto shared = std::make_shared<SemigroupHandle>(handle);
  std::vector<LinearOp> ops;
  ops.reserve(times.size());
  for (double t : times)
    ops.push_back([shared, t](const LatticeVector& x) { return apply(*shared, x, t); });
  return ops;
}

struct MaximalRatioRow {
  double sigma = 0.0;
  double p = 0.0;
  double ratio = 0.0;
};

struct DivergenceTable {
  std::vector<MaximalRatioRow> rows;
  bool p1_strictly_increasing = false; // along decreasing sigma
};

/// Normalized indicator spike of width sigma centered in the grid.
inline LatticeVector indicator_spike(const HeatGrid& grid, double sigma) {
  const double h = grid.h();
  const int cells = static_cast<int>(std::lround(sigma / h));
  if (cells < 2)
    throw resolution_error("spike width " + std::to_string(sigma) +
                           " is under the grid resolution; smallest admissible width is " +
                           std::to_string(2.0 * h));
  if (grid.spec().d != 1) throw invalid_parameter("indicator_spike: d = 1 only");
  const int n = grid.spec().N;
  if (cells > n) throw invalid_parameter("indicator_spike: width exceeds the domain");
  std::vector<double> f(static_cast<std::size_t>(n), 0.0);
  const int lo = n / 2 - cells / 2;
  for (int i = lo; i < lo + cells; ++i) f[static_cast<std::size_t>(i)] = 1.0 / (cells * h);
  return LatticeVector(std::move(f));
}

/// Maximal-function mass ratios of shrinking unit-mass spikes under the heat
/// semigroup: the L^1 ratios diverge like log(1/sigma) while the L^2 ratios
/// stay in a fixed band.
inline DivergenceTable heat_l1_divergence(const GridSpec& spec,
                                          const std::vector<double>& sigmas, double t0,
                                          const std::vector<double>& ps = {1.0, 2.0},
                                          int time_points = 256) {
  if (sigmas.empty()) throw structural_error("heat_l1_divergence: empty sigma list");
  for (std::size_t i = 1; i < sigmas.size(); ++i)
    if (!(sigmas[i] < sigmas[i - 1]))
      throw invalid_parameter("heat_l1_divergence: sigmas must be strictly decreasing");

  const HeatGrid grid(spec);
  const SemigroupHandle handle = grid;
  DivergenceTable table;
  std::vector<double> p1_ratios;
  for (double sigma : sigmas) {
    const LatticeVector f = indicator_spike(grid, sigma);
    const OrbitBound ob =
        maximal_function(handle, f, t0, default_time_grid(handle, t0, time_points));
    for (double p : ps) {
      const LatticeNorm norm = natural_lp(handle, p);
      const double ratio = norm(ob.bound) / norm(f);
      table.rows.push_back({sigma, p, ratio});
      if (p == 1.0) p1_ratios.push_back(ratio);
    }
  }
  table.p1_strictly_increasing = p1_ratios.size() == sigmas.size();
  for (std::size_t i = 1; i < p1_ratios.size(); ++i)
    if (!(p1_ratios[i] > p1_ratios[i - 1])) table.p1_strictly_increasing = false;
  return table;
}

struct ShiftBlowupRow {
  double delta = 0.0;
  double p = 0.0;
  double ratio = 0.0;
  double closed_form = 0.0; // ((t0 + delta)/delta)^{1/p}
};

/// Shift-semigroup maximal blow-up for unit-mass indicator spikes: the
/// sampled ratio is compared with the exact sweep value
/// ((t0 + delta)/delta)^{1/p}. Requires period > t0 + max delta so the sweep
/// does not wrap into itself.
inline std::vector<ShiftBlowupRow> shift_maximal_blowup(const ShiftGrid& grid,
                                                        const std::vector<double>& deltas,
                                                        double t0,
                                                        const std::vector<double>& ps = {1.0,
                                                                                         2.0}) {
  if (!(t0 > 0.0)) throw invalid_parameter("shift_maximal_blowup: t0 must be > 0");
  const double h = grid.h();
  const int n = grid.N();
  std::vector<ShiftBlowupRow> rows;
  for (double delta : deltas) {
    if (!(t0 + delta < grid.period()))
      throw invalid_parameter("shift_maximal_blowup: need period > t0 + delta");
    const int cells = static_cast<int>(std::lround(delta / h));
    if (cells < 2)
      throw resolution_error("spike width " + std::to_string(delta) +
                             " is under the grid resolution; smallest admissible width is " +
                             std::to_string(2.0 * h));
    std::vector<double> f(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < cells; ++i) f[static_cast<std::size_t>(i)] = 1.0 / (cells * h);
    const LatticeVector spike(std::move(f));

    // Every grid shift in [0, t0]: the sampled supremum is exact.
    LatticeVector m = LatticeVector::zeros(static_cast<std::size_t>(n));
    const long steps = std::lround(t0 / h);
    for (long s = 0; s <= steps; ++s) m = sup(m, grid.apply(spike, s * h));

    for (double p : ps) {
      const LatticeNorm norm = LatticeNorm::lp(p, std::vector<double>(spike.size(), h));
      rows.push_back({delta, p, norm(m) / norm(spike),
                      std::pow((t0 + delta) / delta, 1.0 / p)});
    }
  }
  return rows;
}

} // namespace ruclab
