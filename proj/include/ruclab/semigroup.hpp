#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ruclab/common.hpp"
#include "ruclab/detail/fft.hpp"
#include "ruclab/lattice.hpp"

namespace ruclab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Vector to_eigen(const LatticeVector& x) {
  Vector v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  return v;
}

inline LatticeVector from_eigen(const Vector& v) {
  std::vector<double> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v[i];
  return LatticeVector(std::move(out));
}

namespace detail {

/// e^B by scaling-and-squaring with a Taylor core at ||B/2^s||_inf <= 1/2.
inline Matrix matrix_exp(const Matrix& B) {
  const Eigen::Index n = B.rows();
  const double norm = B.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix C = B / std::pow(2.0, s);

  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 18; ++k) {
    term = (term * C) / static_cast<double>(k);
    result += term;
  }
  for (int i = 0; i < s; ++i) result = result * result;
  return result;
}

/// Entries in [-band, 0) are rounding noise of a nonnegative quantity.
inline void clamp_tiny_negatives(Matrix& m, double band = 1e-12) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) < 0.0 && m(i, j) >= -band) m(i, j) = 0.0;
}

/// Max real part of the spectrum, via the QR eigensolver.
inline double spectral_abscissa(const Matrix& A) {
  Eigen::EigenSolver<Matrix> solver(A, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw numerical_error("eigenvalue iteration did not converge (max iterations = " +
                          std::to_string(A.rows() * 40) + ")");
  return solver.eigenvalues().real().maxCoeff();
}

} // namespace detail

/// Square real matrix with nonnegative off-diagonal entries -- exactly the
/// generators A for which e^{tA} is entrywise nonnegative for all t >= 0.
class MetzlerGenerator {
public:
  explicit MetzlerGenerator(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols())
      throw invalid_generator("generator must be square");
    if (entries_.rows() == 0) throw invalid_generator("generator must be nonempty");
    for (Eigen::Index i = 0; i < entries_.rows(); ++i)
      for (Eigen::Index j = 0; j < entries_.cols(); ++j)
        if (i != j && entries_(i, j) < 0.0)
          throw invalid_generator("negative off-diagonal entry at (" + std::to_string(i) +
                                  "," + std::to_string(j) + ")");
  }

  const Matrix& matrix() const { return entries_; }
  int dim() const { return static_cast<int>(entries_.rows()); }

private:
  Matrix entries_;
};

/// e^{tA}; entries within 1e-12 below zero are clamped to zero.
inline Matrix expm(const MetzlerGenerator& A, double t) {
  if (!(t >= 0.0)) throw invalid_parameter("expm: t must be >= 0, got " + std::to_string(t));
  Matrix e = detail::matrix_exp(t * A.matrix());
  detail::clamp_tiny_negatives(e);
  return e;
}

/// (lambda I - A)^{-1}, defined (and entrywise >= 0) for lambda right of the
/// spectral bound.
inline Matrix resolvent(const MetzlerGenerator& A, double lambda) {
  const double s = detail::spectral_abscissa(A.matrix());
  if (!(lambda > s))
    throw resolvent_undefined("resolvent: lambda = " + std::to_string(lambda) +
                              " is not right of the spectral bound s(A) = " + std::to_string(s));
  const Eigen::Index n = A.matrix().rows();
  Matrix m = lambda * Matrix::Identity(n, n) - A.matrix();
  Matrix r = m.partialPivLu().solve(Matrix::Identity(n, n));
  detail::clamp_tiny_negatives(r);
  return r;
}

struct QuadratureSpec {
  int panels = 8192;      // composite Simpson intervals (forced even)
  double tail_cut = 1e-10; // truncate where e^{T s(A)} < tail_cut
};

struct LaplaceCheckReport {
  double t_end = 0.0;
  int panels = 0;
  double residual = 0.0; // max-coordinate |quadrature - resolvent*z|
};

/// Checks the Laplace identity int_0^inf e^{sA} z ds = (-A)^{-1} z by
/// composite Simpson quadrature on [0, T], T chosen from the tail cut.
inline LaplaceCheckReport laplace_resolvent_check(const MetzlerGenerator& A,
                                                  const LatticeVector& z,
                                                  const QuadratureSpec& quad = {}) {
  const double s = detail::spectral_abscissa(A.matrix());
  if (!(s < 0.0))
    throw precondition_error("laplace_resolvent_check: requires s(A) < 0, got s(A) = " +
                             std::to_string(s));
  if (quad.panels < 2) throw invalid_parameter("laplace_resolvent_check: panels must be >= 2");
  if (static_cast<int>(z.size()) != A.dim())
    throw structural_error("laplace_resolvent_check: dimension mismatch");

  const int panels = quad.panels + (quad.panels % 2); // Simpson needs an even count
  const double t_end = std::log(1.0 / quad.tail_cut) / (-s);
  const double step = t_end / panels;

  // f_k = e^{k h A} z via the one-step recurrence f_{k+1} = e^{hA} f_k.
  const Matrix e_step = detail::matrix_exp(step * A.matrix());
  Vector f = to_eigen(z);
  Vector acc = f; // Simpson weight 1 at s = 0
  for (int k = 1; k < panels; ++k) {
    f = e_step * f;
    acc += (k % 2 == 1 ? 4.0 : 2.0) * f;
  }
  f = e_step * f;
  acc += f;
  Vector integral = (step / 3.0) * acc;

  Vector exact = resolvent(A, 0.0) * to_eigen(z);
  LaplaceCheckReport report;
  report.t_end = t_end;
  report.panels = panels;
  report.residual = (integral - exact).cwiseAbs().maxCoeff();
  return report;
}

enum class Boundary { Periodic, ZeroPad };

struct GridSpec {
  int d = 1;           // dimension (axes are separable)
  double L = 1.0;      // half-width: domain [-L, L)^d
  int N = 2;           // points per axis, x_i = -L + i*h, h = 2L/N
  Boundary boundary = Boundary::Periodic;
  double diffusion = 1.0; // semigroup acts by the kernel at time diffusion*t
  bool renormalize = true;
};

/// Raw heat kernel value (4 pi t)^{-d/2} exp(-r^2 / (4t)).
inline double heat_kernel_value(double r2, double t, int d) {
  return std::pow(4.0 * M_PI * t, -0.5 * d) * std::exp(-r2 / (4.0 * t));
}

/// Grid samples of the heat kernel at time t, centered at 0; when
/// renormalized, the samples carry unit discrete mass sum * h^d = 1.
struct HeatKernelSample {
  double t = 0.0;
  LatticeVector values;
  bool renormalized = true;
};

/// Heat semigroup on a periodic or zero-padded grid: T(t)f = k_{vt} * f with
/// the sampled (and by default renormalized) Gaussian kernel. Axes are
/// convolved separately; the product of the per-axis kernels is the full
/// d-dimensional kernel.
class HeatGrid {
public:
  explicit HeatGrid(GridSpec spec) : spec_(spec) {
    if (spec_.d < 1 || spec_.d > 3) throw invalid_parameter("HeatGrid: d must be 1, 2 or 3");
    if (spec_.N < 2) throw invalid_parameter("HeatGrid: N must be >= 2");
    if (!(spec_.L > 0.0)) throw invalid_parameter("HeatGrid: L must be > 0");
    if (!(spec_.diffusion > 0.0)) throw invalid_parameter("HeatGrid: diffusion must be > 0");
  }

  const GridSpec& spec() const { return spec_; }
  double h() const { return 2.0 * spec_.L / spec_.N; }
  double cell_volume() const { return std::pow(h(), spec_.d); }
  std::size_t total_points() const {
    std::size_t n = 1;
    for (int a = 0; a < spec_.d; ++a) n *= static_cast<std::size_t>(spec_.N);
    return n;
  }
  double coordinate(int i) const { return -spec_.L + i * h(); }

  /// Below this time the sampled kernel under-resolves the grid.
  double t_min() const { return h() * h() / 4.0; }
  bool under_resolved(double t) const { return t > 0.0 && spec_.diffusion * t < t_min(); }

  /// 1-d kernel at kernel time tau on offsets m*h. Periodic wrap folds the
  /// negative offsets into m > N/2, so the plain sum is the full circle mass;
  /// the zero-pad line kernel is symmetric and counts offsets +-m twice.
  std::vector<double> kernel_1d(double tau, bool renormalize) const {
    const int n = spec_.N;
    const double hh = h();
    std::vector<double> k(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
      double dist = m * hh;
      if (spec_.boundary == Boundary::Periodic)
        dist = std::min(dist, 2.0 * spec_.L - dist);
      k[static_cast<std::size_t>(m)] = heat_kernel_value(dist * dist, tau, 1);
    }
    if (renormalize) {
      double mass = k[0] * hh;
      for (int m = 1; m < n; ++m)
        mass += (spec_.boundary == Boundary::Periodic ? 1.0 : 2.0) *
                k[static_cast<std::size_t>(m)] * hh;
      for (double& v : k) v /= mass;
    }
    return k;
  }

  /// d-dimensional kernel sampled on the full grid, centered at x = 0.
  HeatKernelSample kernel_sample(double t, bool renormalize) const {
    if (!(t > 0.0)) throw invalid_parameter("kernel_sample: t must be > 0");
    const double tau = spec_.diffusion * t;
    std::vector<double> k1 = kernel_1d(tau, renormalize);
    const int n = spec_.N;
    const int center = n / 2;
    std::vector<double> axis(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      int off = std::abs(i - center);
      if (spec_.boundary == Boundary::Periodic) off = std::min(off, n - off);
      axis[static_cast<std::size_t>(i)] = k1[static_cast<std::size_t>(off)];
    }
    std::vector<double> vals(total_points(), 1.0);
    for (int a = 0; a < spec_.d; ++a) {
      std::size_t stride = 1;
      for (int b = 0; b < a; ++b) stride *= static_cast<std::size_t>(n);
      for (std::size_t i = 0; i < vals.size(); ++i)
        vals[i] *= axis[(i / stride) % static_cast<std::size_t>(n)];
    }
    return HeatKernelSample{t, LatticeVector(std::move(vals)), renormalize};
  }

  LatticeVector apply(const LatticeVector& f, double t) const {
    if (!(t >= 0.0)) throw invalid_parameter("heat_apply: t must be >= 0");
    if (f.size() != total_points())
      throw structural_error("heat_apply: grid function has wrong size");
    if (t == 0.0) return f;

    const double tau = spec_.diffusion * t;
    const std::vector<double> k = kernel_1d(tau, spec_.renormalize);
    std::vector<double> data = f.values();
    const int n = spec_.N;
    for (int a = 0; a < spec_.d; ++a) {
      std::size_t stride = 1;
      for (int b = 0; b < a; ++b) stride *= static_cast<std::size_t>(n);
      convolve_axis(data, k, stride);
    }
    return LatticeVector(std::move(data));
  }

private:
  void convolve_axis(std::vector<double>& data, const std::vector<double>& k,
                     std::size_t stride) const {
    const std::size_t n = static_cast<std::size_t>(spec_.N);
    const std::size_t total = data.size();
    const double hh = h();
    std::vector<double> line(n), conv;
    const std::size_t n_lines = total / n;
    for (std::size_t l = 0; l < n_lines; ++l) {
      // Decompose the line id into (outer, inner) around the axis stride.
      const std::size_t inner = l % stride;
      const std::size_t outer = l / stride;
      const std::size_t base = outer * stride * n + inner;
      for (std::size_t i = 0; i < n; ++i) line[i] = data[base + i * stride];
      if (spec_.boundary == Boundary::Periodic) {
        conv = detail::circular_convolve(line, k);
        for (double& v : conv) v *= hh;
      } else {
        conv.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t off = i >= j ? i - j : j - i;
            acc += k[off] * line[j];
          }
          conv[i] = acc * hh;
        }
      }
      for (std::size_t i = 0; i < n; ++i) data[base + i * stride] = conv[i];
    }
  }

  GridSpec spec_;
};

/// Left shift semigroup (T(t)f)(x) = f(x + t) on a periodic grid over
/// [0, period). Times are snapped to the nearest grid multiple.
class ShiftGrid {
public:
  ShiftGrid(int N, double period = 1.0) : n_(N), period_(period) {
    if (N < 1) throw invalid_parameter("ShiftGrid: N must be >= 1");
    if (!(period > 0.0)) throw invalid_parameter("ShiftGrid: period must be > 0");
  }

  int N() const { return n_; }
  double period() const { return period_; }
  double h() const { return period_ / n_; }

  struct Snap {
    long steps = 0;
    double distance = 0.0; // |t - steps*h|
  };

  Snap snap(double t) const {
    Snap s;
    s.steps = std::lround(t / h());
    s.distance = std::abs(t - s.steps * h());
    return s;
  }

  LatticeVector apply(const LatticeVector& f, double t) const {
    if (!(t >= 0.0)) throw invalid_parameter("shift_apply: t must be >= 0");
    if (f.size() != static_cast<std::size_t>(n_))
      throw structural_error("shift_apply: grid function has wrong size");
    const long m = snap(t).steps % n_;
    std::vector<double> out(static_cast<std::size_t>(n_));
    for (long i = 0; i < n_; ++i)
      out[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>((i + m) % n_)];
    return LatticeVector(std::move(out));
  }

private:
  int n_;
  double period_;
};

/// Matrix semigroup e^{tA} for a Metzler generator.
class MatrixSemigroup {
public:
  explicit MatrixSemigroup(MetzlerGenerator gen) : gen_(std::move(gen)) {}

  const MetzlerGenerator& generator() const { return gen_; }
  int dim() const { return gen_.dim(); }

  LatticeVector apply(const LatticeVector& x, double t) const {
    if (static_cast<int>(x.size()) != gen_.dim())
      throw structural_error("matrix apply: dimension mismatch");
    return from_eigen(expm(gen_, t) * to_eigen(x));
  }

private:
  MetzlerGenerator gen_;
};

/// Uniform interface over the concrete semigroups.
using SemigroupHandle = std::variant<MatrixSemigroup, HeatGrid, ShiftGrid>;

inline LatticeVector apply(const SemigroupHandle& handle, const LatticeVector& x, double t) {
  return std::visit([&](const auto& h) { return h.apply(x, t); }, handle);
}

inline std::size_t state_dim(const SemigroupHandle& handle) {
  return std::visit(
      [](const auto& h) -> std::size_t {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, MatrixSemigroup>)
          return static_cast<std::size_t>(h.dim());
        else if constexpr (std::is_same_v<T, HeatGrid>)
          return h.total_points();
        else
          return static_cast<std::size_t>(h.N());
      },
      handle);
}

/// Smallest time the handle resolves honestly (0 except for heat grids).
inline double time_floor(const SemigroupHandle& handle) {
  if (const auto* grid = std::get_if<HeatGrid>(&handle)) return grid->t_min();
  return 0.0;
}

/// Natural L^p norm of the handle's state space: cell masses for grids,
/// unit weights for matrix coordinates.
inline LatticeNorm natural_lp(const SemigroupHandle& handle, double p) {
  const std::size_t n = state_dim(handle);
  double w = 1.0;
  if (const auto* grid = std::get_if<HeatGrid>(&handle)) w = grid->cell_volume();
  if (const auto* shift = std::get_if<ShiftGrid>(&handle)) w = shift->h();
  return LatticeNorm::lp(p, std::vector<double>(n, w));
}

struct DominationRow {
  std::size_t f_index = 0;
  double t = 0.0;
  double max_positive_part = 0.0; // of S(t)f - c T(bt) f
};

struct GaussianDominationReport {
  std::vector<DominationRow> rows;
  bool certified = false;
};

/// Checks S(t)f <= c T(bt) f for nonnegative f and t in [0,1].
inline GaussianDominationReport gaussian_domination_check(const SemigroupHandle& S,
                                                          const HeatGrid& T, double b, double c,
                                                          const std::vector<LatticeVector>& fs,
                                                          const std::vector<double>& ts) {
  if (!(b >= 0.0)) throw invalid_parameter("gaussian_domination_check: b must be >= 0");
  if (!(c >= 1.0)) throw invalid_parameter("gaussian_domination_check: c must be >= 1");
  for (double t : ts)
    if (!(t >= 0.0) || t > 1.0)
      throw invalid_parameter("gaussian_domination_check: the estimate is stated for t in "
                              "[0,1] only; refusing t = " + std::to_string(t));
  GaussianDominationReport report;
  report.certified = true;
  for (std::size_t fi = 0; fi < fs.size(); ++fi) {
    const LatticeVector& f = fs[fi];
    if (!is_nonnegative(f))
      throw precondition_error("gaussian_domination_check: f must be >= 0 (index " +
                               std::to_string(fi) + ")");
    if (f.size() != T.total_points() || f.size() != state_dim(S))
      throw structural_error("gaussian_domination_check: incompatible grids");
    const double tol = 1e-9 * LatticeNorm::sup_norm()(f);
    for (double t : ts) {
      const LatticeVector lhs = apply(S, f, t);
      const LatticeVector rhs = T.apply(f, b * t);
      double worst = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i)
        worst = std::max(worst, lhs[i] - c * rhs[i]);
      report.rows.push_back({fi, t, worst});
      if (worst > tol) report.certified = false;
    }
  }
  return report;
}

} // namespace ruclab
