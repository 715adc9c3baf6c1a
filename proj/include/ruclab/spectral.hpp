#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ruclab/common.hpp"
#include "ruclab/lattice.hpp"
#include "ruclab/semigroup.hpp"

namespace ruclab {

/// Max real part of the spectrum, by the QR eigensolver.
inline double spectral_bound(const MetzlerGenerator& A) {
  return detail::spectral_abscissa(A.matrix());
}

/// Independent cross-check: for Metzler A and any c with A + cI >= 0, the
/// Perron root of A + cI equals s(A) + c. The Perron root is estimated with
/// the Gelfand formula under repeated squaring with renormalization.
inline double spectral_bound_perron(const MetzlerGenerator& A, int squarings = 60) {
  const Matrix& m = A.matrix();
  const double c = std::max(0.0, -m.diagonal().minCoeff()) + 1.0;
  Matrix b = m + c * Matrix::Identity(m.rows(), m.cols());

  // log rho(B) = log||B|| + sum_j 2^{-j} log||S_{j-1}^2||, S normalized.
  const auto inf_norm = [](const Matrix& x) { return x.cwiseAbs().rowwise().sum().maxCoeff(); };
  double nb = inf_norm(b);
  if (nb == 0.0) return -c;
  double log_rho = std::log(nb);
  Matrix s = b / nb;
  for (int j = 1; j <= squarings; ++j) {
    s = s * s;
    const double ns = inf_norm(s);
    if (ns == 0.0) return -c; // nilpotent: rho(B) = 0
    log_rho += std::ldexp(std::log(ns), -j);
    s /= ns;
  }
  return std::exp(log_rho) - c;
}

/// Distance between the two largest real parts of the spectrum (+inf for 1x1
/// generators). A repeated leading real part reads as gap 0, i.e. defective
/// or tied -- exactly the cases where a log-norm fit is contaminated.
inline double spectral_gap(const MetzlerGenerator& A) {
  Eigen::EigenSolver<Matrix> solver(A.matrix(), false);
  if (solver.info() != Eigen::Success)
    throw numerical_error("eigenvalue iteration did not converge");
  std::vector<double> re(static_cast<std::size_t>(solver.eigenvalues().size()));
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
    re[static_cast<std::size_t>(i)] = solver.eigenvalues()[i].real();
  std::sort(re.begin(), re.end(), std::greater<>());
  if (re.size() < 2) return std::numeric_limits<double>::infinity();
  return re[0] - re[1];
}

enum class OperatorNormKind { Sup, L1, L2 };

/// Operator norm of a matrix: exact max row sum (sup), max column sum (l1),
/// or a power-iteration estimate of the largest singular value (l2).
inline double operator_norm(const Matrix& m, OperatorNormKind kind) {
  switch (kind) {
    case OperatorNormKind::Sup:
      return m.cwiseAbs().rowwise().sum().maxCoeff();
    case OperatorNormKind::L1:
      return m.cwiseAbs().colwise().sum().maxCoeff();
    case OperatorNormKind::L2: {
      Vector v = Vector::Ones(m.cols());
      v.normalize();
      double sigma = 0.0;
      for (int it = 0; it < 200; ++it) {
        Vector w = m.transpose() * (m * v);
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        sigma = std::sqrt(nw);
        v = w / nw;
      }
      return sigma;
    }
  }
  return 0.0;
}

/// Spectral bound vs growth-bound fit for one semigroup.
struct SpectralReport {
  double s_A = 0.0;
  double omega_fit = 0.0;
  double t1 = 0.0, t2 = 0.0;
  int n_points = 0;
  double discrepancy = 0.0;
  bool near_defective = false;
  bool window_shrunk = false;
  std::string norm = "sup";
};

inline const char* to_string(OperatorNormKind kind) {
  switch (kind) {
    case OperatorNormKind::Sup: return "sup";
    case OperatorNormKind::L1: return "l1";
    case OperatorNormKind::L2: return "l2";
  }
  return "?";
}

namespace detail {

/// log ||e^{tA}|| computed through the spectral shift e^{tA} =
/// e^{t s} e^{t(A - sI)}, which keeps the matrix exponential in range.
inline double log_expm_norm(const MetzlerGenerator& A, double s, double t,
                            OperatorNormKind kind) {
  const Matrix shifted = A.matrix() - s * Matrix::Identity(A.dim(), A.dim());
  const double norm = operator_norm(matrix_exp(t * shifted), kind);
  return s * t + std::log(norm);
}

} // namespace detail

/// Least-squares slope of log ||T(t)|| over an equispaced window; for matrix
/// semigroups the fit is compared with the spectral bound. If a norm value is
/// not finite the window is halved and the shrink recorded.
inline SpectralReport growth_bound_fit(const MetzlerGenerator& A, double t1, double t2,
                                       int n_points = 33,
                                       OperatorNormKind kind = OperatorNormKind::Sup) {
  if (!(0.0 < t1) || !(t1 < t2)) throw invalid_parameter("growth_bound_fit: need 0 < t1 < t2");
  if (n_points < 2) throw invalid_parameter("growth_bound_fit: need at least 2 points");

  SpectralReport report;
  report.s_A = spectral_bound(A);
  report.n_points = n_points;
  report.norm = to_string(kind);

  bool ok = false;
  while (!ok) {
    std::vector<double> ts(static_cast<std::size_t>(n_points)), ys;
    ys.reserve(ts.size());
    for (int i = 0; i < n_points; ++i)
      ts[static_cast<std::size_t>(i)] = t1 + (t2 - t1) * i / (n_points - 1);
    ok = true;
    for (double t : ts) {
      const double y = detail::log_expm_norm(A, report.s_A, t, kind);
      if (!std::isfinite(y)) { ok = false; break; }
      ys.push_back(y);
    }
    if (!ok) {
      if (t2 <= 2.0 * t1)
        throw numerical_error("growth_bound_fit: norm not finite on the whole window");
      t2 *= 0.5;
      report.window_shrunk = true;
      continue;
    }
    // least squares slope
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) { mt += ts[i]; my += ys[i]; }
    mt /= ts.size();
    my /= ys.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      num += (ts[i] - mt) * (ys[i] - my);
      den += (ts[i] - mt) * (ts[i] - mt);
    }
    report.omega_fit = num / den;
  }
  report.t1 = t1;
  report.t2 = t2;
  report.discrepancy = std::abs(report.s_A - report.omega_fit);
  return report;
}

/// Report with the default fit window [20/gap, 40/gap]; a near-defective
/// spectrum (gap < 1e-6) gets a flag and a wide absolute window instead.
inline SpectralReport spectral_report(const MetzlerGenerator& A,
                                      OperatorNormKind kind = OperatorNormKind::Sup,
                                      int n_points = 33) {
  const double gap = spectral_gap(A);
  double t1, t2;
  bool near_defective = false;
  if (!(gap >= 1e-6)) {
    near_defective = true;
    t1 = 50.0;
    t2 = 400.0;
  } else {
    const double g = std::min(gap, 1e3); // keep the window finite for 1x1 / huge gaps
    t1 = 20.0 / g;
    t2 = 40.0 / g;
  }
  SpectralReport report = growth_bound_fit(A, t1, t2, n_points, kind);
  report.near_defective = near_defective;
  return report;
}

struct NormBoundRow {
  double t = 0.0;
  double violation = 0.0; // max positive part of e^{tA}x - R(0,A)z
};

struct NormBoundReport {
  std::vector<NormBoundRow> rows;
  double tolerance = 0.0;
  bool certified = false;
};

/// Quantitative orbit estimate: if 0 <= T(s)x <= z on [0,1] and s(A) < 0,
/// then T(t)x <= R(0,A) z for every t >= 1. The [0,1] domination is checked
/// on an equispaced sample first and a failure aborts with the failing s.
inline NormBoundReport orbit_bound_to_norm_bound(const MetzlerGenerator& A,
                                                 const LatticeVector& x, const LatticeVector& z,
                                                 const std::vector<double>& ts,
                                                 int precheck_points = 101) {
  const double s_A = spectral_bound(A);
  if (!(s_A < 0.0))
    throw precondition_error("orbit_bound_to_norm_bound: requires s(A) < 0, got " +
                             std::to_string(s_A));
  if (!is_nonnegative(x) || !is_nonnegative(z))
    throw precondition_error("orbit_bound_to_norm_bound: x and z must be >= 0");
  for (double t : ts)
    if (!(t >= 1.0))
      throw invalid_parameter("orbit_bound_to_norm_bound: times must be >= 1");

  const double tol = 1e-9 * (1.0 + LatticeNorm::sup_norm()(z));
  const Vector xe = to_eigen(x);
  const Vector ze = to_eigen(z);
  for (int i = 0; i < precheck_points; ++i) {
    const double s = static_cast<double>(i) / (precheck_points - 1);
    const Vector v = detail::matrix_exp(s * A.matrix()) * xe;
    if ((v - ze).maxCoeff() > tol)
      throw precondition_error("orbit_bound_to_norm_bound: domination T(s)x <= z fails at s = " +
                               std::to_string(s));
  }

  const Vector bound = resolvent(A, 0.0) * ze;
  NormBoundReport report;
  report.tolerance = tol;
  report.certified = true;
  for (double t : ts) {
    const Vector v = detail::matrix_exp(t * A.matrix()) * xe;
    const double viol = std::max(0.0, (v - bound).maxCoeff());
    report.rows.push_back({t, viol});
    if (viol > tol) report.certified = false;
  }
  return report;
}

} // namespace ruclab
