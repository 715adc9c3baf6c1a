#pragma once

#include <cstddef>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace ruclab::detail {

// FFTW plan creation/destruction is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Circular convolution c[i] = sum_m f[m] k[(i-m) mod N], computed via
/// real-to-complex FFTs. Deterministic (FFTW_ESTIMATE plans).
inline std::vector<double> circular_convolve(const std::vector<double>& f,
                                             const std::vector<double>& k) {
  const std::size_t n = f.size();
  const std::size_t nc = n / 2 + 1;

  double* in = fftw_alloc_real(n);
  double* out = fftw_alloc_real(n);
  fftw_complex* ff = fftw_alloc_complex(nc);
  fftw_complex* kf = fftw_alloc_complex(nc);

  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, ff, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n), ff, out, FFTW_ESTIMATE);
  }

  for (std::size_t i = 0; i < n; ++i) in[i] = k[i];
  fftw_execute_dft_r2c(fwd, in, kf);
  for (std::size_t i = 0; i < n; ++i) in[i] = f[i];
  fftw_execute_dft_r2c(fwd, in, ff);

  for (std::size_t i = 0; i < nc; ++i) {
    const double re = ff[i][0] * kf[i][0] - ff[i][1] * kf[i][1];
    const double im = ff[i][0] * kf[i][1] + ff[i][1] * kf[i][0];
    ff[i][0] = re;
    ff[i][1] = im;
  }
  fftw_execute_dft_c2r(bwd, ff, out);

  std::vector<double> result(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) result[i] = out[i] * scale;

  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  fftw_free(in);
  fftw_free(out);
  fftw_free(ff);
  fftw_free(kf);
  return result;
}

} // namespace ruclab::detail
