// Scalar reference kernels. Portable, no intrinsics; the SIMD variants are
// validated against these bit for bit.

#include <cmath>
#include <cstddef>

#include "sgld/kernels/batch.hpp"
#include "sgld/kernels/scalar_core.hpp"
#include "sgld/kernels/vmath.hpp"

namespace sgld::kernels {
namespace {

void normal_block_scalar(const rng::PhiloxKey* keys, int lanes, std::uint64_t first,
                         int count, double* out) {
  for (int l = 0; l < lanes; ++l) {
    vmath::NormalCursor cur(keys[l], first);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i) * lanes + l] = cur.next();
  }
}

void quantile_ar1_run_scalar(const QuantileAr1Params& p, const rng::PhiloxKey* data_keys,
                             const rng::PhiloxKey* noise_keys, int lanes,
                             std::uint64_t step0, int nsteps, double* theta,
                             double* x_state) {
  for (int l = 0; l < lanes; ++l) {
    scalar_core::quantile_ar1_lane(p, data_keys[l], noise_keys[l], step0, nsteps,
                                   theta[l], x_state[l]);
  }
}

void varcvar_run_scalar(const VarCvarParams& p, const rng::PhiloxKey* data_keys,
                        const rng::PhiloxKey* noise_keys, int lanes, std::uint64_t step0,
                        int nsteps, double* theta, const double* xbuf) {
  for (int l = 0; l < lanes; ++l) {
    scalar_core::varcvar_lane(p, data_keys[l], noise_keys[l], lanes, step0, nsteps,
                              theta[l], xbuf, l);
  }
}

void portfolio_run_scalar(const PortfolioParams& p, const rng::PhiloxKey* data_keys,
                          const rng::PhiloxKey* noise_keys, int lanes,
                          std::uint64_t step0, int nsteps, double* theta, double* w,
                          const double* xbuf) {
  for (int l = 0; l < lanes; ++l) {
    scalar_core::portfolio_lane(p, data_keys[l], noise_keys[l], lanes, step0, nsteps,
                                theta[l], w, xbuf, l);
  }
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double shortfall_sum_scalar(const double* x, std::size_t n, double threshold) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - threshold;
    acc += d > 0.0 ? d : 0.0;
  }
  return acc;
}

double abs_diff_pow_sum_scalar(const double* a, const double* b, std::size_t n, int p) {
  double acc = 0.0;
  if (p == 1) {
    for (std::size_t i = 0; i < n; ++i) acc += std::fabs(a[i] - b[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = a[i] - b[i];
      acc = std::fma(d, d, acc);
    }
  }
  return acc;
}

void axpy_mix_scalar(const double* delta, const double* base, double g, double* out,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::fma(g, delta[i], base[i]);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar",        normal_block_scalar, quantile_ar1_run_scalar,
      varcvar_run_scalar, portfolio_run_scalar, sum_scalar,
      shortfall_sum_scalar, abs_diff_pow_sum_scalar, axpy_mix_scalar,
  };
  return table;
}

}  // namespace sgld::kernels
