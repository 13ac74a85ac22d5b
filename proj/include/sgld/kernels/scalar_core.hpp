#pragma once

// Single-lane chain loops. The scalar kernel table runs these for every lane;
// SIMD tables run them for the lanes left over after full vector groups.

#include <cstdint>

#include "sgld/kernels/batch.hpp"
#include "sgld/kernels/step_math.hpp"
#include "sgld/kernels/vmath.hpp"

namespace sgld::kernels::scalar_core {

inline void quantile_ar1_lane(const QuantileAr1Params& p, rng::PhiloxKey data_key,
                              rng::PhiloxKey noise_key, std::uint64_t step0, int nsteps,
                              double& theta, double& x_state) {
  vmath::NormalCursor data(data_key, step0);
  vmath::NormalCursor noise(noise_key, step0);
  double th = theta, x = x_state;
  for (int i = 0; i < nsteps; ++i) {
    x = std::fma(p.alpha, x, data.next());
    const double g = step_math::quantile_grad(th, x, p.q, p.two_gamma);
    th = step_math::sgld_update(th, p.lambda, p.noise_scale, g, noise.next());
  }
  theta = th;
  x_state = x;
}

inline void varcvar_lane(const VarCvarParams& p, rng::PhiloxKey data_key,
                         rng::PhiloxKey noise_key, int lanes, std::uint64_t step0,
                         int nsteps, double& theta, const double* xbuf, int lane) {
  vmath::NormalCursor data(data_key, step0);
  vmath::NormalCursor noise(noise_key, step0);
  double th = theta;
  for (int i = 0; i < nsteps; ++i) {
    const double x = xbuf ? xbuf[static_cast<std::size_t>(i) * lanes + lane]
                          : std::fma(p.sigma, data.next(), p.mu);
    const double g = step_math::var_cvar_grad(th, x, p.inv_one_minus_qbar, p.two_gamma);
    th = step_math::sgld_update(th, p.lambda, p.noise_scale, g, noise.next());
  }
  theta = th;
}

// theta plus n_assets logits; w strided by `lanes` per asset.
inline void portfolio_lane(const PortfolioParams& p, rng::PhiloxKey data_key,
                           rng::PhiloxKey noise_key, int lanes, std::uint64_t step0,
                           int nsteps, double& theta, double* w, const double* xbuf,
                           int lane) {
  const int n = p.n_assets;
  vmath::NormalCursor data(data_key, step0 * static_cast<std::uint64_t>(n));
  vmath::NormalCursor noise(noise_key, step0 * static_cast<std::uint64_t>(n + 1));
  double th = theta;
  double wl[kMaxPortfolioAssets];
  double x[kMaxPortfolioAssets];
  double gw[kMaxPortfolioAssets];
  for (int a = 0; a < n; ++a) wl[a] = w[static_cast<std::size_t>(a) * lanes + lane];

  for (int i = 0; i < nsteps; ++i) {
    for (int a = 0; a < n; ++a) {
      x[a] = xbuf ? xbuf[(static_cast<std::size_t>(i) * n + a) * lanes + lane]
                  : std::fma(p.sigma[a], data.next(), p.mu[a]);
    }
    double m = wl[0];
    for (int a = 1; a < n; ++a) m = wl[a] > m ? wl[a] : m;
    double sum_e = 0.0;
    for (int a = 0; a < n; ++a) {
      gw[a] = vmath::exp_real(wl[a] - m);
      sum_e += gw[a];
    }
    double port = 0.0;
    for (int a = 0; a < n; ++a) {
      gw[a] = gw[a] / sum_e;
      port = std::fma(gw[a], x[a], port);
    }
    const bool in_tail = port >= th;

    const double g_theta =
        step_math::portfolio_theta_grad(th, port, p.inv_one_minus_qbar, p.two_gamma);
    th = step_math::sgld_update(th, p.lambda, p.noise_scale, g_theta, noise.next());
    for (int a = 0; a < n; ++a) {
      const double g = step_math::portfolio_w_grad(wl[a], gw[a], x[a], port, in_tail,
                                                   p.inv_one_minus_qbar, p.two_gamma);
      wl[a] = step_math::sgld_update(wl[a], p.lambda, p.noise_scale, g, noise.next());
    }
  }
  theta = th;
  for (int a = 0; a < n; ++a) w[static_cast<std::size_t>(a) * lanes + lane] = wl[a];
}

}  // namespace sgld::kernels::scalar_core
