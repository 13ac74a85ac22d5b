#pragma once

// Canonical per-coordinate arithmetic for the SGLD update and the built-in
// gradient formulas. Both the generic engine and the batch kernels (scalar
// and SIMD alike) evaluate these exact operation sequences, so a chain's
// trajectory does not depend on which execution path ran it.

#include <cmath>

namespace sgld::step_math {

inline double noise_scale(double lambda, double beta) { return std::sqrt(2.0 * lambda / beta); }

// theta' = theta - lambda*grad + noise_scale*xi
inline double sgld_update(double theta, double lambda, double noise_scale, double grad,
                          double xi) {
  const double drifted = std::fma(-lambda, grad, theta);
  return std::fma(noise_scale, xi, drifted);
}

// H(theta, x) = -q + 1{x < theta} + 2*gamma*theta
inline double quantile_grad(double theta, double x, double q, double two_gamma) {
  const double base = (x < theta) ? 1.0 - q : -q;
  return std::fma(two_gamma, theta, base);
}

// H(theta, x) = 1 - 1{f(x) >= theta}/(1 - qbar) + 2*gamma*theta
inline double var_cvar_grad(double theta, double fx, double inv_one_minus_qbar,
                            double two_gamma) {
  const double base = (fx >= theta) ? 1.0 - inv_one_minus_qbar : 1.0;
  return std::fma(two_gamma, theta, base);
}

// Portfolio gradient, theta coordinate: same form with f(x) = sum g_i(w) x_i.
// w_j coordinate: ghat_j * 1{port >= theta}/(1-qbar) + 2*gamma*w_j where
// ghat_j = sum_i dg_i/dw_j x_i = g_j * (x_j - port).
inline double portfolio_theta_grad(double theta, double port, double inv_one_minus_qbar,
                                   double two_gamma) {
  return var_cvar_grad(theta, port, inv_one_minus_qbar, two_gamma);
}

inline double portfolio_w_grad(double w_j, double g_j, double x_j, double port,
                               bool in_tail, double inv_one_minus_qbar, double two_gamma) {
  const double ghat = g_j * (x_j - port);
  const double base = in_tail ? ghat * inv_one_minus_qbar : 0.0;
  return std::fma(two_gamma, w_j, base);
}

}  // namespace sgld::step_math
