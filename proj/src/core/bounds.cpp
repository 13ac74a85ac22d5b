#include "sgld/core/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgld {

LambdaMaxPair lambda_max_nonconvex(const AssumptionConstants& c) {
  if (!(c.a_dissip > 0)) throw std::invalid_argument("lambda_max_nonconvex: a_dissip must be positive");
  if (!(c.e_k_rho > 0)) throw std::invalid_argument("lambda_max_nonconvex: e_k_rho must be positive");
  const double a = c.a_dissip;
  const double l1 = c.l1;
  const double ek = c.e_k_rho;
  const double inv4a = 1.0 / (4.0 * a);

  LambdaMaxPair out;
  const double one_l1 = 1.0 + l1;
  out.basic = std::min(std::min(a, std::cbrt(a)) / (24.0 * one_l1 * one_l1 * ek), inv4a);

  if (l1 == 0.0) {
    // the L1 terms are vacuous; only the 1/(4a) restriction remains
    out.refined = inv4a;
    return out;
  }
  const double t1 = a / (24.0 * l1 * l1 * ek);
  const double t2 = std::sqrt(a) / (8.0 * std::sqrt(l1 * l1 * l1 * ek));
  const double t3 = std::cbrt(a) / std::cbrt(32.0 * l1 * l1 * l1 * l1 * ek);
  out.refined = std::min(std::min(t1, t2), std::min(t3, inv4a));
  return out;
}

double lambda_max_convex(double a_hat, double l_clc, double l1, double e_k_rho) {
  if (!(a_hat > 0)) throw std::invalid_argument("lambda_max_convex: a_hat must be positive");
  if (!(l_clc > 0)) throw std::invalid_argument("lambda_max_convex: l_clc must be positive");
  const double first = 1.0 / (2.0 * (a_hat + l_clc));
  if (l1 == 0.0) return first;
  return std::min(first, a_hat / (4.0 * l1 * l1 * e_k_rho));
}

}  // namespace sgld
