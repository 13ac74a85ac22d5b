#pragma once

// Theoretical step-size ceilings. These are reported and compared against,
// never enforced: runs with a larger step only emit a warning.

#include "sgld/core/types.hpp"

namespace sgld {

struct LambdaMaxPair {
  double basic = 0;    // min{ min(a, a^{1/3}) / (24 (1+L1)^2 E[K_rho]), 1/(4a) }
  double refined = 0;  // min{ a/(24 L1^2 EK), a^{1/2}/(8 (L1^3 EK)^{1/2}),
                       //      a^{1/3}/(32 L1^4 EK)^{1/3}, 1/(4a) }
};

// Non-convex (dissipativity) ceiling, both the compact and the refined form.
LambdaMaxPair lambda_max_nonconvex(const AssumptionConstants& c);

// Convex ceiling: min{ 1/(2(a_hat + L)), a_hat/(4 L1^2 E[K_rho]) }.
double lambda_max_convex(double a_hat, double l_clc, double l1, double e_k_rho);

}  // namespace sgld
