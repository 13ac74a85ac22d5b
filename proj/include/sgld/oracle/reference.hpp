#pragma once

// Brute-force reference computations: empirical quantile/CVaR estimators, the
// grid-search portfolio optimum, and a Monte Carlo validator for conditional
// Lipschitz continuity of gradient oracles.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sgld/core/engine.hpp"
#include "sgld/dist/distribution.hpp"

namespace sgld::oracle {

// Order statistic at 1-based index ceil(q*N) of the sorted sample
// (lower empirical quantile, frozen convention). Input order irrelevant.
double empirical_quantile(std::span<const double> samples, double q);

// Rockafellar-Uryasev plug-in: qhat + mean((x - qhat)_+)/(1 - q_bar).
double empirical_cvar(std::span<const double> samples, double q_bar);

struct GridSearchResult {
  double w_star = 0;     // optimal weight of asset 1
  double var_star = 0;   // empirical quantile at the optimal weight
  double cvar_star = 0;  // minimal CVaR over the grid
  std::vector<std::pair<double, double>> curve;  // (weight, cvar) per grid point
  std::uint64_t seed = 0;
  std::int64_t mc_samples = 0;

  std::string to_csv() const;
  std::string summary_json() const;
};

// CVaR of g*X1 + (1-g)*X2 over an evenly spaced weight grid on [0,1], common
// random numbers across grid points.
GridSearchResult grid_search_cvar(const dist::DistributionSpec& spec1,
                                  const dist::DistributionSpec& spec2, double q_bar,
                                  int grid, std::int64_t mc_samples, std::uint64_t seed,
                                  int threads = 0);

struct ClcEstimate {
  double max_ratio = 0;
  std::vector<double> per_pair;  // E|H(a,X) - H(b,X)| / |a - b| per parameter pair
};

// Monte Carlo estimate of the conditional Lipschitz ratio over parameter
// pairs. Diagnostic only; reported, never enforced.
ClcEstimate validate_clc(const GradientOracle& oracle, const StreamFactory& streams,
                         std::span<const std::pair<ParameterPoint, ParameterPoint>> pairs,
                         std::int64_t draws, std::uint64_t seed);

}  // namespace sgld::oracle
