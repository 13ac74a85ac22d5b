#pragma once

// Convergence diagnostics: exact 1-D empirical Wasserstein distances and the
// log-log rate-slope experiment.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sgld/core/engine.hpp"

namespace sgld::metrics {

// W_p between equal-size empirical measures: sort both, pair order statistics,
// (mean |a_(i) - b_(i)|^p)^{1/p}. p in {1, 2}; unequal sizes are rejected.
double wasserstein_p_1d(std::span<const double> a, std::span<const double> b, int p);

struct RatePoint {
  double lambda = 0;
  double w_distance = 0;
  int n_chains = 0;
  std::uint64_t seed = 0;
};

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
};

// Ordinary least squares of log(w_distance) on log(lambda).
SlopeFit fit_loglog_slope(std::span<const RatePoint> points);

// Reference sample source for the rate experiment.
struct RateReference {
  enum class Mode { sgld_fine, analytic } mode = Mode::sgld_fine;
  double lambda_ref = 1e-5;                        // sgld_fine
  std::function<std::vector<double>(int count, std::uint64_t seed)> analytic_sampler;
};

struct RateExperimentConfig {
  std::vector<double> lambdas;
  int n_chains = 2000;
  double horizon = 100.0;  // physical time T; per-lambda iterations = T / lambda
  int coordinate = 0;      // which parameter coordinate the distance tracks
  std::uint64_t seed = 0;
  RateReference reference;
  SgldConfig base;  // beta, theta0; lambda/iterations overridden per point
  int threads = 0;
};

struct RateExperimentResult {
  std::vector<RatePoint> points;
  SlopeFit fit;
  std::string points_csv() const;
  std::string summary_json() const;
};

RateExperimentResult rate_experiment(const RateExperimentConfig& cfg,
                                     const GradientOracle& oracle,
                                     const StreamFactory& streams);

}  // namespace sgld::metrics
