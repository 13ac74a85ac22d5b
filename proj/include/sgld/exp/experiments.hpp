#pragma once

// Experiment drivers behind the CLI subcommands. Each run_* function resolves
// defaults, executes, and returns a report carrying every value needed to
// reproduce the run (full parameter record plus seeds).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgld/core/engine.hpp"
#include "sgld/dist/distribution.hpp"
#include "sgld/metrics/metrics.hpp"
#include "sgld/oracle/reference.hpp"

namespace sgld::exp {

// ---- quantile estimation -----------------------------------------------------

struct QuantileParams {
  dist::StreamSpec stream = dist::StreamSpec::parse("ar1:0.5");
  double q = 0.95;
  double gamma = 1e-6;
  double lambda = 1e-4;
  double beta = 1e8;
  std::int64_t iterations = 1000000;
  std::int64_t burn_in = 10000;
  double theta0 = 3.0;
  std::uint64_t seed = 1;
  std::int64_t stride = 100;
  int chains = 1;
  int threads = 0;
};

struct QuantileReport {
  double terminal = 0;
  double mean_terminal = 0;     // across chains (equals terminal when chains == 1)
  double sd_terminal = 0;
  double reference = 0;         // analytic quantile of the stationary law
  double trace_sd_full = 0;     // over the whole post-burn-in trace
  double trace_sd_settled = 0;  // over the second half of the post-burn-in trace
  ChainTrace trace;
  std::string config_file;      // key=value lines reproducing this run
  std::string to_json() const;
  std::string path_csv() const;
};

QuantileReport run_quantile(const QuantileParams& p);

// ---- single-asset VaR / CVaR ----------------------------------------------------

struct VarCvarParams {
  dist::DistributionSpec dist{dist::Kind::normal, 0, 1};
  double q_bar = 0.95;
  double gamma = 1e-8;
  double lambda = 1e-4;
  double beta = 1e8;
  std::int64_t iterations = 1000000;
  double theta0 = 0.0;
  int chains = 1000;
  std::uint64_t seed = 1;
  std::int64_t readout_samples = 1000000;
  int threads = 0;
};

struct VarCvarReport {
  double var_mean = 0, var_sd = 0;
  double cvar_mean = 0, cvar_sd = 0;
  double var_ref = 0, cvar_ref = 0;
  std::vector<std::string> warnings;
  std::string config_file;
  std::string to_json() const;
};

VarCvarReport run_var_cvar(const VarCvarParams& p);

// ---- portfolio CVaR minimization ---------------------------------------------------

struct PortfolioParams {
  std::vector<dist::DistributionSpec> assets;
  double q_bar = 0.95;
  double gamma = 1e-8;
  double lambda = 1e-4;
  double beta = 1e8;
  std::int64_t iterations = 1000000;
  int chains = 1;
  std::uint64_t seed = 1;
  std::int64_t readout_samples = 1000000;
  bool grid_reference = true;  // run the grid-search oracle alongside
  int grid = 100;
  std::int64_t grid_mc_samples = 1000000;
  std::optional<ParameterPoint> theta0;  // default: all zeros
  int threads = 0;
};

struct PortfolioReport {
  std::vector<double> mean_weights;
  double var_mean = 0, var_sd = 0;
  double cvar_mean = 0, cvar_sd = 0;
  oracle::GridSearchResult reference;  // empty unless grid_reference
  std::vector<std::string> warnings;
  std::string config_file;
  std::string to_json() const;
};

PortfolioReport run_portfolio(const PortfolioParams& p);

// ---- rate-of-convergence experiment -----------------------------------------------

struct RateParams {
  std::string objective = "quantile";  // quantile | var-cvar | portfolio
  dist::StreamSpec stream = dist::StreamSpec::parse("ar1:0.5");  // quantile / var-cvar
  std::vector<dist::DistributionSpec> assets;                    // portfolio
  double q_level = 0.95;  // quantile level or confidence level
  double gamma = 0;       // 0: objective default
  double beta = 1e8;
  std::vector<double> lambdas{2e-5, 5e-5, 1e-4, 2e-4};
  int chains = 2000;
  double horizon = 0;            // 0: objective default (quantile/var-cvar 100, portfolio 60)
  std::string reference = "";    // "analytic" or "sgld:<lambda>"; empty: objective default
  std::optional<ParameterPoint> theta0;  // portfolio default: warm start at the grid optimum
  std::uint64_t seed = 1;
  int coordinate = -1;  // -1: objective default (0, or 1 = first logit for portfolio)
  int threads = 0;
};

struct RateReport {
  metrics::RateExperimentResult result;
  double horizon = 0;
  std::string reference_desc;
  std::string config_file;
  std::string to_json() const;
};

RateReport run_rate(const RateParams& p);

// Gaussian approximation of the target measure at inverse temperature beta,
// used as the analytic reference for the scalar objectives.
std::function<std::vector<double>(int, std::uint64_t)> analytic_quantile_reference(
    const dist::Ar1Spec& ar1, double q, double gamma, double beta);
std::function<std::vector<double>(int, std::uint64_t)> analytic_var_cvar_reference(
    const dist::DistributionSpec& spec, double q_bar, double gamma, double beta);

}  // namespace sgld::exp
