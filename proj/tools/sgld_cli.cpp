// Command-line front end: quantile | var-cvar | portfolio | rate | oracle-grid.
// Defaults reproduce the published experimental settings; every default is
// overridable by flag or by a key=value config file (flags win).

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sgld/core/types.hpp"
#include "sgld/exp/experiments.hpp"
#include "sgld/oracle/reference.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void write_output(const std::string& path, const std::string& payload) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << payload;
}

struct CommonFlags {
  double lambda = 1e-4;
  double beta = 1e8;
  double gamma = 0;  // 0: per-command default
  std::int64_t iters = 1000000;
  std::int64_t burn_in = 10000;
  int chains = 0;  // 0: per-command default
  std::uint64_t seed = 1;
  std::vector<std::string> dists;
  double qbar = 0.95;
  int grid = 100;
  std::int64_t mc_samples = 1000000;
  std::string out;
  std::string format = "json";
  bool paper_scale = false;
  std::vector<double> theta0;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--lambda", f.lambda, "step size");
  cmd->add_option("--beta", f.beta, "inverse temperature");
  cmd->add_option("--gamma", f.gamma, "L2 regularization weight");
  cmd->add_option("--iters", f.iters, "iterations per chain");
  cmd->add_option("--burn-in", f.burn_in, "discarded initial iterations");
  cmd->add_option("--chains", f.chains, "number of independent chains");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--dist", f.dists, "distribution spec, e.g. normal:0,1 t:10 ar1:0.5");
  cmd->add_option("--qbar", f.qbar, "quantile / confidence level");
  cmd->add_option("--grid", f.grid, "grid points for the reference search");
  cmd->add_option("--mc-samples", f.mc_samples, "Monte Carlo sample count");
  cmd->add_option("--out", f.out, "output file path");
  cmd->add_option("--format", f.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--paper-scale", f.paper_scale, "use the published chain counts");
  cmd->add_option("--theta0", f.theta0, "initial parameter point (repeat per coordinate)");
  cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
  cmd->set_config("--config", "", "key=value file mirroring the flags");
}

sgld::dist::DistributionSpec parse_scalar_dist(const std::string& text) {
  const auto spec = sgld::dist::StreamSpec::parse(text);
  if (spec.is_ar1) throw std::invalid_argument("expected a scalar law, got '" + text + "'");
  return spec.dist;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin toolkit for quantile, VaR and CVaR estimation"};
  app.require_subcommand(1);

  CommonFlags q_flags, v_flags, p_flags, r_flags, g_flags;

  auto* cmd_quantile = app.add_subcommand("quantile", "quantile estimation on an AR(1) stream");
  add_common(cmd_quantile, q_flags);
  std::int64_t q_stride = 100;
  cmd_quantile->add_option("--stride", q_stride, "path recording stride");

  auto* cmd_var = app.add_subcommand("var-cvar", "single-asset VaR and CVaR");
  add_common(cmd_var, v_flags);
  v_flags.burn_in = 0;

  auto* cmd_port = app.add_subcommand("portfolio", "CVaR-minimizing two-asset weights");
  add_common(cmd_port, p_flags);
  bool no_grid_ref = false;
  cmd_port->add_flag("--no-grid-reference", no_grid_ref, "skip the grid-search oracle");

  auto* cmd_rate = app.add_subcommand("rate", "Wasserstein rate-of-convergence experiment");
  add_common(cmd_rate, r_flags);
  std::string rate_objective = "quantile";
  std::vector<double> rate_lambdas;
  double rate_horizon = 0;
  std::string rate_reference;
  int rate_coord = -1;
  cmd_rate->add_option("--objective", rate_objective, "quantile | var-cvar | portfolio");
  cmd_rate->add_option("--rate-lambda", rate_lambdas, "step sizes for the rate grid");
  cmd_rate->add_option("--t-horizon", rate_horizon, "physical horizon T; iterations = T/lambda");
  cmd_rate->add_option("--reference", rate_reference, "analytic or sgld:<lambda>");
  cmd_rate->add_option("--coord", rate_coord, "parameter coordinate tracked by the distance");

  auto* cmd_grid = app.add_subcommand("oracle-grid", "grid-search CVaR reference, standalone");
  add_common(cmd_grid, g_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (cmd_quantile->parsed()) {
      sgld::exp::QuantileParams params;
      if (!q_flags.dists.empty()) params.stream = sgld::dist::StreamSpec::parse(q_flags.dists.at(0));
      params.q = q_flags.qbar;
      params.gamma = q_flags.gamma > 0 ? q_flags.gamma : 1e-6;
      params.lambda = q_flags.lambda;
      params.beta = q_flags.beta;
      params.iterations = q_flags.iters;
      params.burn_in = q_flags.burn_in;
      params.theta0 = q_flags.theta0.empty() ? 3.0 : q_flags.theta0.at(0);
      params.seed = q_flags.seed;
      params.stride = q_stride;
      params.chains = q_flags.chains > 0 ? q_flags.chains : 1;
      params.threads = q_flags.threads;

      const auto rep = sgld::exp::run_quantile(params);
      std::printf("terminal theta    %.6f\n", rep.terminal);
      if (params.chains > 1)
        std::printf("mean terminal     %.6f  (sd %.6f over %d chains)\n", rep.mean_terminal,
                    rep.sd_terminal, params.chains);
      std::printf("reference theta*  %.6f\n", rep.reference);
      std::printf("trace sd          %.6f (full)   %.6f (settled half)\n", rep.trace_sd_full,
                  rep.trace_sd_settled);
      write_output(q_flags.out, q_flags.format == "csv" ? rep.path_csv() : rep.to_json());
    } else if (cmd_var->parsed()) {
      sgld::exp::VarCvarParams params;
      params.dist = v_flags.dists.empty()
                        ? sgld::dist::DistributionSpec{sgld::dist::Kind::normal, 0, 1}
                        : parse_scalar_dist(v_flags.dists.at(0));
      params.q_bar = v_flags.qbar;
      params.gamma = v_flags.gamma > 0 ? v_flags.gamma : 1e-8;
      params.lambda = v_flags.lambda;
      params.beta = v_flags.beta;
      params.iterations = v_flags.iters;
      params.theta0 = v_flags.theta0.empty() ? 0.0 : v_flags.theta0.at(0);
      params.chains = v_flags.chains > 0 ? v_flags.chains : (v_flags.paper_scale ? 10000 : 1000);
      params.seed = v_flags.seed;
      params.readout_samples = v_flags.mc_samples;
      params.threads = v_flags.threads;

      const auto rep = sgld::exp::run_var_cvar(params);
      for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::printf("VaR*   %.4f    CVaR*   %.4f\n", rep.var_ref, rep.cvar_ref);
      std::printf("VaR    %.4f (sd %.4f)    CVaR    %.4f (sd %.4f)\n", rep.var_mean, rep.var_sd,
                  rep.cvar_mean, rep.cvar_sd);
      write_output(v_flags.out, rep.to_json());
    } else if (cmd_port->parsed()) {
      sgld::exp::PortfolioParams params;
      if (p_flags.dists.size() != 2)
        throw std::invalid_argument("portfolio: pass exactly two --dist specs");
      params.assets = {parse_scalar_dist(p_flags.dists[0]), parse_scalar_dist(p_flags.dists[1])};
      params.q_bar = p_flags.qbar;
      params.gamma = p_flags.gamma > 0 ? p_flags.gamma : 1e-8;
      params.lambda = p_flags.lambda;
      params.beta = p_flags.beta;
      params.iterations = p_flags.iters;
      params.chains = p_flags.chains > 0 ? p_flags.chains : 1;
      params.seed = p_flags.seed;
      params.readout_samples = p_flags.mc_samples;
      params.grid = p_flags.grid;
      params.grid_mc_samples = p_flags.paper_scale ? 10000000 : p_flags.mc_samples;
      params.grid_reference = !no_grid_ref;
      params.threads = p_flags.threads;
      if (!p_flags.theta0.empty()) params.theta0 = sgld::ParameterPoint(p_flags.theta0);

      const auto rep = sgld::exp::run_portfolio(params);
      for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::printf("weights  (%.6f, %.6f)\n", rep.mean_weights[0], rep.mean_weights[1]);
      std::printf("VaR      %.4f (sd %.4f)    CVaR    %.4f (sd %.4f)\n", rep.var_mean, rep.var_sd,
                  rep.cvar_mean, rep.cvar_sd);
      if (!rep.reference.curve.empty())
        std::printf("grid ref w*=%.4f  VaR*=%.4f  CVaR*=%.4f\n", rep.reference.w_star,
                    rep.reference.var_star, rep.reference.cvar_star);
      write_output(p_flags.out, rep.to_json());
    } else if (cmd_rate->parsed()) {
      sgld::exp::RateParams params;
      params.objective = rate_objective;
      if (rate_objective == "portfolio") {
        if (r_flags.dists.size() != 2)
          throw std::invalid_argument("rate portfolio: pass exactly two --dist specs");
        params.assets = {parse_scalar_dist(r_flags.dists[0]), parse_scalar_dist(r_flags.dists[1])};
      } else if (!r_flags.dists.empty()) {
        params.stream = sgld::dist::StreamSpec::parse(r_flags.dists.at(0));
      } else if (rate_objective == "var-cvar") {
        params.stream = sgld::dist::StreamSpec::parse("normal:0,1");
      }
      params.q_level = r_flags.qbar;
      params.gamma = r_flags.gamma;
      params.beta = r_flags.beta;
      if (!rate_lambdas.empty()) params.lambdas = rate_lambdas;
      if (params.lambdas.size() < 2)
        throw std::invalid_argument("rate: need at least two step sizes");
      params.chains = r_flags.chains > 0 ? r_flags.chains : 2000;
      params.horizon = rate_horizon;
      params.reference = rate_reference;
      params.seed = r_flags.seed;
      params.coordinate = rate_coord;
      params.threads = r_flags.threads;
      if (!r_flags.theta0.empty()) params.theta0 = sgld::ParameterPoint(r_flags.theta0);

      const auto rep = sgld::exp::run_rate(params);
      std::printf("slope  %.4f   (reference %s, T=%g)\n", rep.result.fit.slope,
                  rep.reference_desc.c_str(), rep.horizon);
      for (const auto& pt : rep.result.points)
        std::printf("lambda %.3g   W1 %.6g\n", pt.lambda, pt.w_distance);
      write_output(r_flags.out,
                   r_flags.format == "csv" ? rep.result.points_csv() : rep.to_json());
    } else if (cmd_grid->parsed()) {
      if (g_flags.dists.size() != 2)
        throw std::invalid_argument("oracle-grid: pass exactly two --dist specs");
      const auto r = sgld::oracle::grid_search_cvar(
          parse_scalar_dist(g_flags.dists[0]), parse_scalar_dist(g_flags.dists[1]), g_flags.qbar,
          g_flags.grid, g_flags.paper_scale ? 10000000 : g_flags.mc_samples, g_flags.seed,
          g_flags.threads);
      std::printf("w*  %.6f   VaR*  %.4f   CVaR*  %.4f\n", r.w_star, r.var_star, r.cvar_star);
      write_output(g_flags.out, g_flags.format == "csv" ? r.to_csv() : r.summary_json());
    }
  } catch (const sgld::ChainDivergedError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  return 0;
}
