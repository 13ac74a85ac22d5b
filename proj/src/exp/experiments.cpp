#include "sgld/exp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sgld/core/bounds.hpp"
#include "sgld/kernels/batch.hpp"
#include "sgld/objectives/objectives.hpp"

namespace sgld::exp {

namespace {

constexpr std::uint64_t kFreshBatchChain = 0xF0E5F0E5ull;

struct Stats {
  double mean = 0, sd = 0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  const auto n = static_cast<double>(xs.size());
  for (double v : xs) s.mean += v;
  s.mean /= n;
  if (xs.size() > 1) {
    double acc = 0;
    for (double v : xs) acc += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(acc / (n - 1.0));
  }
  return s;
}

// root of an increasing function by bisection
double solve_increasing(const std::function<double(double)>& f, double lo, double hi) {
  while (f(lo) > 0) lo = lo * 2 - 1;
  while (f(hi) < 0) hi = hi * 2 + 1;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
    if (hi - lo < 1e-13 * std::max(1.0, std::fabs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

std::function<std::vector<double>(int, std::uint64_t)> gaussian_reference(double center,
                                                                          double sd) {
  return [center, sd](int count, std::uint64_t seed) {
    vmath::NormalCursor cur(rng::derive_key(seed, 0, rng::Substream::scratch));
    std::vector<double> out(static_cast<std::size_t>(count));
    for (auto& v : out) v = std::fma(sd, cur.next(), center);
    return out;
  };
}

std::string kv_lines(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double trace_sd(const ChainTrace& trace, std::size_t from) {
  if (trace.iterates.size() <= from + 1) return 0.0;
  std::vector<double> xs;
  xs.reserve(trace.iterates.size() - from);
  for (std::size_t i = from; i < trace.iterates.size(); ++i) xs.push_back(trace.iterates[i][0]);
  return stats_of(xs).sd;
}

}  // namespace

// ---- quantile ---------------------------------------------------------------------

QuantileReport run_quantile(const QuantileParams& p) {
  objectives::QuantileOracle oracle({p.q, p.gamma});
  const auto factory = dist::make_stream_factory(p.stream);
  oracle.set_e_k_rho(dist::estimate_e_k_rho(factory, p.seed, 100000));

  SgldConfig cfg;
  cfg.lambda = p.lambda;
  cfg.beta = p.beta;
  cfg.iterations = p.iterations;
  cfg.burn_in = p.burn_in;
  cfg.theta0 = {p.theta0};
  cfg.seed = p.seed;
  cfg.validate();

  QuantileReport rep;
  auto stream = factory(cfg.seed, 0);
  rep.trace = run_chain(cfg, oracle, *stream, p.stride, 0);
  rep.terminal = rep.trace.terminal[0];
  rep.trace_sd_full = trace_sd(rep.trace, 0);
  rep.trace_sd_settled = trace_sd(rep.trace, rep.trace.iterates.size() / 2);

  if (p.chains > 1) {
    const SampleSet s = sample_pi_beta(cfg, oracle, factory, p.chains, {p.threads, false});
    const auto st = stats_of(s.coordinate(0));
    rep.mean_terminal = st.mean;
    rep.sd_terminal = st.sd;
  } else {
    rep.mean_terminal = rep.terminal;
    rep.sd_terminal = 0;
  }

  if (p.stream.is_ar1) {
    const double sd = p.stream.ar1.stationary_sd();
    rep.reference = dist::reference_var({dist::Kind::normal, 0.0, sd}, p.q);
  } else {
    rep.reference = dist::reference_var(p.stream.dist, p.q);
  }

  rep.config_file = kv_lines({{"dist", p.stream.to_string()},
                              {"qbar", num(p.q)},
                              {"gamma", num(p.gamma)},
                              {"lambda", num(p.lambda)},
                              {"beta", num(p.beta)},
                              {"iters", std::to_string(p.iterations)},
                              {"burn-in", std::to_string(p.burn_in)},
                              {"theta0", num(p.theta0)},
                              {"seed", std::to_string(p.seed)},
                              {"stride", std::to_string(p.stride)},
                              {"chains", std::to_string(p.chains)}});
  return rep;
}

std::string QuantileReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "sgld.quantile_report.v1";
  j["terminal"] = terminal;
  j["mean_terminal"] = mean_terminal;
  j["sd_terminal"] = sd_terminal;
  j["reference"] = reference;
  j["trace_sd_full"] = trace_sd_full;
  j["trace_sd_settled"] = trace_sd_settled;
  j["config"] = config_file;
  return j.dump(2);
}

std::string QuantileReport::path_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "schema,sgld.quantile_path.v1\n";
  os << "index,theta\n";
  for (std::size_t i = 0; i < trace.iterates.size(); ++i)
    os << trace.config.burn_in + (static_cast<std::int64_t>(i) + 1) * trace.stride << ","
       << trace.iterates[i][0] << "\n";
  return os.str();
}

// ---- var-cvar ---------------------------------------------------------------------

VarCvarReport run_var_cvar(const VarCvarParams& p) {
  p.dist.validate();
  objectives::VarCvarOracle oracle({p.q_bar, p.gamma});
  oracle.set_density_sup(dist::density_sup(p.dist));
  const dist::StreamSpec sspec{false, p.dist, {}};
  const auto factory = dist::make_stream_factory(sspec);
  oracle.set_e_k_rho(dist::estimate_e_k_rho(factory, p.seed, 100000));

  SgldConfig cfg;
  cfg.lambda = p.lambda;
  cfg.beta = p.beta;
  cfg.iterations = p.iterations;
  cfg.burn_in = 0;
  cfg.theta0 = {p.theta0};
  cfg.seed = p.seed;
  cfg.validate();

  const SampleSet s = sample_pi_beta(cfg, oracle, factory, p.chains, {p.threads, false});
  const std::vector<double> thetas = s.coordinate(0);
  const Stats var_stats = stats_of(thetas);

  // one fresh batch per report, shared across chains
  std::vector<double> batch(static_cast<std::size_t>(p.readout_samples));
  factory(p.seed, kFreshBatchChain)
      ->fill_strided(static_cast<int>(p.readout_samples), batch.data(), 1);
  std::vector<double> cvars(thetas.size());
  const objectives::VarCvarObjective obj{p.q_bar, p.gamma};
  for (std::size_t i = 0; i < thetas.size(); ++i)
    cvars[i] = objectives::objective_value_mc(thetas[i], obj, batch);
  const Stats cvar_stats = stats_of(cvars);

  VarCvarReport rep;
  rep.var_mean = var_stats.mean;
  rep.var_sd = var_stats.sd;
  rep.cvar_mean = cvar_stats.mean;
  rep.cvar_sd = cvar_stats.sd;
  rep.var_ref = dist::reference_var(p.dist, p.q_bar);
  rep.cvar_ref = dist::reference_cvar(p.dist, p.q_bar);
  rep.warnings = dist::assumption_warnings(p.dist);
  rep.config_file = kv_lines({{"dist", p.dist.to_string()},
                              {"qbar", num(p.q_bar)},
                              {"gamma", num(p.gamma)},
                              {"lambda", num(p.lambda)},
                              {"beta", num(p.beta)},
                              {"iters", std::to_string(p.iterations)},
                              {"theta0", num(p.theta0)},
                              {"chains", std::to_string(p.chains)},
                              {"seed", std::to_string(p.seed)},
                              {"mc-samples", std::to_string(p.readout_samples)}});
  return rep;
}

std::string VarCvarReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "sgld.var_cvar_report.v1";
  j["var_sgld"] = var_mean;
  j["var_sgld_sd"] = var_sd;
  j["cvar_sgld"] = cvar_mean;
  j["cvar_sgld_sd"] = cvar_sd;
  j["var_ref"] = var_ref;
  j["cvar_ref"] = cvar_ref;
  j["warnings"] = warnings;
  j["config"] = config_file;
  return j.dump(2);
}

// ---- portfolio ---------------------------------------------------------------------

PortfolioReport run_portfolio(const PortfolioParams& p) {
  if (p.assets.size() < 2) throw std::invalid_argument("portfolio: need at least two assets");
  const int n = static_cast<int>(p.assets.size());
  objectives::PortfolioOracle oracle({p.q_bar, p.gamma, n});
  const auto factory = dist::make_portfolio_stream_factory(p.assets);
  oracle.set_e_k_rho(dist::estimate_e_k_rho(factory, p.seed, 100000));

  SgldConfig cfg;
  cfg.lambda = p.lambda;
  cfg.beta = p.beta;
  cfg.iterations = p.iterations;
  cfg.burn_in = 0;
  cfg.theta0 = p.theta0.value_or(ParameterPoint(std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0)));
  cfg.seed = p.seed;
  cfg.validate();
  if (cfg.theta0.dim() != n + 1)
    throw std::invalid_argument("portfolio: theta0 must have n_assets + 1 coordinates");

  const SampleSet s = sample_pi_beta(cfg, oracle, factory, p.chains, {p.threads, false});

  // fresh shared read-out batch, row-major [count][n]
  std::vector<double> batch(static_cast<std::size_t>(p.readout_samples) * n);
  factory(p.seed, kFreshBatchChain)
      ->fill_strided(static_cast<int>(p.readout_samples), batch.data(), 1);

  const objectives::PortfolioObjective obj{p.q_bar, p.gamma, n};
  std::vector<double> thetas(static_cast<std::size_t>(s.count()));
  std::vector<double> cvars(static_cast<std::size_t>(s.count()));
  std::vector<double> weight_sum(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < s.count(); ++i) {
    const auto pt = s.point(i);
    thetas[static_cast<std::size_t>(i)] = pt[0];
    objectives::PortfolioParameter param;
    param.theta = pt[0];
    param.w.assign(pt.begin() + 1, pt.end());
    const auto g = objectives::softmax_weights(param.w);
    for (int a = 0; a < n; ++a) weight_sum[static_cast<std::size_t>(a)] += g[static_cast<std::size_t>(a)];
    cvars[static_cast<std::size_t>(i)] = objectives::objective_value_mc(param, obj, batch);
  }
  PortfolioReport rep;
  rep.mean_weights.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a)
    rep.mean_weights[static_cast<std::size_t>(a)] = weight_sum[static_cast<std::size_t>(a)] / s.count();
  const Stats var_stats = stats_of(thetas);
  const Stats cvar_stats = stats_of(cvars);
  rep.var_mean = var_stats.mean;
  rep.var_sd = var_stats.sd;
  rep.cvar_mean = cvar_stats.mean;
  rep.cvar_sd = cvar_stats.sd;

  if (p.grid_reference) {
    if (n != 2) throw std::invalid_argument("portfolio: the grid-search reference is two-asset only");
    rep.reference = oracle::grid_search_cvar(p.assets[0], p.assets[1], p.q_bar, p.grid,
                                             p.grid_mc_samples,
                                             rng::splitmix64(p.seed ^ 0x61DD), p.threads);
  }
  for (const auto& a : p.assets) {
    const auto w = dist::assumption_warnings(a);
    rep.warnings.insert(rep.warnings.end(), w.begin(), w.end());
  }

  std::ostringstream dists;
  for (std::size_t a = 0; a < p.assets.size(); ++a)
    dists << (a ? " " : "") << p.assets[a].to_string();
  rep.config_file = kv_lines({{"dist", dists.str()},
                              {"qbar", num(p.q_bar)},
                              {"gamma", num(p.gamma)},
                              {"lambda", num(p.lambda)},
                              {"beta", num(p.beta)},
                              {"iters", std::to_string(p.iterations)},
                              {"chains", std::to_string(p.chains)},
                              {"seed", std::to_string(p.seed)},
                              {"grid", std::to_string(p.grid)},
                              {"mc-samples", std::to_string(p.grid_mc_samples)}});
  return rep;
}

std::string PortfolioReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "sgld.portfolio_report.v1";
  j["weights"] = mean_weights;
  j["var_sgld"] = var_mean;
  j["var_sgld_sd"] = var_sd;
  j["cvar_sgld"] = cvar_mean;
  j["cvar_sgld_sd"] = cvar_sd;
  if (!reference.curve.empty()) {
    j["reference"] = {{"w_star", reference.w_star},
                      {"var_star", reference.var_star},
                      {"cvar_star", reference.cvar_star}};
  }
  j["warnings"] = warnings;
  j["config"] = config_file;
  return j.dump(2);
}

// ---- rate experiment ----------------------------------------------------------------

std::function<std::vector<double>(int, std::uint64_t)> analytic_quantile_reference(
    const dist::Ar1Spec& ar1, double q, double gamma, double beta) {
  const double sd = ar1.stationary_sd();
  const dist::DistributionSpec stat{dist::Kind::normal, 0.0, sd};
  const double theta_star = solve_increasing(
      [&](double th) { return dist::cdf(stat, th) - q + 2.0 * gamma * th; }, -8 * sd, 8 * sd);
  const double curvature = dist::pdf(stat, theta_star) + 2.0 * gamma;
  return gaussian_reference(theta_star, 1.0 / std::sqrt(beta * curvature));
}

std::function<std::vector<double>(int, std::uint64_t)> analytic_var_cvar_reference(
    const dist::DistributionSpec& spec, double q_bar, double gamma, double beta) {
  const double inv = 1.0 / (1.0 - q_bar);
  const double lo = dist::reference_var(spec, 0.01);
  const double hi = dist::reference_var(spec, 1.0 - (1.0 - q_bar) * 0.5);
  const double theta_star = solve_increasing(
      [&](double th) { return 1.0 - (1.0 - dist::cdf(spec, th)) * inv + 2.0 * gamma * th; }, lo,
      hi);
  const double curvature = dist::pdf(spec, theta_star) * inv + 2.0 * gamma;
  return gaussian_reference(theta_star, 1.0 / std::sqrt(beta * curvature));
}

RateReport run_rate(const RateParams& p) {
  metrics::RateExperimentConfig rc;
  rc.lambdas = p.lambdas;
  rc.n_chains = p.chains;
  rc.seed = p.seed;
  rc.threads = p.threads;
  rc.base.beta = p.beta;
  rc.base.iterations = 1;
  rc.base.burn_in = 0;
  rc.base.seed = p.seed;

  std::unique_ptr<GradientOracle> oracle;
  StreamFactory factory;
  std::string ref_choice = p.reference;
  RateReport rep;

  if (p.objective == "quantile") {
    const double gamma = p.gamma > 0 ? p.gamma : 1e-6;
    if (!p.stream.is_ar1)
      throw std::invalid_argument("rate: the quantile objective expects an ar1 stream");
    auto q = std::make_unique<objectives::QuantileOracle>(
        objectives::QuantileObjective{p.q_level, gamma});
    factory = dist::make_stream_factory(p.stream);
    q->set_e_k_rho(dist::estimate_e_k_rho(factory, p.seed, 100000));
    oracle = std::move(q);
    rc.base.theta0 = p.theta0.value_or(ParameterPoint{3.0});
    rc.coordinate = p.coordinate >= 0 ? p.coordinate : 0;
    rc.horizon = p.horizon > 0 ? p.horizon : 100.0;
    if (ref_choice.empty()) ref_choice = "analytic";
    if (ref_choice == "analytic") {
      rc.reference.mode = metrics::RateReference::Mode::analytic;
      rc.reference.analytic_sampler =
          analytic_quantile_reference(p.stream.ar1, p.q_level, gamma, p.beta);
    }
  } else if (p.objective == "var-cvar") {
    const double gamma = p.gamma > 0 ? p.gamma : 1e-8;
    if (p.stream.is_ar1)
      throw std::invalid_argument("rate: the var-cvar objective expects a scalar law");
    auto v = std::make_unique<objectives::VarCvarOracle>(
        objectives::VarCvarObjective{p.q_level, gamma});
    v->set_density_sup(dist::density_sup(p.stream.dist));
    factory = dist::make_stream_factory(p.stream);
    v->set_e_k_rho(dist::estimate_e_k_rho(factory, p.seed, 100000));
    oracle = std::move(v);
    rc.base.theta0 = p.theta0.value_or(ParameterPoint{0.0});
    rc.coordinate = p.coordinate >= 0 ? p.coordinate : 0;
    rc.horizon = p.horizon > 0 ? p.horizon : 100.0;
    if (ref_choice.empty()) ref_choice = "analytic";
    if (ref_choice == "analytic") {
      rc.reference.mode = metrics::RateReference::Mode::analytic;
      rc.reference.analytic_sampler =
          analytic_var_cvar_reference(p.stream.dist, p.q_level, gamma, p.beta);
    }
  } else if (p.objective == "portfolio") {
    if (p.assets.size() != 2)
      throw std::invalid_argument("rate: the portfolio objective expects two assets");
    const double gamma = p.gamma > 0 ? p.gamma : 1e-8;
    auto orc = std::make_unique<objectives::PortfolioOracle>(
        objectives::PortfolioObjective{p.q_level, gamma, 2});
    factory = dist::make_portfolio_stream_factory(p.assets);
    orc->set_e_k_rho(dist::estimate_e_k_rho(factory, p.seed, 100000));
    oracle = std::move(orc);
    rc.coordinate = p.coordinate >= 0 ? p.coordinate : 1;  // first logit
    rc.horizon = p.horizon > 0 ? p.horizon : 60.0;
    if (p.theta0) {
      rc.base.theta0 = *p.theta0;
    } else {
      // warm start at the grid-search optimum so every run shares one transient
      const auto ref = oracle::grid_search_cvar(p.assets[0], p.assets[1], p.q_level, 100,
                                                1000000, rng::splitmix64(p.seed ^ 0x61DD),
                                                p.threads);
      const double w1 = std::clamp(ref.w_star, 0.01, 0.99);
      rc.base.theta0 = ParameterPoint{ref.var_star, std::log(w1), std::log(1.0 - w1)};
    }
    if (ref_choice.empty()) ref_choice = "sgld:2e-06";
    if (ref_choice == "analytic")
      throw std::invalid_argument("rate: no analytic reference for the portfolio objective");
  } else {
    throw std::invalid_argument("rate: unknown objective '" + p.objective + "'");
  }

  if (ref_choice.rfind("sgld:", 0) == 0) {
    rc.reference.mode = metrics::RateReference::Mode::sgld_fine;
    rc.reference.lambda_ref = std::stod(ref_choice.substr(5));
    if (!(rc.reference.lambda_ref > 0))
      throw std::invalid_argument("rate: reference lambda must be positive");
  } else if (ref_choice != "analytic") {
    throw std::invalid_argument("rate: reference must be 'analytic' or 'sgld:<lambda>'");
  }

  rep.result = metrics::rate_experiment(rc, *oracle, factory);
  rep.horizon = rc.horizon;
  rep.reference_desc = ref_choice;

  std::ostringstream lams;
  for (std::size_t i = 0; i < p.lambdas.size(); ++i) lams << (i ? " " : "") << num(p.lambdas[i]);
  std::ostringstream dists;
  if (p.objective == "portfolio") {
    for (std::size_t a = 0; a < p.assets.size(); ++a)
      dists << (a ? " " : "") << p.assets[a].to_string();
  } else {
    dists << p.stream.to_string();
  }
  rep.config_file = kv_lines({{"objective", p.objective},
                              {"dist", dists.str()},
                              {"qbar", num(p.q_level)},
                              {"lambda", lams.str()},
                              {"beta", num(p.beta)},
                              {"chains", std::to_string(p.chains)},
                              {"t-horizon", num(rc.horizon)},
                              {"reference", ref_choice},
                              {"seed", std::to_string(p.seed)}});
  return rep;
}

std::string RateReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "sgld.rate_report.v1";
  j["slope"] = result.fit.slope;
  j["intercept"] = result.fit.intercept;
  j["horizon"] = horizon;
  j["reference"] = reference_desc;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& pt : result.points) {
    pts.push_back({{"lambda", pt.lambda},
                   {"w1_distance", pt.w_distance},
                   {"n_chains", pt.n_chains},
                   {"seed", pt.seed}});
  }
  j["points"] = pts;
  j["config"] = config_file;
  return j.dump(2);
}

}  // namespace sgld::exp
