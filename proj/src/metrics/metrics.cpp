#include "sgld/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sgld/kernels/batch.hpp"
#include "sgld/kernels/rng.hpp"

namespace sgld::metrics {

double wasserstein_p_1d(std::span<const double> a, std::span<const double> b, int p) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein_p_1d: empty sample set");
  if (a.size() != b.size())
    throw std::invalid_argument("wasserstein_p_1d: sample sets must have equal size");
  if (p != 1 && p != 2) throw std::invalid_argument("wasserstein_p_1d: p must be 1 or 2");

  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double total =
      kernels::active_table().abs_diff_pow_sum(sa.data(), sb.data(), sa.size(), p);
  const double mean = total / static_cast<double>(sa.size());
  return p == 1 ? mean : std::sqrt(mean);
}

SlopeFit fit_loglog_slope(std::span<const RatePoint> points) {
  if (points.size() < 2) throw std::invalid_argument("fit_loglog_slope: need at least 2 points");
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& pt : points) {
    if (!(pt.lambda > 0)) throw std::invalid_argument("fit_loglog_slope: lambda must be positive");
    if (!(pt.w_distance > 0))
      throw std::invalid_argument("fit_loglog_slope: non-positive distance (degenerate data)");
    xs.push_back(std::log(pt.lambda));
    ys.push_back(std::log(pt.w_distance));
  }
  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit_loglog_slope: lambdas must be distinct");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

std::string RateExperimentResult::points_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "schema,sgld.rate_points.v1\n";
  os << "lambda,w1_distance,n_chains,seed,log_lambda,log_w1\n";
  for (const auto& pt : points) {
    os << pt.lambda << "," << pt.w_distance << "," << pt.n_chains << "," << pt.seed << ","
       << std::log(pt.lambda) << "," << std::log(pt.w_distance) << "\n";
  }
  return os.str();
}

std::string RateExperimentResult::summary_json() const {
  nlohmann::json j;
  j["schema"] = "sgld.rate_summary.v1";
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["n_points"] = points.size();
  return j.dump(2);
}

RateExperimentResult rate_experiment(const RateExperimentConfig& cfg,
                                     const GradientOracle& oracle,
                                     const StreamFactory& streams) {
  if (cfg.lambdas.size() < 2)
    throw std::invalid_argument("rate_experiment: need at least 2 lambdas");
  if (cfg.n_chains < 2) throw std::invalid_argument("rate_experiment: need at least 2 chains");
  if (!(cfg.horizon > 0)) throw std::invalid_argument("rate_experiment: horizon must be positive");
  if (cfg.coordinate < 0 || cfg.coordinate >= oracle.dim())
    throw std::invalid_argument("rate_experiment: coordinate out of range");

  // reference sample set
  std::vector<double> ref;
  const std::uint64_t ref_seed = rng::splitmix64(cfg.seed ^ 0x5EFEFEEFull);
  if (cfg.reference.mode == RateReference::Mode::analytic) {
    if (!cfg.reference.analytic_sampler)
      throw std::invalid_argument("rate_experiment: analytic reference without sampler");
    ref = cfg.reference.analytic_sampler(cfg.n_chains, ref_seed);
    if (static_cast<int>(ref.size()) != cfg.n_chains)
      throw std::invalid_argument("rate_experiment: analytic sampler returned wrong count");
  } else {
    SgldConfig rc = cfg.base;
    rc.lambda = cfg.reference.lambda_ref;
    rc.iterations = std::max<std::int64_t>(1, std::llround(cfg.horizon / rc.lambda));
    rc.burn_in = 0;
    rc.seed = ref_seed;
    const SampleSet s = sample_pi_beta(rc, oracle, streams, cfg.n_chains, {cfg.threads, false});
    ref = s.coordinate(cfg.coordinate);
  }

  RateExperimentResult out;
  out.points.reserve(cfg.lambdas.size());
  for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
    const double lam = cfg.lambdas[i];
    if (!(lam > 0)) throw std::invalid_argument("rate_experiment: lambda must be positive");
    SgldConfig rc = cfg.base;
    rc.lambda = lam;
    rc.iterations = std::max<std::int64_t>(1, std::llround(cfg.horizon / lam));
    rc.burn_in = 0;
    rc.seed = rng::splitmix64(cfg.seed ^ (0x4A7Eull + i));
    const SampleSet s = sample_pi_beta(rc, oracle, streams, cfg.n_chains, {cfg.threads, false});
    const std::vector<double> coord = s.coordinate(cfg.coordinate);
    RatePoint pt;
    pt.lambda = lam;
    pt.w_distance = wasserstein_p_1d(coord, ref, 1);
    pt.n_chains = cfg.n_chains;
    pt.seed = rc.seed;
    out.points.push_back(pt);
  }
  out.fit = fit_loglog_slope(out.points);
  return out;
}

}  // namespace sgld::metrics
