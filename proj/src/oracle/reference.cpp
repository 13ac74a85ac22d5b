#include "sgld/oracle/reference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sgld/kernels/batch.hpp"
#include "../core/parallel.hpp"

namespace sgld::oracle {

double empirical_quantile(std::span<const double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("empirical_quantile: empty sample set");
  if (!(q > 0) || !(q < 1)) throw std::invalid_argument("empirical_quantile: q in (0,1)");
  const auto n = static_cast<std::int64_t>(samples.size());
  std::int64_t k = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(n)));
  if (k < 1) k = 1;
  if (k > n) k = n;
  std::vector<double> work(samples.begin(), samples.end());
  std::nth_element(work.begin(), work.begin() + (k - 1), work.end());
  return work[static_cast<std::size_t>(k - 1)];
}

double empirical_cvar(std::span<const double> samples, double q_bar) {
  const double qhat = empirical_quantile(samples, q_bar);
  const double shortfall =
      kernels::active_table().shortfall_sum(samples.data(), samples.size(), qhat);
  return qhat + shortfall / (static_cast<double>(samples.size()) * (1.0 - q_bar));
}

std::string GridSearchResult::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "schema,sgld.grid_curve.v1\n";
  os << "weight,cvar\n";
  for (const auto& [w, c] : curve) os << w << "," << c << "\n";
  return os.str();
}

std::string GridSearchResult::summary_json() const {
  nlohmann::json j;
  j["schema"] = "sgld.grid_summary.v1";
  j["w_star"] = w_star;
  j["var_star"] = var_star;
  j["cvar_star"] = cvar_star;
  j["seed"] = seed;
  j["mc_samples"] = mc_samples;
  j["grid"] = curve.size();
  return j.dump(2);
}

GridSearchResult grid_search_cvar(const dist::DistributionSpec& spec1,
                                  const dist::DistributionSpec& spec2, double q_bar,
                                  int grid, std::int64_t mc_samples, std::uint64_t seed,
                                  int threads) {
  if (grid < 2) throw std::invalid_argument("grid_search_cvar: grid must be >= 2");
  if (mc_samples < 10000) throw std::invalid_argument("grid_search_cvar: mc_samples must be >= 1e4");
  if (!(q_bar > 0) || !(q_bar < 1)) throw std::invalid_argument("grid_search_cvar: q_bar in (0,1)");

  constexpr std::uint64_t kGridChain = 0x9A1Du;
  const auto n = static_cast<std::size_t>(mc_samples);
  std::vector<double> x2(n), diff(n);
  {
    auto s1 = dist::make_stream(spec1, seed, kGridChain, 1);
    auto s2 = dist::make_stream(spec2, seed, kGridChain, 2);
    std::vector<double> x1(n);
    s1->fill_strided(static_cast<int>(n), x1.data(), 1);
    s2->fill_strided(static_cast<int>(n), x2.data(), 1);
    for (std::size_t i = 0; i < n; ++i) diff[i] = x1[i] - x2[i];
  }

  GridSearchResult out;
  out.seed = seed;
  out.mc_samples = mc_samples;
  out.curve.resize(static_cast<std::size_t>(grid));

  const auto& kt = kernels::active_table();
  detail::parallel_for(grid, threads, [&](int k) {
    const double g = static_cast<double>(k) / static_cast<double>(grid - 1);
    std::vector<double> port(n);
    kt.axpy_mix(diff.data(), x2.data(), g, port.data(), n);
    out.curve[static_cast<std::size_t>(k)] = {g, empirical_cvar(port, q_bar)};
  });

  std::size_t best = 0;
  for (std::size_t k = 1; k < out.curve.size(); ++k)
    if (out.curve[k].second < out.curve[best].second) best = k;
  out.w_star = out.curve[best].first;
  out.cvar_star = out.curve[best].second;

  std::vector<double> port(n);
  kt.axpy_mix(diff.data(), x2.data(), out.w_star, port.data(), n);
  out.var_star = empirical_quantile(port, q_bar);
  return out;
}

ClcEstimate validate_clc(const GradientOracle& oracle, const StreamFactory& streams,
                         std::span<const std::pair<ParameterPoint, ParameterPoint>> pairs,
                         std::int64_t draws, std::uint64_t seed) {
  if (pairs.empty()) throw std::invalid_argument("validate_clc: no parameter pairs");
  if (draws < 10000) throw std::invalid_argument("validate_clc: draws must be >= 1e4");
  const int d = oracle.dim();
  for (const auto& [a, b] : pairs) {
    if (a.dim() != d || b.dim() != d) throw std::invalid_argument("validate_clc: dimension mismatch");
    if (a.coords == b.coords) throw std::invalid_argument("validate_clc: pair with zero separation");
  }

  constexpr std::uint64_t kClcChain = 0xC1Cu;
  auto stream = streams(seed, kClcChain);
  std::vector<double> x(static_cast<std::size_t>(stream->dim()));
  std::vector<double> ga(static_cast<std::size_t>(d)), gb(static_cast<std::size_t>(d));
  std::vector<double> acc(pairs.size(), 0.0);

  for (std::int64_t i = 0; i < draws; ++i) {
    stream->next(x);
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
      oracle.grad(pairs[pi].first.coords, x, ga);
      oracle.grad(pairs[pi].second.coords, x, gb);
      double norm2 = 0.0;
      for (int c = 0; c < d; ++c) {
        const double dg = ga[static_cast<std::size_t>(c)] - gb[static_cast<std::size_t>(c)];
        norm2 += dg * dg;
      }
      acc[pi] += std::sqrt(norm2);
    }
  }

  ClcEstimate est;
  est.per_pair.resize(pairs.size());
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    double sep2 = 0.0;
    for (int c = 0; c < d; ++c) {
      const double dd = pairs[pi].first[c] - pairs[pi].second[c];
      sep2 += dd * dd;
    }
    est.per_pair[pi] = acc[pi] / static_cast<double>(draws) / std::sqrt(sep2);
    est.max_ratio = std::max(est.max_ratio, est.per_pair[pi]);
  }
  return est;
}

}  // namespace sgld::oracle
