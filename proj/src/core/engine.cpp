#include "sgld/core/engine.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "sgld/core/bounds.hpp"
#include "sgld/dist/distribution.hpp"
#include "sgld/kernels/batch.hpp"
#include "sgld/kernels/step_math.hpp"
#include "sgld/kernels/vmath.hpp"
#include "sgld/objectives/objectives.hpp"
#include "parallel.hpp"

namespace sgld {

void DataStream::fill_strided(int count, double* out, std::size_t stride) {
  const int d = dim();
  std::vector<double> sample(static_cast<std::size_t>(d));
  for (int i = 0; i < count; ++i) {
    next(sample);
    for (int a = 0; a < d; ++a)
      out[(static_cast<std::size_t>(i) * d + static_cast<std::size_t>(a)) * stride] = sample[static_cast<std::size_t>(a)];
  }
}

ParameterPoint sgld_step(const ParameterPoint& theta, double lambda, double beta,
                         const ParameterPoint& grad, const ParameterPoint& noise) {
  if (theta.dim() != grad.dim() || theta.dim() != noise.dim())
    throw std::invalid_argument("sgld_step: dimension mismatch");
  if (!(lambda > 0) || !std::isfinite(lambda) || !(beta > 0) || !std::isfinite(beta))
    throw std::invalid_argument("sgld_step: lambda and beta must be positive finite");
  if (!theta.all_finite() || !grad.all_finite() || !noise.all_finite())
    throw std::invalid_argument("sgld_step: non-finite input");
  const double ns = step_math::noise_scale(lambda, beta);
  ParameterPoint out;
  out.coords.resize(theta.coords.size());
  for (int c = 0; c < theta.dim(); ++c)
    out[c] = step_math::sgld_update(theta[c], lambda, ns, grad[c], noise[c]);
  return out;
}

namespace {

void warn_if_large_step(const SgldConfig& config, const GradientOracle& oracle) {
  static std::atomic<bool> warned{false};
  if (warned.load(std::memory_order_relaxed)) return;
  try {
    const AssumptionConstants c = oracle.constants();
    const LambdaMaxPair bound = lambda_max_nonconvex(c);
    if (config.lambda > bound.refined) {
      if (!warned.exchange(true)) {
        std::fprintf(stderr,
                     "[sgld] note: lambda=%g exceeds the refined step ceiling %g for oracle "
                     "'%s' (run proceeds)\n",
                     config.lambda, bound.refined, std::string(oracle.name()).c_str());
      }
    }
  } catch (const std::exception&) {
    // constants unavailable; nothing to report
  }
}

}  // namespace

ChainTrace run_chain(const SgldConfig& config, const GradientOracle& oracle,
                     DataStream& stream, std::int64_t stride, std::uint64_t chain_index) {
  config.validate();
  const int d = oracle.dim();
  if (config.theta0.dim() != d)
    throw std::invalid_argument("run_chain: theta0 dimension does not match the oracle");
  if (stream.dim() != oracle.data_dim())
    throw std::invalid_argument("run_chain: stream dimension does not match the oracle");
  if (stride < 0) throw std::invalid_argument("run_chain: stride must be nonnegative");
  warn_if_large_step(config, oracle);

  const double ns = step_math::noise_scale(config.lambda, config.beta);
  const rng::PhiloxKey noise_key =
      rng::derive_key(config.seed, chain_index, rng::Substream::noise);

  ChainTrace trace;
  trace.config = config;
  trace.stride = stride;
  if (stride > 0) {
    trace.iterates.reserve(
        static_cast<std::size_t>((config.iterations - config.burn_in) / stride) + 1);
  }

  std::vector<double> theta = config.theta0.coords;
  std::vector<double> x(static_cast<std::size_t>(stream.dim()));
  std::vector<double> g(static_cast<std::size_t>(d));

  for (std::int64_t i = 0; i < config.iterations; ++i) {
    stream.next(x);
    oracle.grad(theta, x, g);
    for (int c = 0; c < d; ++c) {
      if (!std::isfinite(g[static_cast<std::size_t>(c)]))
        throw ChainDivergedError(chain_index, i);
      theta[static_cast<std::size_t>(c)] = step_math::sgld_update(
          theta[static_cast<std::size_t>(c)], config.lambda, ns, g[static_cast<std::size_t>(c)],
          vmath::normal_at(noise_key, static_cast<std::uint64_t>(i) * d + static_cast<std::uint64_t>(c)));
      if (!std::isfinite(theta[static_cast<std::size_t>(c)]))
        throw ChainDivergedError(chain_index, i);
    }
    if (stride > 0 && i + 1 > config.burn_in &&
        (i + 1 - config.burn_in) % stride == 0) {
      trace.iterates.emplace_back(theta);
    }
  }
  trace.terminal = ParameterPoint(theta);
  if (stride > 0 &&
      (trace.iterates.empty() || trace.iterates.back().coords != theta)) {
    trace.iterates.emplace_back(theta);  // trace always ends at the terminal
  }
  return trace;
}

// ---- multi-chain batch runner ----------------------------------------------

namespace {

constexpr int kGroupLanes = 64;
constexpr int kFusedChunk = 65536;   // even
constexpr int kBufferedChunk = 4096; // even

enum class PlanKind {
  generic,
  quantile_ar1,
  varcvar_fused,
  varcvar_buffered,
  portfolio_fused,
  portfolio_buffered,
};

struct BatchPlan {
  PlanKind kind = PlanKind::generic;
  kernels::QuantileAr1Params quantile{};
  kernels::VarCvarParams varcvar{};
  kernels::PortfolioParams portfolio{};
  std::vector<double> mu, sigma;  // storage behind portfolio pointers
};

BatchPlan make_plan(const SgldConfig& config, const GradientOracle& oracle,
                    DataStream& probe, bool force_generic) {
  BatchPlan plan;
  if (force_generic) return plan;
  const double ns = step_math::noise_scale(config.lambda, config.beta);

  if (const auto* q = dynamic_cast<const objectives::QuantileOracle*>(&oracle)) {
    if (const auto* ar1 = dynamic_cast<const dist::Ar1DataStream*>(&probe)) {
      plan.kind = PlanKind::quantile_ar1;
      plan.quantile = {config.lambda, ns, q->objective().q, 2.0 * q->objective().gamma,
                       ar1->alpha()};
    }
    return plan;
  }
  if (const auto* v = dynamic_cast<const objectives::VarCvarOracle*>(&oracle)) {
    plan.varcvar = {config.lambda, ns, 1.0 / (1.0 - v->objective().q_bar),
                    2.0 * v->objective().gamma, 0.0, 1.0};
    if (const auto* nrm = dynamic_cast<const dist::NormalDataStream*>(&probe)) {
      plan.kind = PlanKind::varcvar_fused;
      plan.varcvar.mu = nrm->mu();
      plan.varcvar.sigma = nrm->sigma();
    } else {
      plan.kind = PlanKind::varcvar_buffered;
    }
    return plan;
  }
  if (const auto* p = dynamic_cast<const objectives::PortfolioOracle*>(&oracle)) {
    const int n = p->objective().n_assets;
    if (n > kernels::kMaxPortfolioAssets) return plan;
    plan.portfolio = {config.lambda, ns, 1.0 / (1.0 - p->objective().q_bar),
                      2.0 * p->objective().gamma, n, nullptr, nullptr};
    if (const auto* pn = dynamic_cast<const dist::PortfolioNormalStream*>(&probe)) {
      plan.kind = PlanKind::portfolio_fused;
      plan.mu = pn->mu();
      plan.sigma = pn->sigma();
    } else {
      plan.kind = PlanKind::portfolio_buffered;
    }
    return plan;
  }
  return plan;
}

struct GroupResult {
  bool diverged = false;
  int lane = 0;
};

// Advance one group of chains to the terminal. State arrays are per group.
GroupResult run_group(const SgldConfig& config, const BatchPlan& plan_in,
                      const StreamFactory& factory, int group_base, int lanes,
                      double* terminals, int d) {
  const kernels::KernelTable& kt = kernels::active_table();
  BatchPlan plan = plan_in;
  const int data_dim = plan.kind == PlanKind::portfolio_fused ||
                               plan.kind == PlanKind::portfolio_buffered
                           ? plan.portfolio.n_assets
                           : 1;
  plan.portfolio.mu = plan.mu.data();
  plan.portfolio.sigma = plan.sigma.data();

  std::vector<std::unique_ptr<DataStream>> streams;
  streams.reserve(static_cast<std::size_t>(lanes));
  std::vector<rng::PhiloxKey> data_keys(static_cast<std::size_t>(lanes));
  std::vector<rng::PhiloxKey> noise_keys(static_cast<std::size_t>(lanes));
  std::vector<double> theta(static_cast<std::size_t>(lanes), config.theta0[0]);
  std::vector<double> x_state(static_cast<std::size_t>(lanes), 0.0);
  std::vector<double> w;  // portfolio logits [asset][lane]

  const bool is_portfolio = d > 1;
  if (is_portfolio) {
    w.resize(static_cast<std::size_t>(data_dim) * lanes);
    for (int a = 0; a < data_dim; ++a)
      for (int l = 0; l < lanes; ++l)
        w[static_cast<std::size_t>(a) * lanes + l] = config.theta0[1 + a];
  }

  const bool buffered = plan.kind == PlanKind::varcvar_buffered ||
                        plan.kind == PlanKind::portfolio_buffered;
  for (int l = 0; l < lanes; ++l) {
    const std::uint64_t chain = static_cast<std::uint64_t>(group_base + l);
    noise_keys[static_cast<std::size_t>(l)] = rng::derive_key(config.seed, chain, rng::Substream::noise);
    auto stream = factory(config.seed, chain);
    if (const auto* ar1 = dynamic_cast<const dist::Ar1DataStream*>(stream.get())) {
      data_keys[static_cast<std::size_t>(l)] = ar1->data_key();
      x_state[static_cast<std::size_t>(l)] = ar1->state();
    } else if (const auto* nrm = dynamic_cast<const dist::NormalDataStream*>(stream.get())) {
      data_keys[static_cast<std::size_t>(l)] = nrm->data_key();
    } else if (const auto* pn = dynamic_cast<const dist::PortfolioNormalStream*>(stream.get())) {
      data_keys[static_cast<std::size_t>(l)] = pn->data_key();
    }
    if (buffered) streams.push_back(std::move(stream));
  }

  std::vector<double> xbuf;
  const int chunk_max = buffered ? kBufferedChunk : kFusedChunk;
  if (buffered)
    xbuf.resize(static_cast<std::size_t>(chunk_max) * data_dim * lanes);

  auto all_finite = [&](const std::vector<double>& v) {
    for (double val : v)
      if (!std::isfinite(val)) return false;
    return true;
  };
  auto find_bad_lane = [&]() {
    for (int l = 0; l < lanes; ++l) {
      if (!std::isfinite(theta[static_cast<std::size_t>(l)])) return l;
      for (int a = 0; a < (is_portfolio ? data_dim : 0); ++a)
        if (!std::isfinite(w[static_cast<std::size_t>(a) * lanes + l])) return l;
    }
    return 0;
  };

  std::int64_t done = 0;
  while (done < config.iterations) {
    const int todo = static_cast<int>(std::min<std::int64_t>(chunk_max, config.iterations - done));
    const auto step0 = static_cast<std::uint64_t>(done);
    if (buffered) {
      for (int l = 0; l < lanes; ++l)
        streams[static_cast<std::size_t>(l)]->fill_strided(todo, xbuf.data() + l,
                                                           static_cast<std::size_t>(lanes));
    }
    switch (plan.kind) {
      case PlanKind::quantile_ar1:
        kt.quantile_ar1_run(plan.quantile, data_keys.data(), noise_keys.data(), lanes,
                            step0, todo, theta.data(), x_state.data());
        break;
      case PlanKind::varcvar_fused:
        kt.varcvar_run(plan.varcvar, data_keys.data(), noise_keys.data(), lanes, step0,
                       todo, theta.data(), nullptr);
        break;
      case PlanKind::varcvar_buffered:
        kt.varcvar_run(plan.varcvar, data_keys.data(), noise_keys.data(), lanes, step0,
                       todo, theta.data(), xbuf.data());
        break;
      case PlanKind::portfolio_fused:
        kt.portfolio_run(plan.portfolio, data_keys.data(), noise_keys.data(), lanes,
                         step0, todo, theta.data(), w.data(), nullptr);
        break;
      case PlanKind::portfolio_buffered:
        kt.portfolio_run(plan.portfolio, data_keys.data(), noise_keys.data(), lanes,
                         step0, todo, theta.data(), w.data(), xbuf.data());
        break;
      case PlanKind::generic:
        break;
    }
    done += todo;
    if (!all_finite(theta) || (is_portfolio && !all_finite(w)))
      return {true, find_bad_lane()};
  }

  for (int l = 0; l < lanes; ++l) {
    terminals[static_cast<std::size_t>(l) * d] = theta[static_cast<std::size_t>(l)];
    for (int a = 0; a < (is_portfolio ? data_dim : 0); ++a)
      terminals[static_cast<std::size_t>(l) * d + 1 + a] = w[static_cast<std::size_t>(a) * lanes + l];
  }
  return {};
}

}  // namespace

SampleSet sample_pi_beta(const SgldConfig& config, const GradientOracle& oracle,
                         const StreamFactory& streams, int chains, const RunOptions& opts) {
  config.validate();
  if (chains < 1) throw std::invalid_argument("sample_pi_beta: chains must be >= 1");
  const int d = oracle.dim();
  if (config.theta0.dim() != d)
    throw std::invalid_argument("sample_pi_beta: theta0 dimension does not match the oracle");

  SampleSet out;
  out.dim = d;
  out.data.resize(static_cast<std::size_t>(chains) * d);

  const auto probe = streams(config.seed, 0);
  if (probe->dim() != oracle.data_dim())
    throw std::invalid_argument("sample_pi_beta: stream dimension does not match the oracle");
  const BatchPlan plan = make_plan(config, oracle, *probe, opts.force_generic);

  if (plan.kind == PlanKind::generic) {
    detail::parallel_for(chains, opts.threads, [&](int i) {
      auto stream = streams(config.seed, static_cast<std::uint64_t>(i));
      const ChainTrace trace =
          run_chain(config, oracle, *stream, 0, static_cast<std::uint64_t>(i));
      for (int c = 0; c < d; ++c) out.data[static_cast<std::size_t>(i) * d + c] = trace.terminal[c];
    });
    return out;
  }

  const int groups = (chains + kGroupLanes - 1) / kGroupLanes;
  detail::parallel_for(groups, opts.threads, [&](int gi) {
    const int base = gi * kGroupLanes;
    const int lanes = std::min(kGroupLanes, chains - base);
    const GroupResult r = run_group(config, plan, streams, base, lanes,
                                    out.data.data() + static_cast<std::size_t>(base) * d, d);
    if (r.diverged) {
      // localize the exact iteration with a generic replay of that chain
      const std::uint64_t chain = static_cast<std::uint64_t>(base + r.lane);
      auto stream = streams(config.seed, chain);
      run_chain(config, oracle, *stream, 0, chain);
      throw ChainDivergedError(chain, config.iterations);
    }
  });
  return out;
}

}  // namespace sgld
