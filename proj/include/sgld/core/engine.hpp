#pragma once

// SGLD iteration engine: single steps, full chain runs and multi-chain
// terminal sampling. Chains are embarrassingly parallel; given (seed, chain
// index) every draw is a pure function, so results are bit-identical whether
// chains run sequentially, on threads, or through the SIMD batch kernels.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>

#include "sgld/core/types.hpp"

namespace sgld {

// Per-chain source of data samples.
class DataStream {
 public:
  virtual ~DataStream() = default;
  virtual int dim() const = 0;
  virtual void next(std::span<double> out) = 0;

  // Bulk fill for batch runners: sample i, component a lands at
  // out[(i*dim + a) * stride]. Default falls back to next().
  virtual void fill_strided(int count, double* out, std::size_t stride);
};

// Stochastic gradient H(theta, x).
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;
  virtual int dim() const = 0;       // parameter dimension
  virtual int data_dim() const = 0;  // data sample dimension
  virtual void grad(std::span<const double> theta, std::span<const double> x,
                    std::span<double> out) const = 0;
  virtual std::string_view name() const = 0;
  virtual AssumptionConstants constants() const = 0;
};

using StreamFactory =
    std::function<std::unique_ptr<DataStream>(std::uint64_t seed, std::uint64_t chain_index)>;

struct RunOptions {
  int threads = 0;             // 0: hardware concurrency
  bool force_generic = false;  // bypass batch kernels (reference path)
};

// One SGLD update, exactly theta - lambda*grad + sqrt(2 lambda/beta)*noise.
ParameterPoint sgld_step(const ParameterPoint& theta, double lambda, double beta,
                         const ParameterPoint& grad, const ParameterPoint& noise);

// Full single-chain run. Records every stride-th post-burn-in iterate
// (stride 0: terminal only). Deterministic given (config.seed, chain_index).
ChainTrace run_chain(const SgldConfig& config, const GradientOracle& oracle,
                     DataStream& stream, std::int64_t stride = 0,
                     std::uint64_t chain_index = 0);

// Terminal points of `chains` independent chains. Per-chain substreams derive
// from (config.seed, chain index); execution order does not affect output.
SampleSet sample_pi_beta(const SgldConfig& config, const GradientOracle& oracle,
                         const StreamFactory& streams, int chains,
                         const RunOptions& opts = {});

}  // namespace sgld
