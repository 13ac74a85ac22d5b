#pragma once

// Batch kernels: the data-parallel inner loops, implemented once as scalar
// reference code and once per SIMD instruction set. A kernel advances many
// independent chains (state in structure-of-arrays layout) or reduces large
// sample arrays. Variants are selected at runtime; all variants are
// equivalence-tested against the scalar reference.

#include <cstddef>
#include <cstdint>

#include "sgld/kernels/rng.hpp"

namespace sgld::kernels {

inline constexpr int kMaxPortfolioAssets = 16;

// ---- chain-step parameter blocks -----------------------------------------

struct QuantileAr1Params {
  double lambda = 0;
  double noise_scale = 0;  // sqrt(2*lambda/beta)
  double q = 0;
  double two_gamma = 0;
  double alpha = 0;  // AR(1) coefficient of the data stream
};

struct VarCvarParams {
  double lambda = 0;
  double noise_scale = 0;
  double inv_one_minus_qbar = 0;
  double two_gamma = 0;
  // data stream when fused (iid normal); ignored when x comes from a buffer
  double mu = 0;
  double sigma = 1;
};

struct PortfolioParams {
  double lambda = 0;
  double noise_scale = 0;
  double inv_one_minus_qbar = 0;
  double two_gamma = 0;
  int n_assets = 2;
  // per-asset affine transform of standard normals when fused
  const double* mu = nullptr;     // [n_assets]
  const double* sigma = nullptr;  // [n_assets]
};

// ---- kernel table ----------------------------------------------------------

// Lane l of every array is chain l. Noise draw indices: step i consumes
// standard-normal index i*d + c (component c) of the lane's noise substream;
// fused data streams consume index i*m + c of the data substream.
struct KernelTable {
  const char* name;

  // out[i*lanes + l] = normal draw #(first + i) of keys[l]
  void (*normal_block)(const rng::PhiloxKey* keys, int lanes, std::uint64_t first,
                       int count, double* out);

  // theta/x_state: [lanes]; advances nsteps starting at absolute step index step0
  void (*quantile_ar1_run)(const QuantileAr1Params& p, const rng::PhiloxKey* data_keys,
                           const rng::PhiloxKey* noise_keys, int lanes,
                           std::uint64_t step0, int nsteps, double* theta,
                           double* x_state);

  // xbuf: nullptr for the fused normal data path, else [nsteps][lanes]
  void (*varcvar_run)(const VarCvarParams& p, const rng::PhiloxKey* data_keys,
                      const rng::PhiloxKey* noise_keys, int lanes, std::uint64_t step0,
                      int nsteps, double* theta, const double* xbuf);

  // state: theta [lanes], then w as [n_assets][lanes];
  // xbuf: nullptr for fused normal assets, else [nsteps][n_assets][lanes]
  void (*portfolio_run)(const PortfolioParams& p, const rng::PhiloxKey* data_keys,
                        const rng::PhiloxKey* noise_keys, int lanes, std::uint64_t step0,
                        int nsteps, double* theta, double* w, const double* xbuf);

  // ---- reductions (fixed, deterministic accumulation order per variant) ----
  double (*sum)(const double* x, std::size_t n);
  // sum over max(x[i] - threshold, 0)
  double (*shortfall_sum)(const double* x, std::size_t n, double threshold);
  // sum over |a[i]-b[i]|^p, p in {1,2}
  double (*abs_diff_pow_sum)(const double* a, const double* b, std::size_t n, int p);
  // out[i] = base[i] + g*delta[i]
  void (*axpy_mix)(const double* delta, const double* base, double g, double* out,
                   std::size_t n);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when unsupported at build or run time

// Runtime selection: best supported variant, overridable with
// SGLD_KERNELS=scalar|avx2.
const KernelTable& active_table();

}  // namespace sgld::kernels
