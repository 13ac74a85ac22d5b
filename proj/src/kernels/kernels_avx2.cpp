// AVX2 kernel variants: four chains per vector register. Every floating-point
// operation mirrors the scalar reference sequence one-for-one (mul/add/div/
// sqrt are correctly rounded, vfmadd mirrors std::fma, blends mirror value
// selections), so chain output is bit-identical to the scalar table. The
// equivalence suite asserts this.

#include "sgld/kernels/batch.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "sgld/kernels/scalar_core.hpp"
#include "sgld/kernels/step_math.hpp"
#include "sgld/kernels/vmath.hpp"

namespace sgld::kernels {
namespace {

namespace vm = sgld::vmath;

// ---- Philox4x32-10, four lanes --------------------------------------------

struct PhiloxLanes4 {
  __m128i k0, k1;  // per-lane key words
};

inline PhiloxLanes4 load_keys(const rng::PhiloxKey* keys) {
  const __m128i ka = _mm_loadu_si128(reinterpret_cast<const __m128i*>(keys));      // k0_0 k1_0 k0_1 k1_1
  const __m128i kb = _mm_loadu_si128(reinterpret_cast<const __m128i*>(keys + 2));  // k0_2 k1_2 k0_3 k1_3
  const __m128 kaf = _mm_castsi128_ps(ka);
  const __m128 kbf = _mm_castsi128_ps(kb);
  PhiloxLanes4 out;
  out.k0 = _mm_castps_si128(_mm_shuffle_ps(kaf, kbf, _MM_SHUFFLE(2, 0, 2, 0)));
  out.k1 = _mm_castps_si128(_mm_shuffle_ps(kaf, kbf, _MM_SHUFFLE(3, 1, 3, 1)));
  return out;
}

// hi/lo 32-bit halves of a[i]*m for four u32 lanes
inline void mulhilo4(__m128i a, __m128i m, __m128i& hi, __m128i& lo) {
  const __m128i p02 = _mm_mul_epu32(a, m);
  const __m128i p13 = _mm_mul_epu32(_mm_shuffle_epi32(a, _MM_SHUFFLE(3, 3, 1, 1)), m);
  const __m128i t0 = _mm_unpacklo_epi32(p02, p13);  // lo0 lo1 hi0 hi1
  const __m128i t1 = _mm_unpackhi_epi32(p02, p13);  // lo2 lo3 hi2 hi3
  lo = _mm_unpacklo_epi64(t0, t1);
  hi = _mm_unpackhi_epi64(t0, t1);
}

// One tick for 4 lanes: lane l uses counter ticks[l], key lanes l.
// Outputs two u64x4 vectors (words 1:0 and 3:2).
inline void philox4_tick(const PhiloxLanes4& keys, __m256i ticks, __m256i& a, __m256i& b) {
  // counter words: c0 = low 32 of tick, c1 = high 32, c2 = c3 = 0
  const __m256i lo_mask = _mm256_set1_epi64x(0xFFFFFFFFll);
  const __m256i t_lo = _mm256_and_si256(ticks, lo_mask);
  const __m256i t_hi = _mm256_srli_epi64(ticks, 32);
  // pack u64 lanes to u32 lanes: [l0 l1 l2 l3]
  const __m256i packed_lo = _mm256_permutevar8x32_epi32(t_lo, _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0));
  const __m256i packed_hi = _mm256_permutevar8x32_epi32(t_hi, _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0));
  __m128i c0 = _mm256_castsi256_si128(packed_lo);
  __m128i c1 = _mm256_castsi256_si128(packed_hi);
  __m128i c2 = _mm_setzero_si128();
  __m128i c3 = _mm_setzero_si128();
  __m128i k0 = keys.k0;
  __m128i k1 = keys.k1;
  const __m128i m0 = _mm_set1_epi32(static_cast<int>(rng::kPhiloxM0));
  const __m128i m1 = _mm_set1_epi32(static_cast<int>(rng::kPhiloxM1));
  const __m128i w0 = _mm_set1_epi32(static_cast<int>(rng::kPhiloxW0));
  const __m128i w1 = _mm_set1_epi32(static_cast<int>(rng::kPhiloxW1));
  for (int round = 0; round < 10; ++round) {
    __m128i hi0, lo0, hi1, lo1;
    mulhilo4(c0, m0, hi0, lo0);
    mulhilo4(c2, m1, hi1, lo1);
    c0 = _mm_xor_si128(_mm_xor_si128(hi1, c1), k0);
    c1 = lo1;
    c2 = _mm_xor_si128(_mm_xor_si128(hi0, c3), k1);
    c3 = lo0;
    k0 = _mm_add_epi32(k0, w0);
    k1 = _mm_add_epi32(k1, w1);
  }
  // u64 assembly: (c1:c0) per lane
  const __m128i ab_lo = _mm_unpacklo_epi32(c0, c1);  // c0_0 c1_0 c0_1 c1_1
  const __m128i ab_hi = _mm_unpackhi_epi32(c0, c1);  // c0_2 c1_2 c0_3 c1_3
  a = _mm256_set_m128i(ab_hi, ab_lo);
  const __m128i cd_lo = _mm_unpacklo_epi32(c2, c3);
  const __m128i cd_hi = _mm_unpackhi_epi32(c2, c3);
  b = _mm256_set_m128i(cd_hi, cd_lo);
}

// ---- double-precision helpers ----------------------------------------------

inline __m256d u64_to_unit4(__m256i r) {
  const __m256i shifted = _mm256_srli_epi64(r, 12);
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000ll);  // 2^52
  const __m256d m =
      _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(shifted, magic)),
                    _mm256_set1_pd(0x1p52));
  return _mm256_add_pd(_mm256_mul_pd(m, _mm256_set1_pd(0x1p-52)),
                       _mm256_set1_pd(0x1p-53));
}

// small signed int64 lanes -> double
inline __m256d i64_small_to_pd(__m256i v) {
  const __m256i magic = _mm256_set1_epi64x(0x4338000000000000ll);  // 1.5*2^52
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(v, magic)),
                       _mm256_set1_pd(0x1.8p52));
}

inline __m256d log_pos4(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  __m256i e = _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(1023));
  const __m256i mant = _mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
      _mm256_set1_epi64x(0x3FF0000000000000ll));
  __m256d m = _mm256_castsi256_pd(mant);
  const __m256d mask = _mm256_cmp_pd(m, _mm256_set1_pd(vm::kSqrt2), _CMP_GE_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(_mm256_set1_pd(0.5), m), mask);
  e = _mm256_sub_epi64(e, _mm256_castpd_si256(mask));  // mask lanes are -1

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d z = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d s = _mm256_mul_pd(z, z);
  __m256d p = _mm256_set1_pd(1.0 / 21.0);
  p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.0 / 19.0));
  p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.0 / 17.0));
  p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.0 / 15.0));
  p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.0 / 13.0));
  p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.0 / 11.0));
  p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.0 / 9.0));
  p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.0 / 7.0));
  p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.0 / 5.0));
  p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.0 / 3.0));
  const __m256d t = _mm256_mul_pd(_mm256_set1_pd(2.0), z);
  const __m256d log_m = _mm256_fmadd_pd(_mm256_mul_pd(t, s), p, t);
  const __m256d ed = i64_small_to_pd(e);
  return _mm256_fmadd_pd(ed, _mm256_set1_pd(vm::kLn2Hi),
                         _mm256_fmadd_pd(ed, _mm256_set1_pd(vm::kLn2Lo), log_m));
}

inline __m256d exp_real4(__m256d x) {
  x = _mm256_min_pd(x, _mm256_set1_pd(710.0));
  x = _mm256_max_pd(x, _mm256_set1_pd(-746.0));
  const __m256d kd = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(vm::kLog2E)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fmadd_pd(kd, _mm256_set1_pd(-vm::kLn2Hi), x);
  r = _mm256_fmadd_pd(kd, _mm256_set1_pd(-vm::kLn2Lo), r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  const __m128i k32 = _mm256_cvtpd_epi32(kd);
  const __m128i k1_32 = _mm_srai_epi32(k32, 1);
  const __m128i k2_32 = _mm_sub_epi32(k32, k1_32);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256d s1 = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(k1_32), bias), 52));
  const __m256d s2 = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(k2_32), bias), 52));
  return _mm256_mul_pd(_mm256_mul_pd(p, s1), s2);
}

inline void sincos_2pi4(__m256d u, __m256d& sin_out, __m256d& cos_out) {
  const __m256d a = _mm256_mul_pd(_mm256_set1_pd(4.0), u);
  const __m256d jd = _mm256_round_pd(a, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d d = _mm256_mul_pd(_mm256_sub_pd(a, jd), _mm256_set1_pd(0.25));
  const __m256d r = _mm256_fmadd_pd(d, _mm256_set1_pd(vm::kTwoPiHi),
                                    _mm256_mul_pd(d, _mm256_set1_pd(vm::kTwoPiLo)));
  const __m256d z = _mm256_mul_pd(r, r);

  __m256d ps = _mm256_set1_pd(vm::kS6);
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(vm::kS5));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(vm::kS4));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(vm::kS3));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(vm::kS2));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(vm::kS1));
  const __m256d sr = _mm256_fmadd_pd(_mm256_mul_pd(r, z), ps, r);

  __m256d pc = _mm256_set1_pd(vm::kC6);
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(vm::kC5));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(vm::kC4));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(vm::kC3));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(vm::kC2));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(vm::kC1));
  const __m256d cr = _mm256_fmadd_pd(
      _mm256_mul_pd(z, z), pc,
      _mm256_sub_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(_mm256_set1_pd(0.5), z)));

  const __m256i j = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(jd));
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256d swap_mask = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(j, one), one));
  const __m256d sign_s = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_and_si256(j, _mm256_set1_epi64x(2)), 62));
  const __m256d sign_c = _mm256_castsi256_pd(_mm256_slli_epi64(
      _mm256_and_si256(_mm256_add_epi64(j, one), _mm256_set1_epi64x(2)), 62));

  const __m256d s_abs = _mm256_blendv_pd(sr, cr, swap_mask);
  const __m256d c_abs = _mm256_blendv_pd(cr, sr, swap_mask);
  sin_out = _mm256_xor_pd(s_abs, sign_s);
  cos_out = _mm256_xor_pd(c_abs, sign_c);
}

inline void normal_pair4(__m256i ra, __m256i rb, __m256d& z0, __m256d& z1) {
  const __m256d u1 = u64_to_unit4(ra);
  const __m256d u2 = u64_to_unit4(rb);
  const __m256d radius =
      _mm256_sqrt_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), log_pos4(u1)));
  __m256d s, c;
  sincos_2pi4(u2, s, c);
  z0 = _mm256_mul_pd(radius, c);
  z1 = _mm256_mul_pd(radius, s);
}

inline void normal_pair_at(const PhiloxLanes4& keys, std::uint64_t tick, __m256d& z0,
                           __m256d& z1) {
  __m256i ra, rb;
  philox4_tick(keys, _mm256_set1_epi64x(static_cast<long long>(tick)), ra, rb);
  normal_pair4(ra, rb, z0, z1);
}

// ---- SGLD step helpers -----------------------------------------------------

inline __m256d sgld_update4(__m256d theta, __m256d neg_lambda, __m256d noise_scale,
                            __m256d grad, __m256d xi) {
  const __m256d drifted = _mm256_fmadd_pd(neg_lambda, grad, theta);
  return _mm256_fmadd_pd(noise_scale, xi, drifted);
}

// ---- chain kernels ---------------------------------------------------------

void normal_block_avx2(const rng::PhiloxKey* keys, int lanes, std::uint64_t first,
                       int count, double* out) {
  const int groups = lanes / 4;
  // vector path assumes pair alignment
  if ((first & 1) != 0) {
    scalar_table().normal_block(keys, lanes, first, count, out);
    return;
  }
  for (int g = 0; g < groups; ++g) {
    const PhiloxLanes4 lk = load_keys(keys + 4 * g);
    const std::uint64_t tick0 = first >> 1;
    double* base = out + 4 * g;
    int i = 0;
    for (; i + 1 < count; i += 2) {
      __m256d z0, z1;
      normal_pair_at(lk, tick0 + (static_cast<std::uint64_t>(i) >> 1), z0, z1);
      _mm256_storeu_pd(base + static_cast<std::size_t>(i) * lanes, z0);
      _mm256_storeu_pd(base + static_cast<std::size_t>(i + 1) * lanes, z1);
    }
    if (i < count) {
      __m256d z0, z1;
      normal_pair_at(lk, tick0 + (static_cast<std::uint64_t>(i) >> 1), z0, z1);
      _mm256_storeu_pd(base + static_cast<std::size_t>(i) * lanes, z0);
    }
  }
  for (int l = groups * 4; l < lanes; ++l) {
    vm::NormalCursor cur(keys[l], first);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i) * lanes + l] = cur.next();
  }
}

void quantile_ar1_run_avx2(const QuantileAr1Params& p, const rng::PhiloxKey* data_keys,
                           const rng::PhiloxKey* noise_keys, int lanes,
                           std::uint64_t step0, int nsteps, double* theta,
                           double* x_state) {
  const int groups = lanes / 4;
  const __m256d alpha = _mm256_set1_pd(p.alpha);
  const __m256d one_m_q = _mm256_set1_pd(1.0 - p.q);
  const __m256d neg_q = _mm256_set1_pd(-p.q);
  const __m256d two_gamma = _mm256_set1_pd(p.two_gamma);
  const __m256d neg_lambda = _mm256_set1_pd(-p.lambda);
  const __m256d ns = _mm256_set1_pd(p.noise_scale);

  for (int g = 0; g < groups; ++g) {
    const PhiloxLanes4 dk = load_keys(data_keys + 4 * g);
    const PhiloxLanes4 nk = load_keys(noise_keys + 4 * g);
    __m256d th = _mm256_loadu_pd(theta + 4 * g);
    __m256d x = _mm256_loadu_pd(x_state + 4 * g);

    auto do_step = [&](__m256d zd, __m256d zn) {
      x = _mm256_fmadd_pd(alpha, x, zd);
      const __m256d lt = _mm256_cmp_pd(x, th, _CMP_LT_OQ);
      const __m256d base = _mm256_blendv_pd(neg_q, one_m_q, lt);
      const __m256d grad = _mm256_fmadd_pd(two_gamma, th, base);
      th = sgld_update4(th, neg_lambda, ns, grad, zn);
    };

    std::uint64_t tick = step0 >> 1;  // step0 must be even
    int i = 0;
    for (; i + 1 < nsteps; i += 2, ++tick) {
      __m256d zd0, zd1, zn0, zn1;
      normal_pair_at(dk, tick, zd0, zd1);
      normal_pair_at(nk, tick, zn0, zn1);
      do_step(zd0, zn0);
      do_step(zd1, zn1);
    }
    if (i < nsteps) {
      __m256d zd0, zd1, zn0, zn1;
      normal_pair_at(dk, tick, zd0, zd1);
      normal_pair_at(nk, tick, zn0, zn1);
      do_step(zd0, zn0);
    }
    _mm256_storeu_pd(theta + 4 * g, th);
    _mm256_storeu_pd(x_state + 4 * g, x);
  }
  for (int l = groups * 4; l < lanes; ++l) {
    scalar_core::quantile_ar1_lane(p, data_keys[l], noise_keys[l], step0, nsteps,
                                   theta[l], x_state[l]);
  }
}

void varcvar_run_avx2(const VarCvarParams& p, const rng::PhiloxKey* data_keys,
                      const rng::PhiloxKey* noise_keys, int lanes, std::uint64_t step0,
                      int nsteps, double* theta, const double* xbuf) {
  const int groups = lanes / 4;
  const __m256d mu = _mm256_set1_pd(p.mu);
  const __m256d sigma = _mm256_set1_pd(p.sigma);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d tail_base = _mm256_set1_pd(1.0 - p.inv_one_minus_qbar);
  const __m256d two_gamma = _mm256_set1_pd(p.two_gamma);
  const __m256d neg_lambda = _mm256_set1_pd(-p.lambda);
  const __m256d ns = _mm256_set1_pd(p.noise_scale);

  for (int g = 0; g < groups; ++g) {
    const PhiloxLanes4 dk = load_keys(data_keys + 4 * g);
    const PhiloxLanes4 nk = load_keys(noise_keys + 4 * g);
    __m256d th = _mm256_loadu_pd(theta + 4 * g);

    auto do_step = [&](__m256d x, __m256d zn) {
      const __m256d ge = _mm256_cmp_pd(x, th, _CMP_GE_OQ);
      const __m256d base = _mm256_blendv_pd(one, tail_base, ge);
      const __m256d grad = _mm256_fmadd_pd(two_gamma, th, base);
      th = sgld_update4(th, neg_lambda, ns, grad, zn);
    };

    std::uint64_t tick = step0 >> 1;
    int i = 0;
    for (; i + 1 < nsteps; i += 2, ++tick) {
      __m256d zn0, zn1;
      normal_pair_at(nk, tick, zn0, zn1);
      __m256d x0, x1;
      if (xbuf) {
        x0 = _mm256_loadu_pd(xbuf + static_cast<std::size_t>(i) * lanes + 4 * g);
        x1 = _mm256_loadu_pd(xbuf + static_cast<std::size_t>(i + 1) * lanes + 4 * g);
      } else {
        __m256d zd0, zd1;
        normal_pair_at(dk, tick, zd0, zd1);
        x0 = _mm256_fmadd_pd(sigma, zd0, mu);
        x1 = _mm256_fmadd_pd(sigma, zd1, mu);
      }
      do_step(x0, zn0);
      do_step(x1, zn1);
    }
    if (i < nsteps) {
      __m256d zn0, zn1;
      normal_pair_at(nk, tick, zn0, zn1);
      __m256d x0;
      if (xbuf) {
        x0 = _mm256_loadu_pd(xbuf + static_cast<std::size_t>(i) * lanes + 4 * g);
      } else {
        __m256d zd0, zd1;
        normal_pair_at(dk, tick, zd0, zd1);
        x0 = _mm256_fmadd_pd(sigma, zd0, mu);
      }
      do_step(x0, zn0);
    }
    _mm256_storeu_pd(theta + 4 * g, th);
  }
  for (int l = groups * 4; l < lanes; ++l) {
    scalar_core::varcvar_lane(p, data_keys[l], noise_keys[l], lanes, step0, nsteps,
                              theta[l], xbuf, l);
  }
}

void portfolio_run_avx2(const PortfolioParams& p, const rng::PhiloxKey* data_keys,
                        const rng::PhiloxKey* noise_keys, int lanes, std::uint64_t step0,
                        int nsteps, double* theta, double* w, const double* xbuf) {
  const int n = p.n_assets;
  const int groups = lanes / 4;
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d tail_base = _mm256_set1_pd(1.0 - p.inv_one_minus_qbar);
  const __m256d invq = _mm256_set1_pd(p.inv_one_minus_qbar);
  const __m256d two_gamma = _mm256_set1_pd(p.two_gamma);
  const __m256d neg_lambda = _mm256_set1_pd(-p.lambda);
  const __m256d ns = _mm256_set1_pd(p.noise_scale);

  __m256d zd[2 * kMaxPortfolioAssets];       // data normals for a step pair
  __m256d zn[2 * (kMaxPortfolioAssets + 1)]; // noise normals for a step pair
  __m256d wl[kMaxPortfolioAssets];
  __m256d gw[kMaxPortfolioAssets];
  __m256d xv[kMaxPortfolioAssets];

  for (int g = 0; g < groups; ++g) {
    const PhiloxLanes4 dk = load_keys(data_keys + 4 * g);
    const PhiloxLanes4 nk = load_keys(noise_keys + 4 * g);
    __m256d th = _mm256_loadu_pd(theta + 4 * g);
    for (int a = 0; a < n; ++a)
      wl[a] = _mm256_loadu_pd(w + static_cast<std::size_t>(a) * lanes + 4 * g);

    auto do_step = [&](const __m256d* x, const __m256d* noise) {
      __m256d m = wl[0];
      for (int a = 1; a < n; ++a) m = _mm256_max_pd(wl[a], m);
      __m256d sum_e = _mm256_setzero_pd();
      for (int a = 0; a < n; ++a) {
        gw[a] = exp_real4(_mm256_sub_pd(wl[a], m));
        sum_e = _mm256_add_pd(sum_e, gw[a]);
      }
      __m256d port = _mm256_setzero_pd();
      for (int a = 0; a < n; ++a) {
        gw[a] = _mm256_div_pd(gw[a], sum_e);
        port = _mm256_fmadd_pd(gw[a], x[a], port);
      }
      const __m256d ge = _mm256_cmp_pd(port, th, _CMP_GE_OQ);

      const __m256d base_t = _mm256_blendv_pd(one, tail_base, ge);
      const __m256d grad_t = _mm256_fmadd_pd(two_gamma, th, base_t);
      th = sgld_update4(th, neg_lambda, ns, grad_t, noise[0]);

      for (int a = 0; a < n; ++a) {
        const __m256d ghat = _mm256_mul_pd(gw[a], _mm256_sub_pd(x[a], port));
        const __m256d base = _mm256_and_pd(ge, _mm256_mul_pd(ghat, invq));
        const __m256d grad = _mm256_fmadd_pd(two_gamma, wl[a], base);
        wl[a] = sgld_update4(wl[a], neg_lambda, ns, grad, noise[1 + a]);
      }
    };

    std::uint64_t data_tick = (step0 * static_cast<std::uint64_t>(n)) >> 1;
    std::uint64_t noise_tick = (step0 * static_cast<std::uint64_t>(n + 1)) >> 1;
    int i = 0;
    for (; i + 1 < nsteps; i += 2) {
      for (int k = 0; k < n + 1; ++k)
        normal_pair_at(nk, noise_tick + k, zn[2 * k], zn[2 * k + 1]);
      // regroup: noise draw c of step s is normal index s*(n+1)+c
      if (!xbuf) {
        for (int k = 0; k < n; ++k)
          normal_pair_at(dk, data_tick + k, zd[2 * k], zd[2 * k + 1]);
      }
      for (int s = 0; s < 2; ++s) {
        if (xbuf) {
          for (int a = 0; a < n; ++a)
            xv[a] = _mm256_loadu_pd(xbuf + (static_cast<std::size_t>(i + s) * n + a) * lanes + 4 * g);
        } else {
          for (int a = 0; a < n; ++a) {
            const int idx = s * n + a;
            const __m256d z = zd[idx];
            xv[a] = _mm256_fmadd_pd(_mm256_set1_pd(p.sigma[a]), z, _mm256_set1_pd(p.mu[a]));
          }
        }
        __m256d noise_step[kMaxPortfolioAssets + 1];
        for (int c = 0; c < n + 1; ++c) noise_step[c] = zn[s * (n + 1) + c];
        do_step(xv, noise_step);
      }
      data_tick += static_cast<std::uint64_t>(n);
      noise_tick += static_cast<std::uint64_t>(n + 1);
    }
    if (i < nsteps) {
      // final odd step: generate the pair, use the first half
      for (int k = 0; k < n + 1; ++k) {
        __m256d hi;
        normal_pair_at(nk, noise_tick + (static_cast<std::uint64_t>(k) >> 1),
                       zn[k & ~1], hi);
        zn[(k & ~1) + 1] = hi;
      }
      if (xbuf) {
        for (int a = 0; a < n; ++a)
          xv[a] = _mm256_loadu_pd(xbuf + (static_cast<std::size_t>(i) * n + a) * lanes + 4 * g);
      } else {
        for (int k = 0; k < n; ++k) {
          __m256d hi;
          normal_pair_at(dk, data_tick + (static_cast<std::uint64_t>(k) >> 1),
                         zd[k & ~1], hi);
          zd[(k & ~1) + 1] = hi;
        }
        for (int a = 0; a < n; ++a)
          xv[a] = _mm256_fmadd_pd(_mm256_set1_pd(p.sigma[a]), zd[a], _mm256_set1_pd(p.mu[a]));
      }
      __m256d noise_step[kMaxPortfolioAssets + 1];
      for (int c = 0; c < n + 1; ++c) noise_step[c] = zn[c];
      do_step(xv, noise_step);
    }

    _mm256_storeu_pd(theta + 4 * g, th);
    for (int a = 0; a < n; ++a)
      _mm256_storeu_pd(w + static_cast<std::size_t>(a) * lanes + 4 * g, wl[a]);
  }
  for (int l = groups * 4; l < lanes; ++l) {
    scalar_core::portfolio_lane(p, data_keys[l], noise_keys[l], lanes, step0, nsteps,
                                theta[l], w, xbuf, l);
  }
}

// ---- reductions ------------------------------------------------------------

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double shortfall_sum_avx2(const double* x, std::size_t n, double threshold) {
  const __m256d t = _mm256_set1_pd(threshold);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_max_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), t), zero));
    acc1 = _mm256_add_pd(acc1, _mm256_max_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i + 4), t), zero));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = x[i] - threshold;
    acc += d > 0.0 ? d : 0.0;
  }
  return acc;
}

double abs_diff_pow_sum_avx2(const double* a, const double* b, std::size_t n, int p) {
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFll));
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  if (p == 1) {
    for (; i + 4 <= n; i += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
      acc = _mm256_add_pd(acc, _mm256_and_pd(d, abs_mask));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
    return s;
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s = std::fma(d, d, s);
  }
  return s;
}

void axpy_mix_avx2(const double* delta, const double* base, double g, double* out,
                   std::size_t n) {
  const __m256d gv = _mm256_set1_pd(g);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(gv, _mm256_loadu_pd(delta + i),
                                              _mm256_loadu_pd(base + i)));
  }
  for (; i < n; ++i) out[i] = std::fma(g, delta[i], base[i]);
}

}  // namespace

const KernelTable* avx2_table() {
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
  static const KernelTable table{
      "avx2",          normal_block_avx2, quantile_ar1_run_avx2,
      varcvar_run_avx2, portfolio_run_avx2, sum_avx2,
      shortfall_sum_avx2, abs_diff_pow_sum_avx2, axpy_mix_avx2,
  };
  return &table;
}

}  // namespace sgld::kernels

#else  // non-x86 build: no AVX2 variant

namespace sgld::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace sgld::kernels

#endif
