#pragma once

// Scalar reference implementations of the transcendentals used in hot loops.
//
// These are the ground truth for the SIMD kernels: every operation below has
// an exactly corresponding vector instruction (mul/add/div/sqrt are IEEE
// correctly rounded, std::fma mirrors vfmadd, the branches are value
// selections). The AVX2 variants must reproduce these bit for bit, which the
// kernel equivalence suite asserts.
//
// Accuracy is a few ulp, which is far below the statistical resolution of
// anything sampled from them.

#include <cmath>
#include <cstdint>
#include <bit>

#include "sgld/kernels/rng.hpp"

namespace sgld::vmath {

inline constexpr double kLn2Hi = 6.93147180369123816490e-01;   // 0x3FE62E42FEE00000
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;   // 0x3DEA39EF35793C76
inline constexpr double kLog2E = 1.44269504088896338700e+00;
inline constexpr double kSqrt2 = 1.41421356237309514547e+00;
inline constexpr double kTwoPiHi = 6.28318530717958623200e+00; // 0x401921FB54442D18
inline constexpr double kTwoPiLo = 2.44929359829470635446e-16;

// sin/cos minimax coefficients on |r| <= pi/4 (fdlibm kernel polynomials).
inline constexpr double kS1 = -1.66666666666666324348e-01;
inline constexpr double kS2 = 8.33333333332248946124e-03;
inline constexpr double kS3 = -1.98412698298579493134e-04;
inline constexpr double kS4 = 2.75573137070700676789e-06;
inline constexpr double kS5 = -2.50507602534068634195e-08;
inline constexpr double kS6 = 1.58969099521155010221e-10;
inline constexpr double kC1 = 4.16666666666666019037e-02;
inline constexpr double kC2 = -1.38888888888741095749e-03;
inline constexpr double kC3 = 2.48015872894767294178e-05;
inline constexpr double kC4 = -2.75573143513906633035e-07;
inline constexpr double kC5 = 2.08757232129817482790e-09;
inline constexpr double kC6 = -1.13596475577881948265e-11;

// Natural log of a positive normal double.
// Reduction: x = 2^e * m with m in [sqrt(1/2), sqrt(2)), then the
// atanh series in z = (m-1)/(m+1).
inline double log_pos(double x) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  std::int64_t e = static_cast<std::int64_t>(bits >> 52) - 1023;
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) | 0x3FF0000000000000ull);
  const bool shift = m >= kSqrt2;
  m = shift ? 0.5 * m : m;
  e = shift ? e + 1 : e;

  const double z = (m - 1.0) / (m + 1.0);
  const double s = z * z;
  double p = 1.0 / 21.0;
  p = std::fma(p, s, 1.0 / 19.0);
  p = std::fma(p, s, 1.0 / 17.0);
  p = std::fma(p, s, 1.0 / 15.0);
  p = std::fma(p, s, 1.0 / 13.0);
  p = std::fma(p, s, 1.0 / 11.0);
  p = std::fma(p, s, 1.0 / 9.0);
  p = std::fma(p, s, 1.0 / 7.0);
  p = std::fma(p, s, 1.0 / 5.0);
  p = std::fma(p, s, 1.0 / 3.0);
  const double t = 2.0 * z;
  const double log_m = std::fma(t * s, p, t);
  const double ed = static_cast<double>(e);
  return std::fma(ed, kLn2Hi, std::fma(ed, kLn2Lo, log_m));
}

// exp(x) over the full double range; overflows to inf, underflows to 0.
inline double exp_real(double x) {
  x = x > 710.0 ? 710.0 : x;    // beyond these the result saturates anyway
  x = x < -746.0 ? -746.0 : x;
  const double kd = std::nearbyint(x * kLog2E);
  double r = std::fma(kd, -kLn2Hi, x);
  r = std::fma(kd, -kLn2Lo, r);

  double p = 1.0 / 6227020800.0;           // 1/13!
  p = std::fma(p, r, 1.0 / 479001600.0);   // 1/12!
  p = std::fma(p, r, 1.0 / 39916800.0);
  p = std::fma(p, r, 1.0 / 3628800.0);
  p = std::fma(p, r, 1.0 / 362880.0);
  p = std::fma(p, r, 1.0 / 40320.0);
  p = std::fma(p, r, 1.0 / 5040.0);
  p = std::fma(p, r, 1.0 / 720.0);
  p = std::fma(p, r, 1.0 / 120.0);
  p = std::fma(p, r, 1.0 / 24.0);
  p = std::fma(p, r, 1.0 / 6.0);
  p = std::fma(p, r, 0.5);
  p = std::fma(p, r, 1.0);
  p = std::fma(p, r, 1.0);

  // 2^k in two factors so the subnormal range stays reachable
  const std::int64_t k = static_cast<std::int64_t>(kd);
  const std::int64_t k1 = k >> 1;
  const std::int64_t k2 = k - k1;
  const double s1 = std::bit_cast<double>(static_cast<std::uint64_t>(1023 + k1) << 52);
  const double s2 = std::bit_cast<double>(static_cast<std::uint64_t>(1023 + k2) << 52);
  return (p * s1) * s2;
}

// sin(2*pi*u) and cos(2*pi*u) for u in [0,1).
inline void sincos_2pi(double u, double& sin_out, double& cos_out) {
  const double a = 4.0 * u;
  const double jd = std::nearbyint(a);
  const double d = (a - jd) * 0.25;                 // exact, |d| <= 1/8
  const double r = std::fma(d, kTwoPiHi, d * kTwoPiLo);
  const double z = r * r;

  double ps = kS6;
  ps = std::fma(ps, z, kS5);
  ps = std::fma(ps, z, kS4);
  ps = std::fma(ps, z, kS3);
  ps = std::fma(ps, z, kS2);
  ps = std::fma(ps, z, kS1);
  const double sr = std::fma(r * z, ps, r);

  double pc = kC6;
  pc = std::fma(pc, z, kC5);
  pc = std::fma(pc, z, kC4);
  pc = std::fma(pc, z, kC3);
  pc = std::fma(pc, z, kC2);
  pc = std::fma(pc, z, kC1);
  const double cr = std::fma(z * z, pc, 1.0 - 0.5 * z);

  const int j = static_cast<int>(jd) & 3;
  const double s_abs = (j & 1) ? cr : sr;
  const double c_abs = (j & 1) ? sr : cr;
  sin_out = (j & 2) ? -s_abs : s_abs;
  cos_out = ((j + 1) & 2) ? -c_abs : c_abs;
}

// Box-Muller pair from one 128-bit counter tick.
inline void normal_pair(std::uint64_t ra, std::uint64_t rb, double& z0, double& z1) {
  const double u1 = rng::u64_to_unit(ra);
  const double u2 = rng::u64_to_unit(rb);
  const double radius = std::sqrt(-2.0 * log_pos(u1));
  double s, c;
  sincos_2pi(u2, s, c);
  z0 = radius * c;
  z1 = radius * s;
}

// Standard normal draw #index of a keyed substream. Draws 2i and 2i+1 share
// counter tick i.
inline double normal_at(rng::PhiloxKey key, std::uint64_t index) {
  std::uint64_t ra, rb;
  rng::philox_u64x2(index >> 1, key, ra, rb);
  double z0, z1;
  normal_pair(ra, rb, z0, z1);
  return (index & 1) ? z1 : z0;
}

// Sequential standard normal draws (caches the second half of each pair).
class NormalCursor {
 public:
  explicit NormalCursor(rng::PhiloxKey key, std::uint64_t start_index = 0)
      : key_(key), tick_(start_index >> 1) {
    if (start_index & 1) {
      std::uint64_t ra, rb;
      rng::philox_u64x2(tick_++, key_, ra, rb);
      double z0;
      normal_pair(ra, rb, z0, spare_);
      have_spare_ = true;
    }
  }

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    std::uint64_t ra, rb;
    rng::philox_u64x2(tick_++, key_, ra, rb);
    double z0;
    normal_pair(ra, rb, z0, spare_);
    have_spare_ = true;
    return z0;
  }

 private:
  rng::PhiloxKey key_;
  std::uint64_t tick_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace sgld::vmath
