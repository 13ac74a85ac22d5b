#pragma once

// Shared helpers for the test suites: moments, independent loss evaluations,
// simple sampling. Everything here is test-side oracle code, kept independent
// of the library's implementation paths.

#include <cmath>
#include <span>
#include <vector>

#include "sgld/kernels/rng.hpp"
#include "sgld/kernels/vmath.hpp"

namespace testutil {

struct Moments {
  double mean = 0;
  double var = 0;
  double se_mean = 0;  // standard error of the mean
};

inline Moments moments(std::span<const double> xs) {
  Moments m;
  const auto n = static_cast<double>(xs.size());
  for (double v : xs) m.mean += v;
  m.mean /= n;
  for (double v : xs) m.var += (v - m.mean) * (v - m.mean);
  m.var /= (n - 1.0);
  m.se_mean = std::sqrt(m.var / n);
  return m;
}

// pinball (quantile) loss l_q(z)
inline double pinball(double q, double z) { return z >= 0 ? q * z : (q - 1.0) * z; }

inline std::vector<double> standard_normals(int n, std::uint64_t seed, std::uint64_t salt = 0) {
  sgld::vmath::NormalCursor cur(
      sgld::rng::derive_key(seed, salt, sgld::rng::Substream::scratch));
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = cur.next();
  return out;
}

inline std::vector<double> uniforms(int n, std::uint64_t seed, std::uint64_t salt = 0) {
  sgld::rng::UniformCursor cur(
      sgld::rng::derive_key(seed, salt, sgld::rng::Substream::scratch, 1));
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = cur.next();
  return out;
}

}  // namespace testutil
