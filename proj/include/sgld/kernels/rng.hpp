#pragma once

// Counter-based random number generation (Philox4x32-10).
//
// Every chain owns independent substreams (data, noise, ...) keyed by
// hash(master_seed, chain_index, substream). Draw i of a substream is a pure
// function of (key, i), so chains can run in any order, on any thread, in
// scalar or SIMD form, and still produce bit-identical output.

#include <bit>
#include <cstdint>

namespace sgld::rng {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

struct PhiloxKey {
  std::uint32_t k0 = 0;
  std::uint32_t k1 = 0;
  friend bool operator==(const PhiloxKey&, const PhiloxKey&) = default;
};

// Substream tags. A chain's draws for one purpose never alias another's.
enum class Substream : std::uint64_t {
  data = 0x64617461u,       // model data samples
  data_aux = 0x61757832u,   // auxiliary uniforms (rejection samplers)
  init = 0x696e6974u,       // initial-state draws
  noise = 0x6e6f6973u,      // Langevin Gaussian noise
  scratch = 0x73637263u,    // everything else (reference batches, ...)
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr PhiloxKey derive_key(std::uint64_t master_seed, std::uint64_t chain_index,
                               Substream purpose, std::uint64_t salt = 0) {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ chain_index);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  if (salt != 0) h = splitmix64(h ^ salt);
  return PhiloxKey{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

// One Philox4x32-10 block: 128 random bits for counter value `tick`.
inline void philox4x32(std::uint64_t tick, PhiloxKey key, std::uint32_t out[4]) {
  std::uint32_t c0 = static_cast<std::uint32_t>(tick);
  std::uint32_t c1 = static_cast<std::uint32_t>(tick >> 32);
  std::uint32_t c2 = 0, c3 = 0;
  std::uint32_t k0 = key.k0, k1 = key.k1;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  out[0] = c0;
  out[1] = c1;
  out[2] = c2;
  out[3] = c3;
}

// Two 64-bit words per counter tick.
inline void philox_u64x2(std::uint64_t tick, PhiloxKey key, std::uint64_t& a,
                         std::uint64_t& b) {
  std::uint32_t w[4];
  philox4x32(tick, key, w);
  a = (static_cast<std::uint64_t>(w[1]) << 32) | w[0];
  b = (static_cast<std::uint64_t>(w[3]) << 32) | w[2];
}

// Map 64 random bits to the open interval (0,1): (2k+1) * 2^-53 over the top
// 52 bits, every step exact in double precision.
inline double u64_to_unit(std::uint64_t r) {
  return static_cast<double>(r >> 12) * 0x1p-52 + 0x1p-53;
}

// Sequential uniform draws from one substream.
class UniformCursor {
 public:
  explicit UniformCursor(PhiloxKey key) : key_(key) {}

  double next() {
    if (phase_ == 0) {
      philox_u64x2(tick_++, key_, pend_[0], pend_[1]);
      phase_ = 2;
    }
    return u64_to_unit(pend_[2 - phase_--]);
  }

 private:
  PhiloxKey key_;
  std::uint64_t tick_ = 0;
  std::uint64_t pend_[2] = {0, 0};
  int phase_ = 0;
};

}  // namespace sgld::rng
