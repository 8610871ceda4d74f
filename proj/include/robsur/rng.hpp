// Deterministic random number generation.
//
// All stochastic components (subsampling, bootstrap resampling, simulation)
// draw from this wrapper instead of the <random> distribution classes: the
// standard specifies the mt19937_64 engine bit-for-bit but leaves the
// distributions implementation-defined, so frozen test values would not be
// portable otherwise.  Streams are derived from a (seed, stream) pair with a
// SplitMix64-style hash, which makes parallel schedules reproducible: worker
// k always uses the same stream no matter how work is distributed.
#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>
#include <random>

namespace robsur {

// One mixing step of the SplitMix64 generator (public-domain constants).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Collapse a (seed, stream) pair into a single well-mixed 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0xd1342543de82ef95ULL + 1));
}

// Deterministic generator with explicit, hand-written distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : gen_(derive_seed(seed, stream)) {}

  // Uniform on [0, 1) with 53 random bits.
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = u01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;  // guard log(0)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u01();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Chi-squared with k degrees of freedom as a sum of squared normals.
  // Only used for small k (multivariate t draws), where this is fast enough.
  double chisq(int k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
      const double z = normal();
      s += z * z;
    }
    return s;
  }

  // Unbiased integer on [0, n) by rejection.
  std::uint64_t integer(std::uint64_t n) {
    const std::uint64_t rem = (UINT64_MAX % n + 1) % n;  // 2^64 mod n
    const std::uint64_t limit = UINT64_MAX - rem;
    std::uint64_t x = gen_();
    while (rem != 0 && x > limit) x = gen_();
    return x % n;
  }

  std::uint64_t bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace robsur
