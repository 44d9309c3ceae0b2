#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace confkit::rng {

inline constexpr double kZ90 = 1.2815515655446004;  // 90th percentile of N(0,1)

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic per-stream generator. Streams are derived from a base seed
/// plus string/integer keys, so concurrent callers that address distinct
/// streams never perturb each other's draws.
class Stream {
 public:
  explicit Stream(uint64_t seed) : eng_(splitmix64(seed)) {}

  Stream(uint64_t seed, std::string_view tag, std::string_view key, uint64_t index)
      : eng_(splitmix64(seed ^ splitmix64(fnv1a64(tag) ^ splitmix64(fnv1a64(key) + index)))) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1). Fixed 53-bit construction, identical on every platform.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  uint64_t below(uint64_t n) { return eng_() % n; }

  /// Standard normal via Box-Muller (platform-independent, unlike
  /// std::normal_distribution).
  double normal01() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Lognormal parameterized by its 50th and 90th percentiles.
  double lognormal_p50_p90(double p50, double p90) {
    double mu = std::log(p50);
    double sigma = std::log(p90 / p50) / kZ90;
    return std::exp(mu + sigma * normal01());
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace confkit::rng
