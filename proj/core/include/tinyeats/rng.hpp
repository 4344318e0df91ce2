// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace tinyeats {

/// xorshift64* (Vigna). Spelled out here rather than using <random> so that
/// every seeded draw is bit-identical across standard libraries.
class XorShift64Star {
 public:
  explicit constexpr XorShift64Star(std::uint64_t seed) : state_(mix(seed)) {}

  constexpr std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) (n > 0), by rejection to avoid modulo bias.
  constexpr std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  /// splitmix64 finalizer; also used to derive independent sub-seeds.
  static constexpr std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x == 0 ? 0x9E3779B97F4A7C15ULL : x;
  }

 private:
  std::uint64_t state_;
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return XorShift64Star::mix(seed ^ XorShift64Star::mix(stream + 0x632BE59BD9B4E019ULL));
}

}  // namespace tinyeats
