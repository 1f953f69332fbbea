#pragma once

#include <cstdint>

namespace tsim {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: every draw is a pure function of
/// (seed, key_a, key_b, draw ordinal). Two streams with different keys are
/// independent of each other and of the order in which they are consumed.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::uint64_t key_a, std::uint64_t key_b)
      : base_(mix64(mix64(mix64(seed) ^ key_a) ^ (key_b * 0xd1b54a32d192ed03ULL))) {}

  std::uint64_t next_u64() { return mix64(base_ ^ mix64(counter_++)); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Lemire's nearly-divisionless method would be faster; modulo bias is
    // below 2^-40 for the sizes used here.
    return next_u64() % n;
  }

  /// Standard normal via Box-Muller (one value per call).
  double normal();

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace tsim
