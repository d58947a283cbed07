#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sdpcert {

// Counter-based generator: output k is a fixed 64-bit mix of (seed, k), so a
// stream is a pure function of the seed and streams never share state.
// The mixer is the SplitMix64 finalizer.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  /// Independent stream for worker/trial `index` of a run seeded with `seed`.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 0x51F15EEDULL));
  }

  std::uint64_t next_u64() { return mix64(seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal() {
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// +1 or -1 with equal probability.
  double pm_one() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

  /// Uniform integer in [0, k).
  std::uint64_t uniform_int(std::uint64_t k) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(k)) % k;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace sdpcert
