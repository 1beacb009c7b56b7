#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cvgeo {

/// Counter-based random stream: value n is a pure function of (seed, n).
///
/// Substreams are derived by hashing a key into the seed, so particles can be
/// propagated in any thread order and still produce identical results.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(seed_ + counter_ * kGolden);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two draws.
  double gaussian() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

  SeededRng substream(std::uint64_t key) const { return SeededRng(derive(seed_, key)); }
  SeededRng substream(std::uint64_t key_a, std::uint64_t key_b) const {
    return SeededRng(derive(derive(seed_, key_a), key_b));
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t key) {
    return mix(seed ^ mix(key + kGolden));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace cvgeo
