#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tphenotype {

/// Seeded random generator with bit-reproducible output across platforms.
///
/// The engine is std::mt19937_64, whose output sequence is fully specified by
/// the C++ standard. All distributions are implemented here (instead of using
/// the std:: distribution templates, whose algorithms are unspecified) so that
/// two runs with the same seed produce identical floating-point streams on any
/// conforming implementation:
///   - uniform doubles: 53 high bits of the engine output, scaled by 2^-53
///   - normal: Box-Muller on two uniforms (no cached spare)
///   - exponential: inverse CDF
///   - bounded integers: rejection sampling on the raw 64-bit output
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Standard normal via Box-Muller. Consumes exactly two uniforms.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate) {
    double u = uniform();
    while (u >= 1.0) u = uniform();  // unreachable for this engine; belt only
    return -std::log1p(-u) / rate;
  }

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Derive an independent child generator. Children with distinct stream ids
  /// get distinct, reproducible seeds (splitmix64 of the parent seed and id).
  Rng fork(std::uint64_t stream) const {
    return Rng(splitmix64(seed_ + 0x9E3779B97F4A7C15ULL * (stream + 1)));
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace tphenotype
