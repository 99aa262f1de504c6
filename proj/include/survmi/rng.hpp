#pragma once

#include <cmath>
#include <cstdint>

namespace survmi {

inline constexpr std::uint64_t kSeedGamma = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer; full-avalanche 64-bit mix.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Derives an independent stream key from a parent key and tag words.
// Every nested loop in the project (simulation, replicate, imputation,
// fold) gets its own stream this way, so serial and parallel execution
// draw identical numbers.
inline constexpr std::uint64_t derive_seed(std::uint64_t key,
                                           std::uint64_t word) {
  return mix64((key ^ (word + kSeedGamma)) + kSeedGamma);
}

template <typename... Words>
inline constexpr std::uint64_t derive_seed(std::uint64_t key,
                                           std::uint64_t word,
                                           Words... rest) {
  return derive_seed(derive_seed(key, word), rest...);
}

// Counter-based generator: output i is mix64(key + i*gamma), the splitmix64
// sequence. State is just (key, counter), so streams derived for distinct
// task indices are independent and reproducible regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += kSeedGamma;
    return mix64(state_);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Box-Muller without the cached partner draw; two uniforms per normal
  // keeps the stream position independent of call history.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // Marsaglia-Tsang, unit scale.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform_pos();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v;
      }
    }
  }

  double chisq(double df) { return 2.0 * gamma(0.5 * df); }

 private:
  std::uint64_t state_;
};

}  // namespace survmi
