#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace latcoh {

/// splitmix64 finalizer, used to derive per-channel substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Substream rule: noise channel c of a run with seed s uses an mt19937_64
/// engine seeded with mix64(s + GOLDEN * (c + 1)). Channels are therefore
/// independent of each other and of the channel count.
inline std::uint64_t channel_seed(std::uint64_t seed, std::uint64_t channel) {
  return mix64(seed + 0x9E3779B97F4A7C15ull * (channel + 1));
}

/// Uniform doubles in [0, 1) from a seeded mt19937_64 (53-bit mantissa).
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : eng_(seed) {}
  double next() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 eng_;
};

/// Standard normal draws via Box-Muller on explicit uniforms; avoids
/// std::normal_distribution, whose algorithm is implementation-defined.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;       // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double w = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(w);
    has_spare_ = true;
    return r * std::cos(w);
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace latcoh
