#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace niscal::rng {

// Name recorded in output metadata next to every seed.
inline constexpr const char* kGeneratorName = "splitmix64+box-muller";

// splitmix64 finalizer (Steele, Lea, Doug 2014); used both as the stream
// derivation function and as the uniform generator itself. Fully portable:
// the same (seed, stream) pair yields the same sequence on every platform.
inline constexpr std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Deterministic stream of standard normal deviates via Box-Muller on
// splitmix64 uniforms. Distinct `stream` values give decorrelated sequences
// for the same seed.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream) {
    state_ = seed;
    splitmix64_next(state_);
    state_ ^= 0xD2B74407B1CE6E93ull * (stream + 1);
    splitmix64_next(state_);
  }

  double uniform() {
    // (0, 1]: never zero, so log() below is safe.
    return (static_cast<double>(splitmix64_next(state_) >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace niscal::rng
