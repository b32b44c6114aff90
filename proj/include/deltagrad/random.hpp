#ifndef DELTAGRAD_RANDOM_HPP
#define DELTAGRAD_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace deltagrad {

/// Counter-based pseudo-random function. Every draw is a pure function of
/// (seed, stream, counter), so schedules and synthetic data can be rebuilt
/// anywhere from the seed alone.
class CounterRng {
public:
  constexpr explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
    : seed_(seed), stream_(stream) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix(mix(seed_ ^ mix(stream_ + 0x632be59bd9b4e019ULL)) + counter);
  }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound), bound > 0. Rejection keeps it unbiased;
  /// rejected draws advance a secondary counter so the result stays a
  /// function of (seed, stream, counter).
  constexpr std::uint64_t below(std::uint64_t counter, std::uint64_t bound) const noexcept {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = bits(counter);
    for (std::uint64_t retry = 1; x >= limit; ++retry) {
      x = mix(x + retry);
    }
    return x % bound;
  }

  /// Standard normal via Box-Muller on two uniforms.
  double normal(std::uint64_t counter) const noexcept {
    double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr CounterRng substream(std::uint64_t id) const noexcept {
    return CounterRng(seed_, mix(stream_ ^ mix(id + 1)));
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace deltagrad

#endif  // DELTAGRAD_RANDOM_HPP
