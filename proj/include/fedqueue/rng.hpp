#pragma once

// Counter-based random substreams.
//
// Every random quantity in a simulation is drawn from a Stream keyed by
// (master seed, purpose, client, index). Two draws with the same key are
// bit-identical no matter which algorithm, thread or sweep worker asks for
// them, and adding a new consumer never shifts an existing one.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace fedqueue {

enum class Purpose : std::uint64_t {
  QueueDelay = 1,
  Compute = 2,
  Drift = 3,
  Warmup = 4,
  Minibatch = 5,
  Data = 6,
  Partition = 7,
  ModelInit = 8,
  Theory = 9,
  GradNoise = 10,
  Sweep = 11,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix_key(std::uint64_t seed, Purpose purpose, std::uint64_t a,
                                       std::uint64_t b = 0) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  h = splitmix64(h ^ (a * 0xd6e8feb86659fd93ULL));
  h = splitmix64(h ^ (b * 0xa0761d6478bd642fULL));
  return h;
}

/// SplitMix64 sequence with uniform and standard-normal helpers.
/// Satisfies UniformRandomBitGenerator so it can drive <random> distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) noexcept : state_(key) {}
  Stream(std::uint64_t seed, Purpose purpose, std::uint64_t a, std::uint64_t b = 0) noexcept
      : state_(mix_key(seed, purpose, a, b)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1) with 53 random bits
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // (0, 1], safe for log()
  double uniform_open0() noexcept { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift; the tiny bias is irrelevant for sampling indices.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  // Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open0();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fedqueue
