#pragma once

#include <cmath>
#include <cstdint>

namespace gwm {

/// Deterministic 64-bit generator (splitmix64). Every randomized piece of the
/// pipeline draws from this one generator so runs reproduce bit-exactly from a
/// seed. The update rule, spelled out so other tools can reproduce the stream:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   output = z ^ (z >> 31)
///
/// uniform():  (output >> 11) * 2^-53, in [0, 1)
/// normal():   Box-Muller on two uniforms; the pair is consumed in order and
///             the second deviate is cached, so draws come in (cos, sin) pairs.
/// split(i):   child generator seeded with mix(state_0 + (i + 1) * GOLDEN),
///             where state_0 is the seed this generator was built with and
///             mix() is the output function above. Child streams are
///             independent of the parent's position.
class Prng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  explicit Prng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal deviate via Box-Muller.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // (output >> 11) + 1 keeps u1 in (0, 1] so log() is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(t);
    has_cached_ = true;
    return r * std::cos(t);
  }

  /// Integer in [0, n), n > 0. Modulo bias is irrelevant at our scales.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Independent child stream (documented rule above).
  Prng split(std::uint64_t index) const {
    return Prng(mix(seed_ + (index + 1) * kGolden));
  }

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace gwm
