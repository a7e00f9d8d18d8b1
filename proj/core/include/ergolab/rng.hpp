#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ergolab {

// Finalizer step of the splitmix64 generator (Vigna). Bijective on 64-bit
// words, used both for stream advancement and seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Child-seed derivation, the only sanctioned way to split a stream.
// Stable contract: child_seed(base, k) = mix64(base ^ mix64(k + C)) with
// C = 0x632be59bd9b4e019. Replication r of an experiment with base seed s
// always runs on child_seed(s, r), independent of replication count.
inline std::uint64_t child_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(base ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// splitmix64 uniform generator plus a Box-Muller normal transform.
// Self-contained so that (spec, seed) -> output is byte-stable across
// standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1], safe as a log argument
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal. Box-Muller; the sine draw is cached, so draws come in
  // deterministic pairs.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
  }

  // Uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ergolab
