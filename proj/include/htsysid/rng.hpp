#pragma once

#include <cstdint>

namespace htsysid {

/// 64-bit derivation key. Keys form a tree rooted at the master seed; every
/// (trial, rollout, signal, time step) tuple derives its own key, so any
/// subset of the workload can be regenerated independently and the same
/// master seed always produces bit-identical data regardless of evaluation
/// order or worker count.
class RngKey {
 public:
  explicit RngKey(std::uint64_t seed) : key_(mix(seed + kSeedSalt)) {}

  /// Derive a child key; distinct tags give statistically independent keys.
  RngKey child(std::uint64_t tag) const {
    return RngKey(mix(key_ ^ mix(tag + kChildSalt)), Raw{});
  }

  std::uint64_t value() const { return key_; }

  /// splitmix64 finalizer (Steele, Lea & Flood's SplittableRandom mixing).
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  struct Raw {};
  RngKey(std::uint64_t k, Raw) : key_(k) {}

  static constexpr std::uint64_t kSeedSalt = 0xA0761D6478BD642Full;
  static constexpr std::uint64_t kChildSalt = 0xE7037ED1A0B428DBull;

  std::uint64_t key_;
};

/// Counter-based uniform stream (splitmix64 sequence) plus the derived
/// variates the samplers need. Draw counts per variate are fixed by
/// construction - normal() always consumes exactly two uniforms - so streams
/// stay aligned and reproducible across platforms and library versions.
class RngStream {
 public:
  explicit RngStream(RngKey key) : state_(key.value()) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return RngKey::mix(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe as a log() argument.
  double uniform01_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller. Consumes exactly two uniforms and keeps
  /// no cached spare, so consumption is deterministic.
  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang squeeze; valid for any shape > 0.
  double gamma(double shape);

  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t next_below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

}  // namespace htsysid
