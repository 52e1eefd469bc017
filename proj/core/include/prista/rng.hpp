#pragma once

#include <cstdint>
#include <string_view>

namespace prista {

/// Counter-based deterministic generator.
///
/// Draw i of a stream seeded with s is the SplitMix64 finalizer applied to
/// s + i * 0x9E3779B97F4A7C15. The same (seed, call sequence) therefore
/// produces the same values on every platform, and independent substreams
/// are derived statelessly with derive().
class Rng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64-counter";

  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller; consumes exactly two draws.
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  /// Seed of an independent substream of `seed`, keyed by an integer.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);
  /// Substream keyed by a label (FNV-1a hash of the tag).
  static std::uint64_t derive(std::uint64_t seed, std::string_view tag);

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace prista
