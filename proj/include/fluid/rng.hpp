#pragma once

#include <cstdint>

namespace fluid {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). All pseudorandomness in the
// library is derived from this function so that realizations can be reproduced
// bit-for-bit from a seed in any language:
//
//   mix64(x):  z = x + 0x9E3779B97F4A7C15
//              z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//              z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//              return z ^ (z >> 31)
//
// The i-th output (i >= 1) of a stream keyed by `key` is mix64(key + (i - 1) * golden),
// which is exactly what a SplitMix64 generator seeded with `key` returns on its i-th call.
// Sub-streams are derived with split(key, index) = mix64(key ^ mix64(index)).

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key of the index-th independent sub-stream of `key`.
constexpr std::uint64_t split(std::uint64_t key, std::uint64_t index) noexcept {
  return mix64(key ^ mix64(index));
}

/// Random access into a stream: the value a fresh generator would return on call `index` (1-based).
constexpr std::uint64_t stream_at(std::uint64_t key, std::uint64_t index) noexcept {
  return mix64(key + (index - 1) * kGolden);
}

/// Top 53 bits mapped to [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based SplitMix64. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept { return stream_at(key_, ++counter_); }

  constexpr double uniform() noexcept { return to_unit((*this)()); }

  /// Unbiased integer in [0, bound) by rejection; bound must be nonzero.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t rem = (max() % bound + 1) % bound;  // 2^64 mod bound
    std::uint64_t x = (*this)();
    while (rem != 0 && x > max() - rem) x = (*this)();
    return x % bound;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace fluid
