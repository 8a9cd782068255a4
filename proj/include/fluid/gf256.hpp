#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace fluid::gf256 {

// GF(2^8) with the AES reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11B).
// 0x02 is not primitive for this polynomial, so the log/antilog tables are
// built from the generator 0x03.

inline constexpr unsigned kPolynomial = 0x11B;
inline constexpr std::uint8_t kGenerator = 0x03;

namespace detail {

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<std::uint8_t, 256> log{};
};

// Carry-less multiply with reduction; only used to build the tables.
constexpr std::uint8_t slow_mul(std::uint8_t a, std::uint8_t b) {
  unsigned acc = 0;
  unsigned x = a;
  for (unsigned bits = b; bits != 0; bits >>= 1) {
    if (bits & 1U) acc ^= x;
    x <<= 1;
    if (x & 0x100U) x ^= kPolynomial;
  }
  return static_cast<std::uint8_t>(acc);
}

constexpr Tables make_tables() {
  Tables t;
  std::uint8_t v = 1;
  for (int i = 0; i < 255; ++i) {
    t.exp[i] = v;
    t.log[v] = static_cast<std::uint8_t>(i);
    v = slow_mul(v, kGenerator);
  }
  // Doubled so exp[log a + log b] needs no modulo.
  for (int i = 255; i < 512; ++i) t.exp[i] = t.exp[i - 255];
  return t;
}

inline constexpr Tables kTables = make_tables();

}  // namespace detail

constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) noexcept { return a ^ b; }

constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) noexcept {
  if (a == 0 || b == 0) return 0;
  return detail::kTables.exp[detail::kTables.log[a] + detail::kTables.log[b]];
}

/// Multiplicative inverse; inv(0) is defined as 0.
constexpr std::uint8_t inv(std::uint8_t a) noexcept {
  if (a == 0) return 0;
  return detail::kTables.exp[255 - detail::kTables.log[a]];
}

constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) noexcept { return mul(a, inv(b)); }

/// dst[i] ^= c * src[i]
inline void mul_add(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src, std::uint8_t c) noexcept {
  if (c == 0) return;
  if (c == 1) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
    return;
  }
  const unsigned lc = detail::kTables.log[c];
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const std::uint8_t s = src[i];
    if (s != 0) dst[i] ^= detail::kTables.exp[lc + detail::kTables.log[s]];
  }
}

/// dst[i] = c * dst[i]
inline void scale(std::span<std::uint8_t> dst, std::uint8_t c) noexcept {
  if (c == 1) return;
  for (auto& d : dst) d = mul(d, c);
}

}  // namespace fluid::gf256
