#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "fluid/error.hpp"

namespace fluid {

namespace detail {

// Quotients within this relative distance of an integer are taken to be that
// integer, so decimal inputs such as epsilon = 0.1 give N = 10 for K = 9 even
// though 9 / (1 - 0.1) evaluates to 10.000000000000002 in binary floating point.
inline constexpr double kIntegerSnap = 1e-9;

inline std::uint64_t snapped_ceil(double x) {
  const double nearest = std::round(x);
  if (std::fabs(x - nearest) <= kIntegerSnap * std::fmax(1.0, std::fabs(x))) {
    return static_cast<std::uint64_t>(nearest);
  }
  return static_cast<std::uint64_t>(std::ceil(x));
}

}  // namespace detail

/// Block budget N = ceil(K / (1 - epsilon)).
inline std::uint32_t block_budget(std::uint32_t k, double epsilon) {
  if (k == 0) throw InvalidParameter("K must be at least 1");
  if (!(epsilon >= 0.0) || !(epsilon < 1.0)) {
    throw InvalidParameter("epsilon must lie in [0, 1), got " + std::to_string(epsilon));
  }
  return static_cast<std::uint32_t>(detail::snapped_ceil(static_cast<double>(k) / (1.0 - epsilon)));
}

/// Slack S = N - K.
inline std::uint32_t slack(std::uint32_t n, std::uint32_t k) {
  if (n < k) throw InvalidParameter("budget N must be at least K");
  return n - k;
}

inline double epsilon_from_lambda(double lambda) {
  if (!(lambda >= 1.0) || std::isinf(lambda)) throw InvalidParameter("lambda must be finite and >= 1");
  return (lambda - 1.0) / lambda;
}

inline double lambda_from_epsilon(double epsilon) {
  if (!(epsilon >= 0.0) || !(epsilon < 1.0)) throw InvalidParameter("epsilon must lie in [0, 1)");
  return 1.0 / (1.0 - epsilon);
}

/// Largest K whose budget at `epsilon` fits in N.
inline std::uint32_t source_count_for_budget(std::uint32_t n, double epsilon) {
  if (n == 0) throw InvalidParameter("N must be at least 1");
  auto k = static_cast<std::uint32_t>(std::floor((1.0 - epsilon) * n + detail::kIntegerSnap * n));
  if (k == 0) throw InvalidParameter("epsilon leaves no room for a source packet in N");
  while (k > 1 && block_budget(k, epsilon) > n) --k;
  while (block_budget(k + 1, epsilon) <= n) ++k;
  return k;
}

/// Parameters of one block: K source packets, slack parameter, budget and slack.
struct BlockSpec {
  std::uint64_t block_id = 0;
  std::uint32_t k = 1;
  double epsilon = 0.0;
  double lambda = 1.0;
  std::uint32_t n = 1;
  std::uint32_t s = 0;

  static BlockSpec from_epsilon(std::uint32_t k, double epsilon, std::uint64_t block_id = 0) {
    BlockSpec b;
    b.block_id = block_id;
    b.k = k;
    b.n = block_budget(k, epsilon);
    b.s = b.n - k;
    b.epsilon = epsilon;
    b.lambda = lambda_from_epsilon(epsilon);
    return b;
  }

  static BlockSpec from_lambda(std::uint32_t k, double lambda, std::uint64_t block_id = 0) {
    return from_epsilon(k, epsilon_from_lambda(lambda), block_id);
  }

  /// Budget N and source count K given directly; epsilon is taken as S/N.
  static BlockSpec from_budget(std::uint32_t n, std::uint32_t k, std::uint64_t block_id = 0) {
    if (k == 0) throw InvalidParameter("K must be at least 1");
    BlockSpec b;
    b.block_id = block_id;
    b.k = k;
    b.n = n;
    b.s = slack(n, k);
    b.epsilon = static_cast<double>(b.s) / n;
    b.lambda = static_cast<double>(n) / k;
    return b;
  }

  /// Exact FLUID slack threshold S/N (>= epsilon).
  double slack_fraction() const noexcept { return static_cast<double>(s) / n; }

  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

}  // namespace fluid
