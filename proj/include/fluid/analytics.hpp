#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fluid/error.hpp"
#include "fluid/params.hpp"

namespace fluid {

// ---------------------------------------------------------------------------
// Loss-product trajectories
// ---------------------------------------------------------------------------

/// Per-round loss fractions f_r with their running products pi_r and the remaining
/// losses L_r = pi_r * N. Index 0 is round 1; the empty trace stands for L_0 = N.
struct RoundTrace {
  double n = 0.0;
  std::vector<double> fractions;
  std::vector<double> products;
  std::vector<double> losses;

  std::size_t rounds() const noexcept { return fractions.size(); }
  /// pi_l for l >= 0, with pi_0 = 1.
  double product(std::size_t round) const { return round == 0 ? 1.0 : products.at(round - 1); }
  /// L_l for l >= 0, with L_0 = N.
  double loss(std::size_t round) const { return round == 0 ? n : losses.at(round - 1); }
};

inline RoundTrace loss_product_trajectory(double n, const std::vector<double>& fractions) {
  if (!(n > 0.0)) throw InvalidParameter("N must be positive");
  RoundTrace t;
  t.n = n;
  t.fractions = fractions;
  double pi = 1.0;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidParameter("loss fraction outside [0, 1]");
    pi *= f;
    t.products.push_back(pi);
    t.losses.push_back(pi * n);
  }
  return t;
}

/// First round whose loss product is at most `threshold`.
inline std::optional<std::uint32_t> first_round_within(const RoundTrace& trace, double threshold) {
  for (std::size_t i = 0; i < trace.products.size(); ++i) {
    if (trace.products[i] <= threshold) return static_cast<std::uint32_t>(i + 1);
  }
  return std::nullopt;
}

/// FLUID finishes at the first round with pi_l <= epsilon, or pi_l <= S/N when the
/// exact slack threshold is supplied.
inline std::optional<std::uint32_t> fluid_delivery_round(const RoundTrace& trace, double epsilon,
                                                         std::optional<double> exact_threshold = std::nullopt) {
  return first_round_within(trace, exact_threshold.value_or(epsilon));
}

/// ARQ has no slack and finishes at the first round with pi_l = 0.
inline std::optional<std::uint32_t> arq_delivery_round(const RoundTrace& trace) {
  return first_round_within(trace, 0.0);
}

// ---------------------------------------------------------------------------
// Binomial probabilities
// ---------------------------------------------------------------------------

namespace detail {

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) noexcept {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

/// log(n!) - log(sqrt(2 pi n) (n/e)^n), the error of Stirling's formula.
inline double stirling_error(double n) {
  constexpr double kS0 = 1.0 / 12.0;
  constexpr double kS1 = 1.0 / 360.0;
  constexpr double kS2 = 1.0 / 1260.0;
  constexpr double kS3 = 1.0 / 1680.0;
  constexpr double kS4 = 1.0 / 1188.0;
  if (n <= 15.0) {
    // n! is exact in a double for n <= 15.
    double fact = 1.0;
    for (int i = 2; i <= static_cast<int>(n); ++i) fact *= i;
    return std::log(fact) - (n + 0.5) * std::log(n) + n - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  const double nn = n * n;
  if (n > 500) return (kS0 - kS1 / nn) / n;
  if (n > 80) return (kS0 - (kS1 - kS2 / nn) / nn) / n;
  if (n > 35) return (kS0 - (kS1 - (kS2 - kS3 / nn) / nn) / nn) / n;
  return (kS0 - (kS1 - (kS2 - (kS3 - kS4 / nn) / nn) / nn) / nn) / n;
}

/// Deviance term x log(x / np) + np - x, evaluated by series near x = np.
inline double deviance(double x, double np) {
  if (std::fabs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double next = s + ej / (2 * j + 1);
      if (next == s) return next;
      s = next;
    }
  }
  return x * std::log(x / np) + np - x;
}

/// Binomial pmf with success probability q and failure probability qc = 1 - q, using
/// the saddle-point expansion so each term is accurate to a few ulps in relative terms.
inline double binomial_pmf(std::uint32_t k, std::uint32_t n, double q, double qc) {
  if (q == 0.0) return k == 0 ? 1.0 : 0.0;
  if (qc == 0.0) return k == n ? 1.0 : 0.0;
  const double x = k;
  const double nd = n;
  if (k == 0) {
    if (n == 0) return 1.0;
    return std::exp(q < 0.1 ? -deviance(nd, nd * qc) - nd * q : nd * std::log(qc));
  }
  if (k == n) return std::exp(qc < 0.1 ? -deviance(nd, nd * q) - nd * qc : nd * std::log(q));
  const double lc = stirling_error(nd) - stirling_error(x) - stirling_error(nd - x) - deviance(x, nd * q) -
                    deviance(nd - x, nd * qc);
  const double lf = std::log(2.0 * std::numbers::pi) + std::log(x) + std::log1p(-x / nd);
  return std::exp(lc - 0.5 * lf);
}

}  // namespace detail

/// Both tails of Bin(n, q) around m: upper = Pr(X >= m), lower = Pr(X < m).
/// The smaller side is summed term by term (Kahan), the other is its complement.
struct BinomialSplit {
  double upper = 0.0;
  double lower = 0.0;
};

inline BinomialSplit binomial_split(std::uint32_t n, double q, double qc, std::uint32_t m) {
  if (m == 0) return {1.0, 0.0};
  if (m > n) return {0.0, 1.0};
  if (q == 0.0) return {0.0, 1.0};
  if (qc == 0.0) return {1.0, 0.0};
  detail::KahanSum acc;
  if (static_cast<double>(m) > n * q) {
    for (std::uint32_t k = m; k <= n; ++k) acc.add(detail::binomial_pmf(k, n, q, qc));
    const double upper = std::fmin(acc.sum, 1.0);
    return {upper, 1.0 - upper};
  }
  for (std::uint32_t k = 0; k < m; ++k) acc.add(detail::binomial_pmf(k, n, q, qc));
  const double lower = std::fmin(acc.sum, 1.0);
  return {1.0 - lower, lower};
}

/// Pr(Bin(n, q) >= m). m > n yields 0 and, when `diagnostic` is given, a note there.
inline double binomial_tail(std::uint32_t n, double q, std::uint32_t m, std::string* diagnostic = nullptr) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("binomial success probability outside [0, 1]");
  if (m > n) {
    if (diagnostic) *diagnostic = "threshold " + std::to_string(m) + " exceeds N = " + std::to_string(n);
    return 0.0;
  }
  return binomial_split(n, q, 1.0 - q, m).upper;
}

// ---------------------------------------------------------------------------
// Delivery-round distribution under independent loss
// ---------------------------------------------------------------------------

/// Pr(T_M = l) for l = 1..max_round, where T_M is the first round after which at
/// least M of the N positions have delivered a packet. Index 0 is round 1.
struct DeliveryDistribution {
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  double p = 0.0;
  std::vector<double> rounds;
  /// Pr(T_M > max_round), including never delivering.
  double tail = 0.0;

  std::uint32_t max_round() const noexcept { return static_cast<std::uint32_t>(rounds.size()); }
  double at(std::uint32_t round) const { return rounds.at(round - 1); }

  double total() const noexcept {
    detail::KahanSum acc;
    for (double r : rounds) acc.add(r);
    acc.add(tail);
    return acc.sum;
  }

  friend bool operator==(const DeliveryDistribution&, const DeliveryDistribution&) = default;
};

inline constexpr double kNormalizationTolerance = 1e-12;

/// Exact distribution of the delivery round: X_l ~ Binomial(N, 1 - p^l) and
/// Pr(T_M = l) = Pr(X_l >= M) - Pr(X_{l-1} >= M) with X_0 = 0.
inline DeliveryDistribution round_distribution(std::uint32_t n, std::uint32_t m, double p, std::uint32_t max_round) {
  if (m < 1 || m > n) throw InvalidParameter("threshold M must satisfy 1 <= M <= N");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("loss probability outside [0, 1]");
  if (max_round < 1) throw InvalidParameter("max_round must be at least 1");

  DeliveryDistribution d;
  d.n = n;
  d.m = m;
  d.p = p;
  d.rounds.reserve(max_round);
  double previous = 0.0;
  BinomialSplit split{0.0, 1.0};
  for (std::uint32_t l = 1; l <= max_round; ++l) {
    const double unresolved = std::pow(p, static_cast<double>(l));
    split = binomial_split(n, 1.0 - unresolved, unresolved, m);
    double entry = split.upper - previous;
    if (entry < 0.0) {
      if (entry < -1e-15) throw NumericalError("negative round probability " + std::to_string(entry));
      entry = 0.0;
    }
    d.rounds.push_back(entry);
    previous = split.upper;
  }
  d.tail = split.lower;
  if (std::fabs(d.total() - 1.0) > kNormalizationTolerance) {
    throw NumericalError("round distribution does not sum to one");
  }
  return d;
}

// ---------------------------------------------------------------------------
// Latency, efficiency and cost bounds
// ---------------------------------------------------------------------------

struct LatencyBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Delivery after l rounds takes at least the time to send the first K of the N
/// round-1 packets (T K / N at a uniform rate) and at most T + l RTT.
inline LatencyBounds latency_bounds(double t, double rtt, std::uint32_t ell, std::uint32_t k, std::uint32_t n) {
  if (ell < 1) throw InvalidParameter("round count must be at least 1");
  if (k > n || n == 0) throw InvalidParameter("need K <= N and N >= 1");
  if (!(t >= 0.0) || !(rtt >= 0.0)) throw InvalidParameter("times must be non-negative");
  return {t * k / n, t + ell * rtt};
}

struct RatioBound {
  double actual = 0.0;
  double bound = 0.0;
};

/// Delivery efficiency K/N against its floor (1 - eps) K / (K + 1).
inline RatioBound efficiency_bound(std::uint32_t k, double epsilon) {
  const std::uint32_t n = block_budget(k, epsilon);
  return {static_cast<double>(k) / n, (1.0 - epsilon) * k / (k + 1.0)};
}

/// Transmissions per delivered source packet relative to ARQ, N/K, against its
/// ceiling 1 / (1 - eps) + 1 / K.
inline RatioBound cost_ratio(std::uint32_t k, double epsilon) {
  const std::uint32_t n = block_budget(k, epsilon);
  return {static_cast<double>(n) / k, 1.0 / (1.0 - epsilon) + 1.0 / k};
}

}  // namespace fluid
