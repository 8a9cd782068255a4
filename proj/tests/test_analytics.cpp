#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "fluid/analytics.hpp"
#include "oracles.hpp"

using namespace fluid;

TEST(Trajectory, WorkedExamples) {
  const auto t1 = loss_product_trajectory(100, {0.70, 0.14});
  EXPECT_NEAR(t1.product(1), 0.70, 1e-12);
  EXPECT_NEAR(t1.product(2), 0.098, 1e-12);
  EXPECT_NEAR(t1.loss(1), 70, 1e-12);
  EXPECT_NEAR(t1.loss(2), 9.8, 1e-12);
  EXPECT_EQ(fluid_delivery_round(t1, 0.10), 2U);
  EXPECT_FALSE(fluid_delivery_round(t1, 0.0));
  EXPECT_FALSE(arq_delivery_round(t1));

  const auto t3 = loss_product_trajectory(100, {0.90, 0.40, 0.25});
  EXPECT_NEAR(t3.product(3), 0.09, 1e-12);
  EXPECT_EQ(fluid_delivery_round(t3, 0.10), 3U);

  EXPECT_EQ(fluid_delivery_round(loss_product_trajectory(100, {0.06}), 0.10), 1U);
  EXPECT_EQ(fluid_delivery_round(loss_product_trajectory(100, {0.30, 0.30}), 0.10), 2U);
}

TEST(Trajectory, EmptyTraceStartsAtN) {
  const auto t = loss_product_trajectory(1000, {});
  EXPECT_EQ(t.rounds(), 0U);
  EXPECT_EQ(t.product(0), 1.0);
  EXPECT_EQ(t.loss(0), 1000.0);
  EXPECT_FALSE(fluid_delivery_round(t, 0.1));
}

TEST(Trajectory, Errors) {
  EXPECT_THROW(loss_product_trajectory(100, {0.5, 1.01}), InvalidParameter);
  EXPECT_THROW(loss_product_trajectory(100, {-0.1}), InvalidParameter);
  EXPECT_THROW(loss_product_trajectory(0, {0.1}), InvalidParameter);
}

TEST(Trajectory, ArqNeedsAZeroRound) {
  EXPECT_EQ(arq_delivery_round(loss_product_trajectory(10, {0.5, 0.0})), 2U);
  EXPECT_EQ(arq_delivery_round(loss_product_trajectory(10, {0.0, 0.7})), 1U);
  EXPECT_FALSE(arq_delivery_round(loss_product_trajectory(10, {0.06})));
}

TEST(Trajectory, ExactSlackThreshold) {
  // K = 91 in N = 100 leaves S/N = 0.09; pi = 0.095 passes epsilon = 0.10 only.
  const auto t = loss_product_trajectory(100, {0.095});
  EXPECT_EQ(fluid_delivery_round(t, 0.10), 1U);
  EXPECT_FALSE(fluid_delivery_round(t, 0.10, 0.09));
}

TEST(Binomial, Examples) {
  EXPECT_EQ(binomial_tail(100, 1.0, 100), 1.0);
  EXPECT_NEAR(binomial_tail(100, 0.999, 100), std::pow(0.999, 100), 1e-14);
  EXPECT_NEAR(binomial_tail(100, 0.9, 90), 0.58315551, 1e-8);
  EXPECT_EQ(binomial_tail(10, 0.3, 0), 1.0);
  std::string note;
  EXPECT_EQ(binomial_tail(10, 0.3, 11, &note), 0.0);
  EXPECT_NE(note.find("exceeds"), std::string::npos);
  EXPECT_THROW(binomial_tail(10, 1.5, 3), InvalidParameter);
}

TEST(Binomial, MatchesRegularizedIncompleteBeta) {
  // Pr(Bin(n, q) >= m) = I_q(m, n - m + 1).
  for (std::uint32_t n : {1U, 2U, 7U, 30U, 100U, 1000U, 10000U}) {
    for (double q : {1e-6, 0.001, 0.05, 0.3, 0.5, 0.75, 0.9, 0.999, 1 - 1e-7}) {
      for (double frac : {0.0, 0.1, 0.5, 0.9, 0.97, 1.0}) {
        const auto m = static_cast<std::uint32_t>(std::max(1.0, std::round(frac * n)));
        const double expect = boost::math::ibeta(static_cast<double>(m), static_cast<double>(n - m + 1), q);
        const double got = binomial_tail(n, q, m);
        ASSERT_NEAR(got, expect, 1e-12) << "n=" << n << " q=" << q << " m=" << m;
        if (expect > 1e-250) {
          ASSERT_NEAR(got / expect, 1.0, 1e-9) << "n=" << n << " q=" << q << " m=" << m;
        }
      }
    }
  }
}

TEST(RoundDistribution, TableRows) {
  const auto fluid10 = round_distribution(100, 90, 0.10, 9);
  EXPECT_NEAR(fluid10.at(1), 0.5832, 5e-5);
  EXPECT_NEAR(fluid10.at(2), 0.4168, 5e-5);
  const auto arq2 = round_distribution(100, 100, 0.02, 9);
  EXPECT_NEAR(arq2.at(1), 0.1326, 5e-5);
  EXPECT_NEAR(arq2.at(2), 0.8282, 5e-5);
  EXPECT_NEAR(arq2.at(3), 0.0384, 5e-5);
  EXPECT_NEAR(arq2.at(4), 0.0008, 5e-5);
  const auto fluid50 = round_distribution(100, 90, 0.50, 9);
  EXPECT_NEAR(fluid50.at(3), 0.2809, 5e-5);
  EXPECT_NEAR(fluid50.at(4), 0.6710, 5e-5);
  EXPECT_NEAR(fluid50.at(5), 0.0477, 5e-5);
}

TEST(RoundDistribution, Degenerate) {
  const auto lossless = round_distribution(37, 1, 0.0, 4);
  EXPECT_EQ(lossless.at(1), 1.0);
  EXPECT_EQ(lossless.tail, 0.0);
  const auto dead = round_distribution(10, 3, 1.0, 5);
  for (std::uint32_t r = 1; r <= 5; ++r) EXPECT_EQ(dead.at(r), 0.0);
  EXPECT_EQ(dead.tail, 1.0);
  EXPECT_THROW(round_distribution(10, 0, 0.1, 5), InvalidParameter);
  EXPECT_THROW(round_distribution(10, 11, 0.1, 5), InvalidParameter);
  EXPECT_THROW(round_distribution(10, 5, -0.1, 5), InvalidParameter);
  EXPECT_THROW(round_distribution(10, 5, 0.1, 0), InvalidParameter);
}

TEST(RoundDistribution, NormalizedOverGrid) {
  for (std::uint32_t n : {1U, 2U, 5U, 13U, 100U, 400U, 1000U}) {
    for (std::uint32_t m : {1U, (n + 1) / 2, static_cast<std::uint32_t>(std::ceil(0.9 * n)), n}) {
      for (int i = 0; i <= 100; ++i) {
        const double p = i / 100.0;
        const auto d = round_distribution(n, m, p, 12);
        ASSERT_NEAR(d.total(), 1.0, 1e-12);
        for (double e : d.rounds) ASSERT_GE(e, 0.0);
        ASSERT_GE(d.tail, 0.0);
      }
    }
  }
}

TEST(RoundDistribution, ThresholdMonotonicity) {
  const std::uint32_t n = 60;
  for (double p : {0.05, 0.2, 0.5, 0.8}) {
    std::vector<double> previous(10, 1.0);
    for (std::uint32_t m = 1; m <= n; ++m) {
      const auto d = round_distribution(n, m, p, 10);
      double cdf = 0.0;
      for (std::uint32_t l = 1; l <= 10; ++l) {
        cdf += d.at(l);
        ASSERT_LE(cdf, previous[l - 1] + 1e-12) << "M=" << m << " l=" << l << " p=" << p;
        previous[l - 1] = cdf;
      }
    }
  }
}

TEST(RoundDistribution, MatchesEnumerationSmallN) {
  for (unsigned n : {1U, 3U, 6U}) {
    for (double p : {0.1, 0.5}) {
      for (unsigned m : {1U, n}) {
        const auto brute = oracle::enumerate_rounds(n, m, p, 5);
        const auto d = round_distribution(n, m, p, 5);
        for (unsigned l = 1; l <= 5; ++l) ASSERT_NEAR(d.at(l), brute[l - 1], 1e-12);
        ASSERT_NEAR(d.tail, brute[5], 1e-12);
      }
    }
  }
}

TEST(Latency, Bounds) {
  const auto b = latency_bounds(1.0, 50.0, 2, 90, 100);
  EXPECT_DOUBLE_EQ(b.upper, 101.0);
  EXPECT_DOUBLE_EQ(b.lower, 0.9);
  const auto z = latency_bounds(2.0, 0.0, 5, 90, 100);
  EXPECT_DOUBLE_EQ(z.upper, 2.0);
  EXPECT_DOUBLE_EQ(z.lower, 1.8);
  EXPECT_DOUBLE_EQ(latency_bounds(3.0, 1.0, 1, 7, 7).lower, 3.0);
  EXPECT_THROW(latency_bounds(1, 1, 0, 1, 1), InvalidParameter);
  EXPECT_THROW(latency_bounds(1, 1, 1, 5, 4), InvalidParameter);
  EXPECT_THROW(latency_bounds(-1, 1, 1, 1, 1), InvalidParameter);
}

TEST(Bounds, SweepHolds) {
  for (double eps : {0.0, 0.01, 0.05, 0.10, 0.5}) {
    for (std::uint32_t k = 1; k <= 1000; ++k) {
      const auto e = efficiency_bound(k, eps);
      const auto c = cost_ratio(k, eps);
      ASSERT_GE(e.actual, e.bound) << k << " " << eps;
      ASSERT_LE(c.actual, c.bound) << k << " " << eps;
    }
  }
}
