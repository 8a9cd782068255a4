#include <gtest/gtest.h>

#include <numeric>

#include "fluid/loss_model.hpp"

using namespace fluid;

TEST(LossModel, ParseAndFormatRoundTrip) {
  for (const char* text : {"bernoulli:0.1", "rounds:0.7,0.14", "ge:0.01,0.5,0.05,0.3", "rounds:"}) {
    const LossModel m = parse_loss_model(text);
    EXPECT_EQ(parse_loss_model(format_loss_model(m)), m) << text;
  }
  EXPECT_EQ(std::get<RoundFractionsLoss>(parse_loss_model("rounds:0.70, 0.14")).fractions,
            (std::vector<double>{0.70, 0.14}));
  const auto ge = std::get<GilbertElliottLoss>(parse_loss_model("ge:0.01,0.5,0.05,0.3"));
  EXPECT_EQ(ge.p_good_loss, 0.01);
  EXPECT_EQ(ge.p_b2g, 0.3);
}

TEST(LossModel, ParseErrors) {
  EXPECT_THROW(parse_loss_model("0.1"), InvalidParameter);
  EXPECT_THROW(parse_loss_model("uniform:0.1"), InvalidParameter);
  EXPECT_THROW(parse_loss_model("bernoulli:1.5"), InvalidParameter);
  EXPECT_THROW(parse_loss_model("bernoulli:x"), InvalidParameter);
  EXPECT_THROW(parse_loss_model("rounds:0.5,-0.1"), InvalidParameter);
  EXPECT_THROW(parse_loss_model("ge:0.1,0.2,0.3"), InvalidParameter);
}

TEST(LossModel, RoundLossCountIsHalfUp) {
  EXPECT_EQ(round_loss_count(0.06, 100), 6U);
  EXPECT_EQ(round_loss_count(0.14, 70), 10U);  // 9.8
  EXPECT_EQ(round_loss_count(0.35, 10), 4U);   // 3.4999999999999996 in binary
  EXPECT_EQ(round_loss_count(0.25, 2), 1U);
  EXPECT_EQ(round_loss_count(0.24, 2), 0U);
  EXPECT_EQ(round_loss_count(1.0, 7), 7U);
  EXPECT_EQ(round_loss_count(0.0, 7), 0U);
}

TEST(LossRealization, BernoulliIsIndexedByTransmission) {
  LossRealization a(BernoulliLoss{0.3}, 42, 100);
  LossRealization b(BernoulliLoss{0.3}, 42, 100);
  // Query order and round tags do not matter: only seq_no does.
  std::vector<bool> forward;
  for (std::uint32_t s = 1; s <= 500; ++s) forward.push_back(a.lost(s, 1, 0));
  for (std::uint32_t s = 500; s >= 1; --s) EXPECT_EQ(b.lost(s, 7, 3), forward[s - 1]);
  const auto losses = std::count(forward.begin(), forward.end(), true);
  EXPECT_NEAR(losses, 150, 40);
}

TEST(LossRealization, BernoulliExtremes) {
  LossRealization never(BernoulliLoss{0.0}, 1, 10);
  LossRealization always(BernoulliLoss{1.0}, 1, 10);
  for (std::uint32_t s = 1; s <= 100; ++s) {
    EXPECT_FALSE(never.lost(s, 1, 0));
    EXPECT_TRUE(always.lost(s, 1, 0));
  }
}

TEST(LossRealization, RoundFractionsLoseExactCounts) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    LossRealization m(RoundFractionsLoss{{0.70, 0.14}}, seed, 100);
    std::uint32_t r1 = 0;
    for (std::uint32_t i = 0; i < 100; ++i) r1 += m.lost(i + 1, 1, i);
    ASSERT_EQ(r1, 70U);
    std::uint32_t r2 = 0;
    for (std::uint32_t i = 0; i < 70; ++i) r2 += m.lost(101 + i, 2, i);
    ASSERT_EQ(r2, 10U);
    for (std::uint32_t i = 0; i < 10; ++i) ASSERT_FALSE(m.lost(171 + i, 3, i));
  }
}

TEST(LossRealization, RoundFractionsDependOnSeed) {
  LossRealization a(RoundFractionsLoss{{0.5}}, 1, 40);
  LossRealization b(RoundFractionsLoss{{0.5}}, 2, 40);
  int differ = 0;
  for (std::uint32_t i = 0; i < 40; ++i) differ += a.lost(i + 1, 1, i) != b.lost(i + 1, 1, i);
  EXPECT_GT(differ, 0);
}

TEST(LossRealization, GilbertElliottStationaryRate) {
  // Stationary bad-state share is g2b / (g2b + b2g) = 0.05 / 0.35.
  const GilbertElliottLoss ge{0.01, 0.5, 0.05, 0.3};
  LossRealization m(ge, 9, 100);
  const std::uint32_t count = 200000;
  std::uint32_t lost = 0;
  std::uint32_t runs = 0;
  bool previous = false;
  for (std::uint32_t s = 1; s <= count; ++s) {
    const bool l = m.lost(s, 1, 0);
    lost += l;
    runs += l && !previous;
    previous = l;
  }
  const double bad = 0.05 / 0.35;
  const double expected = bad * 0.5 + (1 - bad) * 0.01;
  EXPECT_NEAR(static_cast<double>(lost) / count, expected, 0.005);
  // Bursty: mean loss run is longer than under independent loss at the same rate.
  EXPECT_GT(static_cast<double>(lost) / runs, 1.0 / (1.0 - expected));
}

TEST(LossRealization, GilbertElliottIsReproducible) {
  const GilbertElliottLoss ge{0.0, 1.0, 0.2, 0.2};
  LossRealization a(ge, 5, 10);
  LossRealization b(ge, 5, 10);
  for (std::uint32_t s = 1; s <= 300; ++s) ASSERT_EQ(a.lost(s, 1, 0), b.lost(s, 2, 9));
  // The chain starts in the good state, which never loses here.
  LossRealization c(GilbertElliottLoss{0.0, 1.0, 0.0, 1.0}, 5, 10);
  for (std::uint32_t s = 1; s <= 50; ++s) ASSERT_FALSE(c.lost(s, 1, 0));
}
