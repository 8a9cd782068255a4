#include <gtest/gtest.h>

#include "fluid/scenario_io.hpp"

using namespace fluid;

TEST(ScenarioParse, FullFile) {
  const auto f = parse_scenario(
      "# demo\n"
      "k = 90\n"
      "epsilon = 0.10\n"
      "\n"
      "loss = rounds:0.70,0.14\n"
      "rtt = 20\n"
      "tx_interval = 0.5\n"
      "seed = 42\n"
      "mode = realistic\n"
      "extend_to_budget = true\n"
      "block_timer = 900\n"
      "feedback_interval = 2.5\n"
      "max_transmissions = 5000\n"
      "trials = 17\n"
      "protocol = both\n");
  const Scenario& s = f.scenario;
  EXPECT_EQ(s.spec.k, 90U);
  EXPECT_EQ(s.spec.n, 100U);
  EXPECT_EQ(std::get<RoundFractionsLoss>(s.loss).fractions, (std::vector<double>{0.70, 0.14}));
  EXPECT_EQ(s.rtt, 20.0);
  EXPECT_EQ(s.packet_tx_interval, 0.5);
  EXPECT_EQ(s.seed, 42U);
  EXPECT_EQ(s.mode, SimMode::realistic);
  EXPECT_TRUE(s.extend_to_budget);
  EXPECT_EQ(s.block_timer, 900.0);
  EXPECT_EQ(s.feedback_interval, 2.5);
  EXPECT_EQ(s.max_transmissions, 5000U);
  EXPECT_EQ(f.trials, 17U);
  EXPECT_EQ(f.protocol, ProtocolChoice::both);
}

TEST(ScenarioParse, FormatRoundTrips) {
  const auto f = parse_scenario("n = 120\nlambda = 1.25\nloss = ge:0.01,0.5,0.05,0.3\nblock_id = 3\ntrials = 5\n");
  EXPECT_EQ(f.scenario.spec.n, 120U);
  EXPECT_EQ(f.scenario.spec.k, 96U);
  const auto again = parse_scenario(format_scenario(f));
  EXPECT_EQ(again.scenario.spec, f.scenario.spec);
  EXPECT_EQ(again.scenario.loss, f.scenario.loss);
  EXPECT_EQ(again.trials, f.trials);
  EXPECT_EQ(format_scenario(again), format_scenario(f));
}

TEST(ScenarioParse, Defaults) {
  const auto f = parse_scenario("");
  EXPECT_EQ(f.scenario.spec.n, 100U);
  EXPECT_EQ(f.scenario.spec.k, 90U);
  EXPECT_FALSE(f.trials);
  EXPECT_FALSE(f.protocol);
}

TEST(ResolveBlockSpec, Combinations) {
  EXPECT_EQ(resolve_block_spec(100, 90, std::nullopt).s, 10U);
  EXPECT_EQ(resolve_block_spec(std::nullopt, 90, 0.10).n, 100U);
  EXPECT_EQ(resolve_block_spec(100, std::nullopt, 0.05).k, 95U);
  EXPECT_EQ(resolve_block_spec(100, 90, 0.10).n, 100U);
  EXPECT_THROW(resolve_block_spec(101, 90, 0.10), InvalidParameter);
  EXPECT_EQ(resolve_block_spec(std::nullopt, 45, std::nullopt).n, 50U);
}

namespace {

std::size_t error_line(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(ScenarioParse, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("k = 90\n\n# c\ncolour = blue\n"), 4U);
  EXPECT_EQ(error_line("k = 90\nk = 91\n"), 2U);
  EXPECT_EQ(error_line("rtt = fast\n"), 1U);
  EXPECT_EQ(error_line("seed = 1\nno equals sign\n"), 2U);
  EXPECT_EQ(error_line("loss = bernoulli:2\n"), 1U);
  EXPECT_EQ(error_line("mode = turbo\n"), 1U);
  EXPECT_EQ(error_line("protocol = tcp\n"), 1U);
  EXPECT_EQ(error_line("epsilon = 0.1\nlambda = 2\n"), 2U);
  EXPECT_EQ(error_line("n = 50\nseed = 3\nk = 60\n"), 3U);
  EXPECT_EQ(error_line("rtt =\n"), 1U);
  EXPECT_EQ(error_line("extend_to_budget = maybe\n"), 1U);
  EXPECT_EQ(error_line("seed = 1\nrtt = -4\n"), 2U);
}

TEST(ScenarioLoad, MissingFileIsAnIoError) {
  EXPECT_THROW(load_scenario("/nonexistent/path.scn"), IoError);
}
