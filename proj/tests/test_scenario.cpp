#include <gtest/gtest.h>

#include <sstream>

#include "rrdsim/scenario.hpp"

using namespace rrdsim;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Scenario, EmptyFileGivesDefaults) {
  const auto c = parse_scenario_text("");
  const ScenarioConfig d;
  EXPECT_EQ(scenario_to_ini(c), scenario_to_ini(d));
  EXPECT_EQ(c.node_count, 25);
  EXPECT_EQ(c.run_seconds, 500.0);
  EXPECT_EQ(c.mac.queue_capacity, 14u);
  EXPECT_EQ(c.traffic.payload_bits, 8192);
  EXPECT_EQ(c.attackers.size(), 1u);
}

TEST(Scenario, OverridesAreApplied) {
  const auto c = parse_scenario_text(R"(
; comment
[run]
node_count = 10
seed = 99
[traffic]
law = saturation
payload_bytes = 512
[defense]
mode = phase2
variant = improved
[attack]
count = 2
mode = chain
claimed_duration_us = 20000
[metrics]
nav_window_s = 5 10
)");
  EXPECT_EQ(c.node_count, 10);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.traffic.law, TrafficConfig::Law::Saturation);
  EXPECT_EQ(c.traffic.payload_bits, 4096);
  EXPECT_EQ(c.defense.mode, DefenseMode::Phase2);
  EXPECT_EQ(c.defense.variant, DetectorVariant::Improved);
  ASSERT_EQ(c.attackers.size(), 2u);
  for (const auto& a : c.attackers) {
    EXPECT_EQ(a.mode, AttackMode::Chain);
    EXPECT_EQ(a.claimed_duration_us, 20000);
  }
  ASSERT_TRUE(c.nav_window_s.has_value());
  EXPECT_EQ(c.nav_window_s->first, 5.0);
  EXPECT_EQ(c.nav_window_s->second, 10.0);
}

TEST(Scenario, DensityOutsideRangeNeedsOverride) {
  const auto err = error_of("[run]\nnode_count = 30\n");
  EXPECT_NE(err.find("run.node_count"), std::string::npos) << err;
  EXPECT_NO_THROW(parse_scenario_text("[run]\nnode_count = 30\nallow_density_override = true\n"));
}

TEST(Scenario, ClaimAboveCeilingRejected) {
  const auto err = error_of("[attack]\nclaimed_duration_us = 40000\n");
  EXPECT_NE(err.find("attack.claimed_duration_us"), std::string::npos) << err;
  EXPECT_NE(err.find("32767"), std::string::npos) << err;
}

TEST(Scenario, UnknownKeyNamed) {
  const auto err = error_of("[timing]\nsifs = 10\n");
  EXPECT_NE(err.find("timing.sifs"), std::string::npos) << err;
  EXPECT_NE(error_of("[nonsense]\nx = 1\n").find("nonsense.x"), std::string::npos);
}

TEST(Scenario, BadValuesNamed) {
  EXPECT_NE(error_of("[run]\nseed = abc\n").find("run.seed"), std::string::npos);
  EXPECT_NE(error_of("[defense]\nmode = maybe\n").find("defense.mode"), std::string::npos);
  EXPECT_NE(error_of("[traffic]\nlaw = bursty\n").find("traffic.law"), std::string::npos);
  EXPECT_NE(error_of("[run]\nallow_density_override = perhaps\n").find("run.allow_density_override"),
            std::string::npos);
  EXPECT_NE(error_of("[defense]\nslack_us = 20\n").find("slack"), std::string::npos);
}

TEST(Scenario, SyntaxErrorCarriesLine) {
  try {
    parse_scenario_text("[run]\nnode_count = 5\n[broken\n");
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.kind(), ScenarioError::Kind::Parse);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Scenario, DuplicateKeyRejected) {
  EXPECT_THROW(parse_scenario_text("[run]\nseed = 1\nseed = 2\n"), ScenarioError);
}

TEST(Scenario, MissingFile) {
  try {
    load_scenario("/nonexistent/rrdsim.ini");
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.kind(), ScenarioError::Kind::MissingFile);
  }
}

TEST(Scenario, ExplicitPositionsParsed) {
  const auto c = parse_scenario_text("[run]\nnode_count = 2\n[topology]\npositions = 0 0; 10 0; 20 5.5; 30 0\n");
  ASSERT_EQ(c.positions.size(), 4u);
  EXPECT_EQ(c.positions[2], (Position{20, 5.5}));
  EXPECT_NE(error_of("[topology]\npositions = 1 2 3\n").find("topology.positions"), std::string::npos);
}

TEST(Scenario, IniRoundTrip) {
  const auto c = parse_scenario_text(
      "[run]\nnode_count = 7\nrun_seconds = 12.5\n[attack]\ndata_duration_override_us = 900\n"
      "mean_interarrival_ms = 25\n[phy]\npath_loss_alpha = 3.5\n");
  const auto text = scenario_to_ini(c);
  const auto back = parse_scenario_text(text);
  EXPECT_EQ(scenario_to_ini(back), text);
  EXPECT_EQ(back.attackers.front().data_duration_override_us, 900);
  EXPECT_EQ(back.phy.path_loss_alpha, 3.5);
}

TEST(Banner, ListsEveryParameterWithProvenance) {
  const auto c = parse_scenario_text("[run]\nnode_count = 7\n");
  std::ostringstream os;
  print_banner(os, c);
  const auto text = os.str();
  for (const auto& p : scenario_params()) EXPECT_NE(text.find(p.name()), std::string::npos) << p.name();
  EXPECT_NE(text.find("reference setup"), std::string::npos);
  EXPECT_NE(text.find("design default"), std::string::npos);
  EXPECT_NE(text.find("scenario override (default 25)"), std::string::npos);
}
