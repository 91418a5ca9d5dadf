#include <gtest/gtest.h>

#include "rig.hpp"

using namespace rrdsim;
using rrdsim::testing::small_scenario;

TEST(Layout, IndicesAndStreamKeys) {
  auto cfg = small_scenario(4, {AttackProfile{}});
  EXPECT_EQ(cfg.total_nodes(), 6);
  EXPECT_EQ(cfg.first_attacker(), 5);
  EXPECT_EQ(stream_key(cfg, 0), 0u);
  EXPECT_EQ(stream_key(cfg, 4), 4u);
  EXPECT_EQ(stream_key(cfg, 5), 10000u);
  Simulation sim(cfg);
  EXPECT_EQ(sim.node_count(), 6);
  EXPECT_TRUE(sim.entity(5).is_attacker());
  EXPECT_FALSE(sim.entity(4).is_attacker());
  EXPECT_EQ(sim.attacker_addresses(), (std::set<MacAddress>{MacAddress(5)}));
}

TEST(Layout, StationPositionsStableWhenDensityGrows) {
  auto a = small_scenario(5, {AttackProfile{}});
  auto b = small_scenario(6, {AttackProfile{}});
  const auto pa = scenario_positions(a);
  const auto pb = scenario_positions(b);
  for (int i = 0; i <= 5; ++i) EXPECT_EQ(pa[static_cast<std::size_t>(i)], pb[static_cast<std::size_t>(i)]);
  EXPECT_EQ(pa.back(), pb.back());  // attacker keyed by role, not index
}

TEST(Layout, ExplicitPositionsMustMatchNodeCount) {
  auto cfg = small_scenario(2);
  cfg.positions = {{0, 0}, {10, 0}};
  EXPECT_THROW(Simulation{cfg}, std::invalid_argument);
  cfg.positions.push_back({20, 0});
  EXPECT_NO_THROW(Simulation{cfg});
}

TEST(Layout, SplitDomainRejectedUnlessAllowed) {
  auto cfg = small_scenario(2);
  cfg.phy.sensitivity_dbm = -40.0;  // 10 m range
  cfg.phy.carrier_sense_dbm = -40.0;
  cfg.positions = {{0, 0}, {5, 0}, {100, 0}};
  EXPECT_THROW(Simulation{cfg}, std::invalid_argument);
  cfg.expect_single_collision_domain = false;
  EXPECT_NO_THROW(Simulation{cfg});
}

TEST(Saturation, SinglePairMatchesClosedForm) {
  auto cfg = small_scenario(1, {}, 100.0);
  cfg.traffic.law = TrafficConfig::Law::Saturation;
  Simulation sim(cfg);
  const auto l = sim.run();
  // Mean cycle: DIFS + E[backoff] of 15.5 slots + exchange of 8878 us.
  const double cycle = 50.0 + 15.5 * 20.0 + 8878.0;
  const double expected = 8192.0 * 1e6 / cycle;
  EXPECT_NEAR(throughput_bps(l, cfg.run_seconds), expected, 0.02 * expected);
}

TEST(Saturation, ManyStationsStayBelowZeroBackoffBound) {
  auto cfg = small_scenario(25, {}, 20.0);
  cfg.traffic.law = TrafficConfig::Law::Saturation;
  Simulation sim(cfg);
  const auto l = sim.run();
  const double bound = 8192.0 * 1e6 / (50.0 + 8878.0);
  const double thr = throughput_bps(l, cfg.run_seconds);
  EXPECT_LT(thr, bound);
  EXPECT_GT(thr, 0.5 * bound);
}

TEST(Determinism, SameSeedSameLedger) {
  auto cfg = small_scenario(6, {AttackProfile{}}, 5.0);
  cfg.trace = true;
  cfg.defense.mode = DefenseMode::Phase2;
  Simulation a(cfg);
  Simulation b(cfg);
  const auto la = a.run();
  const auto lb = b.run();
  EXPECT_EQ(la.trace_log(), lb.trace_log());
  EXPECT_EQ(la.delivered_payload_bits(), lb.delivered_payload_bits());
  cfg.seed = 2;
  Simulation c(cfg);
  EXPECT_NE(c.run().trace_log(), la.trace_log());
}

TEST(Run, FinalizeClipsAtEnd) {
  auto cfg = small_scenario(3, {AttackProfile{}}, 2.0);
  Simulation sim(cfg);
  const auto l = sim.run();
  EXPECT_TRUE(l.finalized());
  EXPECT_EQ(l.run_end(), 2'000'000);
  for (const auto& n : l.nodes()) EXPECT_LE(n.nav_busy_us, 2'000'000);
  EXPECT_LE(l.attacker_hold_us(), 2'000'000);
}

TEST(Defense, Phase2RestoresHonestThroughput) {
  auto base = small_scenario(5, {AttackProfile{}}, 60.0);
  base.traffic.mean_interarrival_ms = 50;
  auto clean = base;
  clean.attackers.clear();
  auto undefended = base;
  auto phase2 = base;
  phase2.defense.mode = DefenseMode::Phase2;
  Simulation s0(clean), s1(undefended), s2(phase2);
  const double t0 = throughput_bps(s0.run(), 60.0);
  const double t1 = throughput_bps(s1.run(), 60.0);
  const double t2 = throughput_bps(s2.run(), 60.0);
  EXPECT_LT(t1, 0.9 * t0);
  EXPECT_GT(t2, 0.95 * t0);
}

TEST(Defense, FirstDetectionAtEndOfAttackerData) {
  auto cfg = small_scenario(4, {AttackProfile{}}, 5.0);
  for (auto variant : {DetectorVariant::Basic, DetectorVariant::Improved}) {
    cfg.defense.mode = DefenseMode::DetectOnly;
    cfg.defense.variant = variant;
    Simulation sim(cfg);
    const auto l = sim.run();
    ASSERT_TRUE(l.first_detection().has_value());
    EXPECT_EQ(l.first_detection(), l.attacker_first_data_end());
    EXPECT_EQ(l.variant_disagreements(), 0);
    EXPECT_EQ(l.false_positives(), 0);
  }
}

TEST(Defense, FloodIsInvisibleToTheDetector) {
  AttackProfile flood;
  flood.mode = AttackMode::Flood;
  auto cfg = small_scenario(4, {flood}, 5.0);
  cfg.defense.mode = DefenseMode::Phase2;
  Simulation sim(cfg);
  const auto l = sim.run();
  const auto d = detection_counts(l, sim.attacker_addresses());
  ASSERT_TRUE(d.tpr.has_value());
  EXPECT_EQ(*d.tpr, 0.0);
  EXPECT_FALSE(d.time_to_first_detection.has_value());
  EXPECT_GT(l.attacker_hold_us(), 0);
}

TEST(Defense, HonestOnlyRunHasZeroFalsePositiveRate) {
  auto cfg = small_scenario(5, {}, 10.0);
  cfg.defense.mode = DefenseMode::DetectOnly;
  Simulation sim(cfg);
  const auto d = detection_counts(sim.run(), sim.attacker_addresses());
  ASSERT_TRUE(d.fpr.has_value());
  EXPECT_EQ(*d.fpr, 0.0);
  EXPECT_FALSE(d.tpr.has_value());
}
