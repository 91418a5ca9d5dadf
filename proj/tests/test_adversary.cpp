#include <gtest/gtest.h>

#include "rig.hpp"

using namespace rrdsim;
using rrdsim::testing::Rig;

TEST(Forge, MaximalClaimFits) {
  const TimingConfig t;
  AttackProfile p;
  const Frame rts = forge_rts(p, MacAddress(3), MacAddress(0), t);
  EXPECT_EQ(rts.duration_us, 32767);
  EXPECT_EQ(rts.addr2, MacAddress(3));
}

TEST(Forge, ClaimAboveFieldCeilingRejected) {
  const TimingConfig t;
  AttackProfile p;
  p.claimed_duration_us = 40000;
  EXPECT_THROW(forge_rts(p, MacAddress(3), MacAddress(0), t), FrameError);
  try {
    p.validate();
    FAIL() << "validate accepted 40000";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("32767"), std::string::npos);
  }
}

TEST(Forge, DataDurationOverride) {
  const TimingConfig t;
  AttackProfile p;
  EXPECT_EQ(attacker_data_duration_us(p, t), 122);
  p.data_duration_override_us = 5000;
  EXPECT_EQ(attacker_data_duration_us(p, t), 5000);
}

TEST(Policy, InflateContendsAndSendsShortData) {
  const TimingConfig t;
  AttackProfile p;
  EXPECT_EQ(attacker_next_action(p, AttackTrigger::PayloadReady, 100, t).kind, AttackAction::Kind::Contend);
  const auto d = attacker_next_action(p, AttackTrigger::CtsReceived, 100, t);
  EXPECT_EQ(d.kind, AttackAction::Kind::SendData);
  EXPECT_EQ(d.send_at, 110);
  EXPECT_EQ(d.payload_bits, 8192);
  EXPECT_EQ(d.duration_us, 122);
  EXPECT_EQ(attacker_next_action(p, AttackTrigger::ExchangeComplete, 100, t).kind, AttackAction::Kind::Contend);
}

TEST(Policy, ChainReReservesAfterSifsPlusGap) {
  const TimingConfig t;
  AttackProfile p;
  p.mode = AttackMode::Chain;
  p.chain_gap_us = 40;
  const auto a = attacker_next_action(p, AttackTrigger::ExchangeComplete, 1000, t);
  EXPECT_EQ(a.kind, AttackAction::Kind::SendRts);
  EXPECT_EQ(a.send_at, 1050);
  EXPECT_EQ(a.duration_us, 32767);
}

TEST(Policy, FloodTicksPeriodically) {
  const TimingConfig t;
  AttackProfile p;
  p.mode = AttackMode::Flood;
  const auto a = attacker_next_action(p, AttackTrigger::FloodTick, 500, t);
  EXPECT_EQ(a.kind, AttackAction::Kind::SendRts);
  ASSERT_TRUE(a.next_tick.has_value());
  EXPECT_EQ(*a.next_tick, 10'500);
  EXPECT_EQ(attacker_next_action(p, AttackTrigger::CtsReceived, 500, t).kind, AttackAction::Kind::Idle);
}

TEST(Attack, UndefendedInflateReservesFullClaimAtBystander) {
  DetectorConfig off;
  AttackProfile p;
  Rig rig(3, off, {std::nullopt, std::nullopt, p});
  rig.node(2).enqueue_payload(MacAddress(0), 8192, 0);
  rig.scheduler.run_until(100'000);
  // The bystander (node 1) overhears the forged RTS and defers for the full claim.
  const auto rts = rig.trace(TraceKind::TxStart, 2);
  ASSERT_FALSE(rts.empty());
  EXPECT_EQ(rts.front().frame_kind, FrameKind::Rts);
  EXPECT_EQ(rts.front().value, 32767);
  const auto nav = rig.trace(TraceKind::NavAdvance, 1);
  ASSERT_FALSE(nav.empty());
  EXPECT_EQ(nav.front().value, rts.front().at + 160 + 32767);
  EXPECT_EQ(rig.ledger.node(2).delivered_packets, 1);
  EXPECT_GT(rig.ledger.attacker_hold_us(), 32767 - 200);
}

TEST(Attack, FloodNeverProducesAVerdict) {
  DetectorConfig cfg;
  cfg.mode = DefenseMode::Phase2;
  AttackProfile p;
  p.mode = AttackMode::Flood;
  Rig rig(3, cfg, {std::nullopt, std::nullopt, p});
  rig.node(2).start_flood(0);
  rig.scheduler.run_until(seconds_to_simtime(1.0));
  EXPECT_GT(rig.trace(TraceKind::TxStart, 2).size(), 10u);
  EXPECT_TRUE(rig.ledger.verdicts().empty());
  EXPECT_EQ(rig.ledger.notices_sent(), 0);
  // The AP keeps answering with CTS, so the flood is not filtered.
  EXPECT_FALSE(rig.trace(TraceKind::TxStart, 0).empty());
}

TEST(Attack, ChainHoldsTheMediumWithoutContention) {
  DetectorConfig off;
  AttackProfile p;
  p.mode = AttackMode::Chain;
  Rig rig(3, off, {std::nullopt, std::nullopt, p});
  rig.node(2).set_saturated(MacAddress(0), 8192, 0);
  rig.node(1).enqueue_payload(MacAddress(0), 8192, 0);
  rig.scheduler.run_until(seconds_to_simtime(2.0));
  const auto tx = rig.trace(TraceKind::TxStart, 2);
  int follow_ups = 0;
  for (const auto& r : tx)
    if (r.frame_kind == FrameKind::Rts && !r.via_contention) ++follow_ups;
  EXPECT_GT(follow_ups, 10);
  // At most the honest station's first contention win gets through; the chain holds the rest.
  EXPECT_LE(rig.ledger.node(1).delivered_packets, 1);
}
