#include <gtest/gtest.h>

#include <random>

#include "rrdsim/defense.hpp"

using namespace rrdsim;

namespace {

DetectorConfig detector(DetectorVariant v = DetectorVariant::Basic, DefenseMode m = DefenseMode::DetectOnly,
                        Micros slack = 0) {
  DetectorConfig c;
  c.variant = v;
  c.mode = m;
  c.slack_us = slack;
  return c;
}

}  // namespace

TEST(BasicDetector, HonestReservationIsClean) {
  const TimingConfig t;
  const auto v = detect_basic(8718, 8192, detector(), t);
  EXPECT_FALSE(v.malicious);
  EXPECT_EQ(v.measured_excess_us, 0);
}

TEST(BasicDetector, MaximalInflationOfOneKilobyte) {
  const TimingConfig t;
  const auto v = detect_basic(32767, 8192, detector(), t);
  EXPECT_TRUE(v.malicious);
  // 32767 - 30 - 112 - 112 - 8464
  EXPECT_EQ(v.measured_excess_us, 24049);
}

TEST(BasicDetector, OneMicrosecondOverIsFlagged) {
  const TimingConfig t;
  const auto v = detect_basic(8719, 8192, detector(), t);
  EXPECT_TRUE(v.malicious);
  EXPECT_EQ(v.measured_excess_us, 1);
}

TEST(BasicDetector, SlackIsStrict) {
  const TimingConfig t;
  EXPECT_FALSE(detect_basic(8723, 8192, detector(DetectorVariant::Basic, DefenseMode::DetectOnly, 5), t).malicious);
  EXPECT_TRUE(detect_basic(8724, 8192, detector(DetectorVariant::Basic, DefenseMode::DetectOnly, 5), t).malicious);
}

TEST(BasicDetector, UnderclaimIsNegativeExcessNotMalicious) {
  const TimingConfig t;
  const auto v = detect_basic(8000, 8192, detector(), t);
  EXPECT_FALSE(v.malicious);
  EXPECT_EQ(v.measured_excess_us, -718);
}

TEST(ImprovedDetector, ExpectedAirtimeFromCts) {
  const TimingConfig t;
  EXPECT_EQ(expected_data_airtime_us(8596, t), 8464);
  EXPECT_EQ(expected_data_airtime_us(32645, t), 32513);
}

TEST(ImprovedDetector, MatchesBasicOnWorkedExamples) {
  const TimingConfig t;
  for (Micros rts : {8718, 8719, 32767}) {
    const Frame data = make_data(MacAddress(2), MacAddress(0), 8192, 122, t);
    const auto improved =
        detect_improved(expected_data_airtime_us(cts_duration_us(rts, t), t), data, detector(DetectorVariant::Improved), t);
    const auto basic = detect_basic(rts, 8192, detector(), t);
    EXPECT_EQ(improved.malicious, basic.malicious) << rts;
    EXPECT_EQ(improved.measured_excess_us, basic.measured_excess_us) << rts;
  }
}

TEST(Detectors, AgreeOnRandomReservations) {
  const TimingConfig t;
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<std::int64_t> payload(0, 32241);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t p = payload(gen);
    const Micros honest = rts_duration_us(p, t);
    std::uniform_int_distribution<Micros> claim(honest, kMaxDurationUs);
    const Micros rts = claim(gen);
    const Frame data = make_data(MacAddress(2), MacAddress(0), p, 122, t);
    const auto b = detect_basic(rts, p, detector(), t);
    const auto m = detect_improved(expected_data_airtime_us(cts_duration_us(rts, t), t), data,
                                   detector(DetectorVariant::Improved), t);
    ASSERT_EQ(b.measured_excess_us, rts - honest);
    ASSERT_EQ(m.measured_excess_us, rts - honest);
    ASSERT_EQ(b.malicious, rts > honest);
    ASSERT_EQ(m.malicious, rts > honest);
  }
}

TEST(Filter, OnlyPreventionModesFilter) {
  const TimingConfig t;
  Blacklist bl{MacAddress(5)};
  const Frame from_bad = make_rts(MacAddress(5), MacAddress(0), 100, t);
  const Frame from_good = make_rts(MacAddress(4), MacAddress(0), 100, t);
  EXPECT_EQ(filter_rts(bl, detector(DetectorVariant::Basic, DefenseMode::Phase1), from_bad), RtsDecision::Ignore);
  EXPECT_EQ(filter_rts(bl, detector(DetectorVariant::Basic, DefenseMode::Phase2), from_bad), RtsDecision::Ignore);
  EXPECT_EQ(filter_rts(bl, detector(DetectorVariant::Basic, DefenseMode::Phase1), from_good), RtsDecision::Respond);
  EXPECT_EQ(filter_rts(bl, detector(DetectorVariant::Basic, DefenseMode::DetectOnly), from_bad), RtsDecision::Respond);
  EXPECT_EQ(filter_rts(bl, detector(DetectorVariant::Basic, DefenseMode::Off), from_bad), RtsDecision::Respond);
}

TEST(Notice, BroadcastAckNamingTheAttacker) {
  const TimingConfig t;
  const Frame n = make_blacklist_notice(MacAddress(0), MacAddress(7), t);
  EXPECT_EQ(n.kind, FrameKind::Ack);
  EXPECT_TRUE(n.addr1.is_broadcast());
  EXPECT_EQ(n.addr2, MacAddress(0));
  EXPECT_EQ(n.addr3, MacAddress(7));
  EXPECT_EQ(n.total_bits(), 112);
  EXPECT_TRUE(n.is_blacklist_notice());
  EXPECT_THROW(make_blacklist_notice(MacAddress(0), MacAddress::broadcast(), t), FrameError);
}

TEST(Actions, PerMode) {
  Verdict bad{1, true, 100};
  Verdict good{1, false, 0};
  EXPECT_EQ(action_for(bad, DefenseMode::Off), VerdictAction::None);
  EXPECT_EQ(action_for(bad, DefenseMode::DetectOnly), VerdictAction::Logged);
  EXPECT_EQ(action_for(bad, DefenseMode::Phase1), VerdictAction::Blacklisted);
  EXPECT_EQ(action_for(bad, DefenseMode::Phase2), VerdictAction::NoticeSent);
  EXPECT_EQ(action_for(good, DefenseMode::Phase2), VerdictAction::None);
}

TEST(DetectorConfig, SlackMustStayBelowOneSlot) {
  const TimingConfig t;
  EXPECT_NO_THROW(detector(DetectorVariant::Basic, DefenseMode::Phase2, 19).validate(t));
  EXPECT_THROW(detector(DetectorVariant::Basic, DefenseMode::Phase2, 20).validate(t), std::invalid_argument);
  EXPECT_THROW(detector(DetectorVariant::Basic, DefenseMode::Phase2, -1).validate(t), std::invalid_argument);
}
