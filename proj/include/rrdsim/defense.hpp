#pragma once

// Re-evaluation of RTS reservations against the DATA frame that follows,
// plus the blacklist filter and the broadcast-ACK notice used for prevention.
//
// Two detector variants are provided. The basic one keeps the raw RTS duration
// and subtracts the fixed exchange overhead when DATA arrives. The improved one
// does that subtraction once, at CTS time, and stores the expected DATA airtime.
// Both arrive at the same excess, which the tests cross-check.

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>

#include "rrdsim/frames.hpp"

namespace rrdsim {

enum class DefenseMode : std::uint8_t { Off, DetectOnly, Phase1, Phase2 };
enum class DetectorVariant : std::uint8_t { Basic, Improved };

inline const char* to_string(DefenseMode m) {
  switch (m) {
    case DefenseMode::Off: return "off";
    case DefenseMode::DetectOnly: return "detect-only";
    case DefenseMode::Phase1: return "phase1";
    case DefenseMode::Phase2: return "phase2";
  }
  return "?";
}

inline const char* to_string(DetectorVariant v) { return v == DetectorVariant::Basic ? "basic" : "improved"; }

struct DetectorConfig {
  DetectorVariant variant = DetectorVariant::Basic;
  Micros slack_us = 0;
  DefenseMode mode = DefenseMode::Off;

  bool detecting() const { return mode != DefenseMode::Off; }
  bool filtering() const { return mode == DefenseMode::Phase1 || mode == DefenseMode::Phase2; }

  void validate(const TimingConfig& timing) const {
    if (slack_us < 0) throw std::invalid_argument("defense.slack_us must be >= 0");
    if (slack_us >= timing.slot_us) throw std::invalid_argument("defense.slack_us must be below one slot time");
  }
};

struct Verdict {
  std::uint64_t frame_id = 0;
  bool malicious = false;
  /// Claimed reservation minus what the DATA frame actually needed.
  Micros measured_excess_us = 0;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline Verdict make_verdict(Micros claimed_data_airtime, Micros required_data_airtime, Micros slack_us,
                            std::uint64_t frame_id) {
  const Micros excess = claimed_data_airtime - required_data_airtime;
  return Verdict{frame_id, excess > slack_us, excess};
}

/// Basic check: strip 3 SIFS, CTS and ACK from the stored RTS duration and
/// compare what remains with the airtime of the DATA frame actually received.
inline Verdict detect_basic(Micros stored_rts_duration_us, std::int64_t data_payload_bits, const DetectorConfig& cfg,
                            const TimingConfig& timing, std::uint64_t frame_id = 0) {
  const Micros claimed = stored_rts_duration_us - 3 * timing.sifs_us - airtime_us(timing.cts_bits, timing) -
                         airtime_us(timing.ack_bits, timing);
  return make_verdict(claimed, data_airtime_us(data_payload_bits, timing), cfg.slack_us, frame_id);
}

/// Value the improved detector stores when it answers an RTS. The CTS
/// reservation still contains the two SIFS gaps around DATA and ACK; both are
/// removed along with the ACK airtime.
inline Micros expected_data_airtime_us(Micros cts_duration, const TimingConfig& timing) {
  return cts_duration - airtime_us(timing.ack_bits, timing) - 2 * timing.sifs_us;
}

inline Verdict detect_improved(Micros expected_data_airtime, const Frame& data_frame, const DetectorConfig& cfg,
                               const TimingConfig& timing) {
  return make_verdict(expected_data_airtime, data_airtime_us(data_frame.payload_bits, timing), cfg.slack_us,
                      data_frame.id);
}

using Blacklist = std::set<MacAddress>;

enum class RtsDecision : std::uint8_t { Respond, Ignore };

/// Prevention phase 1: never answer an RTS from a blacklisted sender.
inline RtsDecision filter_rts(const Blacklist& blacklist, const DetectorConfig& cfg, const Frame& rts) {
  if (!cfg.filtering()) return RtsDecision::Respond;
  return blacklist.count(rts.addr2) ? RtsDecision::Ignore : RtsDecision::Respond;
}

/// Prevention phase 2 notice: an ACK to BROADCAST naming the attacker in addr3.
inline Frame make_blacklist_notice(MacAddress detector, MacAddress attacker, const TimingConfig& timing) {
  if (!attacker.is_unicast()) throw FrameError("blacklist notice must name a unicast attacker");
  Frame f{FrameKind::Ack, 0, MacAddress::broadcast(), detector, attacker, 0, timing.ack_bits};
  validate_frame(f);
  return f;
}

/// What the receiver of a flagged DATA frame does.
enum class VerdictAction : std::uint8_t { None, Logged, Blacklisted, NoticeSent };

inline const char* to_string(VerdictAction a) {
  switch (a) {
    case VerdictAction::None: return "none";
    case VerdictAction::Logged: return "logged";
    case VerdictAction::Blacklisted: return "blacklisted";
    case VerdictAction::NoticeSent: return "notice-sent";
  }
  return "?";
}

inline VerdictAction action_for(const Verdict& v, DefenseMode mode) {
  if (!v.malicious || mode == DefenseMode::Off) return VerdictAction::None;
  switch (mode) {
    case DefenseMode::DetectOnly: return VerdictAction::Logged;
    case DefenseMode::Phase1: return VerdictAction::Blacklisted;
    case DefenseMode::Phase2: return VerdictAction::NoticeSent;
    default: return VerdictAction::None;
  }
}

}  // namespace rrdsim
