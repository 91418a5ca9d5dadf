#pragma once

// Misbehaving stations that inflate the RTS duration field.
//
//   inflate: normal contention, RTS with the claimed duration, short DATA.
//   chain:   like inflate, but re-reserves right after each exchange so the
//            medium stays held.
//   flood:   periodic inflated RTS frames, never followed by DATA.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "rrdsim/frames.hpp"

namespace rrdsim {

enum class AttackMode : std::uint8_t { Inflate, Chain, Flood };

inline const char* to_string(AttackMode m) {
  switch (m) {
    case AttackMode::Inflate: return "inflate";
    case AttackMode::Chain: return "chain";
    case AttackMode::Flood: return "flood";
  }
  return "?";
}

struct AttackProfile {
  AttackMode mode = AttackMode::Inflate;
  Micros claimed_duration_us = kMaxDurationUs;
  std::int64_t actual_payload_bits = 8192;
  Micros chain_gap_us = 0;
  Micros flood_interval_us = 10'000;
  MacAddress flood_target = MacAddress(0);
  std::optional<Micros> data_duration_override_us;
  /// Mean payload inter-arrival for inflate mode; unset means the scenario's traffic law.
  std::optional<double> mean_interarrival_ms;

  void validate() const {
    if (claimed_duration_us < 0 || claimed_duration_us > kMaxDurationUs) {
      throw std::invalid_argument("attack.claimed_duration_us = " + std::to_string(claimed_duration_us) +
                                  " exceeds the 32767 us duration-field ceiling");
    }
    if (actual_payload_bits < 0) throw std::invalid_argument("attack.actual_payload_bits must be >= 0");
    if (chain_gap_us < 0) throw std::invalid_argument("attack.chain_gap_us must be >= 0");
    if (flood_interval_us <= 0) throw std::invalid_argument("attack.flood_interval_us must be > 0");
    if (data_duration_override_us &&
        (*data_duration_override_us < 0 || *data_duration_override_us > kMaxDurationUs)) {
      throw std::invalid_argument("attack.data_duration_override_us outside 0..32767");
    }
    if (mean_interarrival_ms && !(*mean_interarrival_ms > 0)) {
      throw std::invalid_argument("attack.mean_interarrival_ms must be > 0");
    }
  }
};

/// RTS whose duration is whatever the profile claims, independent of the payload.
inline Frame forge_rts(const AttackProfile& profile, MacAddress from, MacAddress target, const TimingConfig& timing) {
  if (profile.claimed_duration_us > kMaxDurationUs || profile.claimed_duration_us < 0) {
    throw FrameError("forged RTS duration " + std::to_string(profile.claimed_duration_us) +
                     " does not fit the 32767 us duration field");
  }
  return make_rts(from, target, profile.claimed_duration_us, timing);
}

inline Micros attacker_data_duration_us(const AttackProfile& profile, const TimingConfig& timing) {
  return profile.data_duration_override_us.value_or(data_duration_us(timing));
}

enum class AttackTrigger : std::uint8_t { PayloadReady, CtsReceived, ExchangeComplete, FloodTick };

struct AttackAction {
  enum class Kind : std::uint8_t { Contend, SendRts, SendData, Idle } kind = Kind::Idle;
  SimTime send_at = 0;
  std::int64_t payload_bits = 0;
  Micros duration_us = 0;
  /// Next flood tick, when the action re-arms the flood timer.
  std::optional<SimTime> next_tick;
};

inline AttackAction make_action(AttackAction::Kind kind, SimTime at, std::int64_t bits = 0, Micros duration = 0) {
  AttackAction a;
  a.kind = kind;
  a.send_at = at;
  a.payload_bits = bits;
  a.duration_us = duration;
  return a;
}

/// Decides what the attacker does next given the event that just happened.
inline AttackAction attacker_next_action(const AttackProfile& profile, AttackTrigger trigger, SimTime at,
                                         const TimingConfig& timing) {
  using Kind = AttackAction::Kind;
  switch (profile.mode) {
    case AttackMode::Inflate:
    case AttackMode::Chain:
      switch (trigger) {
        case AttackTrigger::PayloadReady:
          return make_action(Kind::Contend, at);
        case AttackTrigger::CtsReceived:
          return make_action(Kind::SendData, at + timing.sifs_us, profile.actual_payload_bits,
                             attacker_data_duration_us(profile, timing));
        case AttackTrigger::ExchangeComplete:
          if (profile.mode == AttackMode::Chain) {
            return make_action(Kind::SendRts, at + timing.sifs_us + profile.chain_gap_us, 0, profile.claimed_duration_us);
          }
          return make_action(Kind::Contend, at);
        case AttackTrigger::FloodTick:
          return make_action(Kind::Idle, at);
      }
      break;
    case AttackMode::Flood:
      if (trigger == AttackTrigger::FloodTick) {
        AttackAction a = make_action(Kind::SendRts, at, 0, profile.claimed_duration_us);
        a.next_tick = at + profile.flood_interval_us;
        return a;
      }
      return make_action(Kind::Idle, at);
  }
  return make_action(Kind::Idle, at);
}

}  // namespace rrdsim
