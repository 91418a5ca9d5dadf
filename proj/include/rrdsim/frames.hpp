#pragma once

// MAC frames and the duration-field arithmetic of the RTS/CTS/DATA/ACK exchange.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "rrdsim/engine.hpp"

namespace rrdsim {

/// Largest value the 802.11 duration field may carry.
inline constexpr Micros kMaxDurationUs = 32767;

class MacAddress {
 public:
  constexpr MacAddress() = default;
  constexpr explicit MacAddress(std::uint32_t value) : value_(value) {}

  static constexpr MacAddress broadcast() { return MacAddress(0xFFFFFFFFu); }
  static constexpr MacAddress none() { return MacAddress(0xFFFFFFFEu); }

  constexpr std::uint32_t value() const { return value_; }
  constexpr bool is_broadcast() const { return value_ == 0xFFFFFFFFu; }
  constexpr bool is_none() const { return value_ == 0xFFFFFFFEu; }
  constexpr bool is_unicast() const { return !is_broadcast() && !is_none(); }

  friend constexpr auto operator<=>(MacAddress, MacAddress) = default;

  std::string str() const {
    if (is_broadcast()) return "BROADCAST";
    if (is_none()) return "NONE";
    return std::to_string(value_);
  }

 private:
  std::uint32_t value_ = 0xFFFFFFFEu;
};

enum class FrameKind : std::uint8_t { Rts, Cts, Data, Ack };

inline const char* to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::Rts: return "RTS";
    case FrameKind::Cts: return "CTS";
    case FrameKind::Data: return "DATA";
    case FrameKind::Ack: return "ACK";
  }
  return "?";
}

class FrameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an honest sender's reservation would exceed the duration ceiling.
class DurationOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

struct TimingConfig {
  Micros sifs_us = 10;
  Micros difs_us = 50;
  Micros slot_us = 20;
  std::int64_t bitrate_bps = 1'000'000;
  Micros phy_preamble_us = 0;
  std::int64_t mac_header_bits = 272;
  std::int64_t rts_bits = 160;
  std::int64_t cts_bits = 112;
  std::int64_t ack_bits = 112;
  std::int64_t rts_cts_threshold_bytes = 400;

  void validate() const {
    auto positive = [](std::int64_t v, const char* key) {
      if (v <= 0) throw std::invalid_argument(std::string("timing.") + key + " must be > 0");
    };
    positive(sifs_us, "sifs_us");
    positive(difs_us, "difs_us");
    positive(slot_us, "slot_us");
    positive(bitrate_bps, "bitrate_bps");
    positive(mac_header_bits, "mac_header_bits");
    positive(rts_bits, "rts_bits");
    positive(cts_bits, "cts_bits");
    positive(ack_bits, "ack_bits");
    positive(rts_cts_threshold_bytes, "rts_cts_threshold_bytes");
    if (phy_preamble_us < 0) throw std::invalid_argument("timing.phy_preamble_us must be >= 0");
  }

  /// Idealized defaults with a 192 us long DSSS preamble added.
  static TimingConfig realistic() {
    TimingConfig cfg;
    cfg.phy_preamble_us = 192;
    return cfg;
  }

  friend bool operator==(const TimingConfig&, const TimingConfig&) = default;
};

struct Frame {
  FrameKind kind = FrameKind::Data;
  Micros duration_us = 0;
  MacAddress addr1;  // receiver
  MacAddress addr2;  // transmitter
  MacAddress addr3 = MacAddress::none();
  std::int64_t payload_bits = 0;
  std::int64_t header_bits = 0;
  std::uint64_t id = 0;  // assigned by the channel on transmission

  std::int64_t total_bits() const { return header_bits + payload_bits; }
  bool is_control() const { return kind != FrameKind::Data; }
  bool is_blacklist_notice() const {
    return kind == FrameKind::Ack && addr1.is_broadcast() && !addr3.is_none();
  }
};

/// Structural checks every frame on the wire must pass.
inline void validate_frame(const Frame& f) {
  if (f.duration_us < 0 || f.duration_us > kMaxDurationUs) {
    throw FrameError("duration field " + std::to_string(f.duration_us) + " outside 0..32767");
  }
  if (f.is_control() && f.payload_bits != 0) throw FrameError("control frame with payload");
  if (f.payload_bits < 0 || f.header_bits < 0) throw FrameError("negative frame length");
  if (!f.addr3.is_none() && !(f.kind == FrameKind::Ack && f.addr1.is_broadcast())) {
    throw FrameError("addr3 is only carried by a broadcast ACK");
  }
  if (!f.addr2.is_unicast()) throw FrameError("transmitter address must be unicast");
}

inline Micros airtime_us(std::int64_t total_bits, const TimingConfig& cfg) {
  if (total_bits < 0) throw std::invalid_argument("airtime_us: negative bit count");
  const std::int64_t scaled = total_bits * kMicrosPerSecond;
  return (scaled + cfg.bitrate_bps - 1) / cfg.bitrate_bps + cfg.phy_preamble_us;
}

inline Micros data_airtime_us(std::int64_t payload_bits, const TimingConfig& cfg) {
  return airtime_us(cfg.mac_header_bits + payload_bits, cfg);
}

/// Reservation an honest RTS announces: 3 SIFS + CTS + DATA + ACK.
inline Micros rts_duration_us(std::int64_t payload_bits, const TimingConfig& cfg) {
  if (payload_bits < 0) throw std::invalid_argument("rts_duration_us: negative payload");
  const Micros d = 3 * cfg.sifs_us + airtime_us(cfg.cts_bits, cfg) + data_airtime_us(payload_bits, cfg) +
                   airtime_us(cfg.ack_bits, cfg);
  if (d > kMaxDurationUs) {
    throw DurationOverflow("RTS reservation " + std::to_string(d) + " us exceeds 32767 us for payload of " +
                           std::to_string(payload_bits) + " bits");
  }
  return d;
}

inline Micros cts_duration_us(Micros received_rts_duration, const TimingConfig& cfg) {
  return std::max<Micros>(0, received_rts_duration - cfg.sifs_us - airtime_us(cfg.cts_bits, cfg));
}

/// Reservation carried by an honest DATA frame: SIFS + ACK.
inline Micros data_duration_us(const TimingConfig& cfg) { return cfg.sifs_us + airtime_us(cfg.ack_bits, cfg); }

// Builders. Each validates the result, so an honest node can never put an
// out-of-range duration on the wire.

inline Frame make_rts(MacAddress from, MacAddress to, Micros duration_us, const TimingConfig& cfg) {
  Frame f{FrameKind::Rts, duration_us, to, from, MacAddress::none(), 0, cfg.rts_bits};
  validate_frame(f);
  return f;
}

inline Frame make_cts(MacAddress from, MacAddress to, Micros duration_us, const TimingConfig& cfg) {
  Frame f{FrameKind::Cts, duration_us, to, from, MacAddress::none(), 0, cfg.cts_bits};
  validate_frame(f);
  return f;
}

inline Frame make_data(MacAddress from, MacAddress to, std::int64_t payload_bits, Micros duration_us,
                       const TimingConfig& cfg) {
  Frame f{FrameKind::Data, duration_us, to, from, MacAddress::none(), payload_bits, cfg.mac_header_bits};
  validate_frame(f);
  return f;
}

inline Frame make_ack(MacAddress from, MacAddress to, const TimingConfig& cfg) {
  Frame f{FrameKind::Ack, 0, to, from, MacAddress::none(), 0, cfg.ack_bits};
  validate_frame(f);
  return f;
}

}  // namespace rrdsim
