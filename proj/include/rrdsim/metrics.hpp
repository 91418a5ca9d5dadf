#pragma once

// Per-run measurement ledger and the figures derived from it.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "rrdsim/defense.hpp"
#include "rrdsim/engine.hpp"
#include "rrdsim/frames.hpp"

namespace rrdsim {

struct NodeCounters {
  std::int64_t offered = 0;  // arrivals, including those dropped on a full queue
  std::int64_t enqueued = 0;
  std::int64_t delivered_packets = 0;
  std::int64_t delivered_bits = 0;
  std::int64_t queue_drops = 0;
  std::int64_t retry_drops = 0;
  std::int64_t residual = 0;  // still queued at the end of the run
  Micros nav_busy_us = 0;     // inside the NAV observation window
};

struct LatencySample {
  std::int32_t node = 0;
  SimTime enqueued_at = 0;
  SimTime acked_at = 0;
  std::int64_t payload_bits = 0;
};

struct VerdictRecord {
  SimTime at = 0;
  std::int32_t detector = 0;
  MacAddress suspect;
  Verdict verdict;       // from the configured variant
  Verdict cross_check;   // from the other variant
  bool suspect_is_attacker = false;
  VerdictAction action = VerdictAction::None;
};

enum class TraceKind : std::uint8_t { TxStart, Receive, NavAdvance, NavRelease, BlacklistAdd, NoticeIgnored };

inline const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::TxStart: return "tx-start";
    case TraceKind::Receive: return "receive";
    case TraceKind::NavAdvance: return "nav-advance";
    case TraceKind::NavRelease: return "nav-release";
    case TraceKind::BlacklistAdd: return "blacklist-add";
    case TraceKind::NoticeIgnored: return "notice-ignored";
  }
  return "?";
}

/// One observable step. `peer` is the frame transmitter (or the blacklisted
/// address); `value` is the new NAV expiry for NAV records.
struct TraceRecord {
  SimTime at = 0;
  TraceKind kind = TraceKind::TxStart;
  std::int32_t node = 0;
  std::int64_t peer = -1;
  FrameKind frame_kind = FrameKind::Data;
  std::int64_t value = 0;
  bool via_contention = false;
  SimTime nav_before = 0;
  std::uint64_t frame_id = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

class MetricsLedger {
 public:
  MetricsLedger() = default;
  explicit MetricsLedger(std::vector<bool> is_attacker) : is_attacker_(std::move(is_attacker)) {
    nodes_.resize(is_attacker_.size());
  }

  // Configuration --------------------------------------------------------

  void set_nav_window(SimTime from, SimTime to) {
    if (to < from) throw std::invalid_argument("NAV window end precedes start");
    nav_window_from_ = from;
    nav_window_to_ = to;
  }
  SimTime nav_window_from() const { return nav_window_from_; }
  SimTime nav_window_to() const { return nav_window_to_; }
  void enable_trace(bool on) { trace_enabled_ = on; }
  bool trace_enabled() const { return trace_enabled_; }

  // Recording (append-only while the run is live) ------------------------

  NodeCounters& node(std::int32_t i) { return nodes_.at(i); }
  bool is_attacker(std::int32_t i) const { return i >= 0 && i < static_cast<std::int32_t>(is_attacker_.size()) && is_attacker_[i]; }

  void record_delivery(std::int32_t node, SimTime enqueued_at, SimTime acked_at, std::int64_t payload_bits) {
    auto& c = nodes_.at(node);
    ++c.delivered_packets;
    c.delivered_bits += payload_bits;
    if (!is_attacker(node)) latency_.push_back({node, enqueued_at, acked_at, payload_bits});
  }

  void record_verdict(const VerdictRecord& v) {
    verdicts_.push_back(v);
    if (v.verdict.malicious != v.cross_check.malicious) ++variant_disagreements_;
    if (v.verdict.measured_excess_us < 0) ++underclaim_anomalies_;
    if (v.verdict.malicious) {
      if (v.suspect_is_attacker) {
        ++true_positives_;
        if (!first_detection_) first_detection_ = v.at;
      } else {
        ++false_positives_;
      }
    }
  }

  void record_notice_sent() { ++notices_sent_; }
  void record_rts_filtered() { ++rts_filtered_; }
  void record_malformed() { ++malformed_; }
  void record_self_notice() { ++self_notices_ignored_; }

  void record_attacker_data_end(SimTime at) {
    if (!attacker_first_data_end_) attacker_first_data_end_ = at;
  }

  /// NAV of `node` moved from `old_expiry` to `new_expiry` at `at`.
  void record_nav_change(std::int32_t node, SimTime at, SimTime old_expiry, SimTime new_expiry) {
    auto& c = nodes_.at(node);
    if (new_expiry > old_expiry) {
      c.nav_busy_us += window_overlap(std::max(old_expiry, at), new_expiry);
    } else if (new_expiry < old_expiry) {
      c.nav_busy_us -= window_overlap(std::max(new_expiry, at), old_expiry);
    }
  }

  /// An honest node deferred to a reservation belonging to an attacker exchange.
  void record_attacker_hold(SimTime from, SimTime to) {
    if (to <= hold_until_) return;
    attacker_hold_us_ += to - std::max(from, hold_until_);
    hold_until_ = to;
  }

  void trace(const TraceRecord& r) {
    if (trace_enabled_) trace_.push_back(r);
  }

  /// Clips open intervals at `end` and freezes the ledger.
  void finalize(SimTime end, const std::vector<SimTime>& nav_expiry, const std::vector<std::int64_t>& residual) {
    run_end_ = end;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (i < nav_expiry.size() && nav_expiry[i] > end) nodes_[i].nav_busy_us -= window_overlap(end, nav_expiry[i]);
      if (i < residual.size()) nodes_[i].residual = residual[i];
    }
    if (hold_until_ > end) attacker_hold_us_ -= std::min(hold_until_ - end, attacker_hold_us_);
    finalized_ = true;
  }

  // Read side ------------------------------------------------------------

  bool finalized() const { return finalized_; }
  SimTime run_end() const { return run_end_; }
  std::size_t node_count() const { return nodes_.size(); }
  const NodeCounters& node(std::int32_t i) const { return nodes_.at(i); }
  const std::vector<NodeCounters>& nodes() const { return nodes_; }
  const std::vector<LatencySample>& latency_series() const { return latency_; }
  const std::vector<VerdictRecord>& verdicts() const { return verdicts_; }
  const std::vector<TraceRecord>& trace_log() const { return trace_; }

  std::int64_t delivered_payload_bits() const {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (!is_attacker_[i]) sum += nodes_[i].delivered_bits;
    return sum;
  }
  std::int64_t honest_queue_drops() const { return honest_sum(&NodeCounters::queue_drops); }
  std::int64_t honest_retry_drops() const { return honest_sum(&NodeCounters::retry_drops); }

  std::int64_t true_positives() const { return true_positives_; }
  std::int64_t false_positives() const { return false_positives_; }
  std::int64_t notices_sent() const { return notices_sent_; }
  std::int64_t rts_filtered() const { return rts_filtered_; }
  std::int64_t malformed() const { return malformed_; }
  std::int64_t self_notices_ignored() const { return self_notices_ignored_; }
  std::int64_t variant_disagreements() const { return variant_disagreements_; }
  std::int64_t underclaim_anomalies() const { return underclaim_anomalies_; }
  std::optional<SimTime> first_detection() const { return first_detection_; }
  std::optional<SimTime> attacker_first_data_end() const { return attacker_first_data_end_; }
  Micros attacker_hold_us() const { return attacker_hold_us_; }

 private:
  Micros window_overlap(SimTime from, SimTime to) const {
    const SimTime lo = std::max(from, nav_window_from_);
    const SimTime hi = std::min(to, nav_window_to_);
    return hi > lo ? hi - lo : 0;
  }

  std::int64_t honest_sum(std::int64_t NodeCounters::*field) const {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (!is_attacker_[i]) sum += nodes_[i].*field;
    return sum;
  }

  std::vector<bool> is_attacker_;
  std::vector<NodeCounters> nodes_;
  std::vector<LatencySample> latency_;
  std::vector<VerdictRecord> verdicts_;
  std::vector<TraceRecord> trace_;
  bool trace_enabled_ = false;
  bool finalized_ = false;
  SimTime run_end_ = 0;
  SimTime nav_window_from_ = 0;
  SimTime nav_window_to_ = std::numeric_limits<SimTime>::max();
  std::int64_t true_positives_ = 0;
  std::int64_t false_positives_ = 0;
  std::int64_t notices_sent_ = 0;
  std::int64_t rts_filtered_ = 0;
  std::int64_t malformed_ = 0;
  std::int64_t self_notices_ignored_ = 0;
  std::int64_t variant_disagreements_ = 0;
  std::int64_t underclaim_anomalies_ = 0;
  std::optional<SimTime> first_detection_;
  std::optional<SimTime> attacker_first_data_end_;
  Micros attacker_hold_us_ = 0;
  SimTime hold_until_ = 0;
};

/// Aggregate honest payload throughput over the whole run.
inline double throughput_bps(const MetricsLedger& ledger, double run_seconds) {
  if (!(run_seconds > 0)) throw std::invalid_argument("throughput_bps: run duration must be positive");
  return static_cast<double>(ledger.delivered_payload_bits()) / run_seconds;
}

/// Honest payload throughput counting only ACKs received in [from, to).
inline double throughput_bps_between(const MetricsLedger& ledger, SimTime from, SimTime to) {
  if (to <= from) throw std::invalid_argument("throughput_bps_between: empty window");
  std::int64_t bits = 0;
  for (const auto& s : ledger.latency_series())
    if (s.acked_at >= from && s.acked_at < to) bits += s.payload_bits;
  return static_cast<double>(bits) * static_cast<double>(kMicrosPerSecond) / static_cast<double>(to - from);
}

inline std::optional<double> mean_latency_us(const MetricsLedger& ledger) {
  const auto& series = ledger.latency_series();
  if (series.empty()) return std::nullopt;
  long double sum = 0;
  for (const auto& s : series) sum += static_cast<long double>(s.acked_at - s.enqueued_at);
  return static_cast<double>(sum / static_cast<long double>(series.size()));
}

inline std::optional<double> mean_latency_us_between(const MetricsLedger& ledger, SimTime from, SimTime to) {
  long double sum = 0;
  std::size_t n = 0;
  for (const auto& s : ledger.latency_series()) {
    if (s.enqueued_at < from || s.enqueued_at >= to) continue;
    sum += static_cast<long double>(s.acked_at - s.enqueued_at);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(sum / static_cast<long double>(n));
}

struct DetectionSummary {
  std::optional<double> tpr;  // share of attackers flagged at least once
  std::optional<double> fpr;  // share of honest-sender verdicts that were malicious
  std::optional<SimTime> time_to_first_detection;
};

inline DetectionSummary detection_counts(const MetricsLedger& ledger, const std::set<MacAddress>& attackers) {
  DetectionSummary out;
  std::set<MacAddress> flagged;
  std::int64_t honest_verdicts = 0;
  std::int64_t honest_flagged = 0;
  for (const auto& v : ledger.verdicts()) {
    const bool guilty = attackers.count(v.suspect) > 0;
    if (guilty) {
      if (v.verdict.malicious) {
        flagged.insert(v.suspect);
        if (!out.time_to_first_detection) out.time_to_first_detection = v.at;
      }
    } else {
      ++honest_verdicts;
      if (v.verdict.malicious) ++honest_flagged;
    }
  }
  if (!attackers.empty()) out.tpr = static_cast<double>(flagged.size()) / static_cast<double>(attackers.size());
  if (honest_verdicts > 0) out.fpr = static_cast<double>(honest_flagged) / static_cast<double>(honest_verdicts);
  return out;
}

}  // namespace rrdsim
