#pragma once

// Per-node 802.11 DCF: physical and virtual carrier sense, DIFS + backoff
// contention, the RTS/CTS/DATA/ACK exchange, retries, and the receive-side
// hooks for RTS-duration re-evaluation and blacklisting.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>

#include "rrdsim/adversary.hpp"
#include "rrdsim/defense.hpp"
#include "rrdsim/engine.hpp"
#include "rrdsim/frames.hpp"
#include "rrdsim/metrics.hpp"
#include "rrdsim/phy.hpp"

namespace rrdsim {

struct MacParams {
  int cw_min = 31;
  int cw_max = 1023;
  int retry_limit = 7;
  std::size_t queue_capacity = 14;

  void validate() const {
    auto pow2_minus_one = [](int v) { return v > 0 && ((v + 1) & v) == 0; };
    if (!pow2_minus_one(cw_min) || !pow2_minus_one(cw_max) || cw_min > cw_max) {
      throw std::invalid_argument("mac: contention windows must be 2^k-1 with cw_min <= cw_max");
    }
    if (retry_limit < 0) throw std::invalid_argument("mac.retry_limit must be >= 0");
    if (queue_capacity == 0) throw std::invalid_argument("mac.queue_capacity must be > 0");
  }
};

struct NavState {
  SimTime expires_at = 0;
  bool busy(SimTime at) const { return at < expires_at; }
};

struct QueuedPayload {
  MacAddress dest;
  std::int64_t payload_bits = 0;
  SimTime enqueued_at = 0;
};

enum class ExchangeStage : std::uint8_t { AwaitingCts, AwaitingData, AwaitingAck };

/// The single in-flight exchange. Senders wait for CTS or ACK; responders
/// keep the reservation they answered so the DATA frame can be checked.
struct PendingExchange {
  MacAddress peer;
  ExchangeStage stage = ExchangeStage::AwaitingCts;
  Micros stored_rts_duration_us = 0;
  Micros expected_data_airtime_us = 0;
};

struct MacContext {
  Scheduler& scheduler;
  Channel& channel;
  TimingConfig timing;
  MacParams params;
  MetricsLedger& ledger;
};

class MacEntity final : public ChannelListener {
 public:
  MacEntity(std::int32_t index, MacContext ctx, DetectorConfig defense, std::uint64_t backoff_seed,
            std::optional<AttackProfile> attack = std::nullopt)
      : index_(index),
        ctx_(ctx),
        defense_(defense),
        attack_(std::move(attack)),
        rng_(backoff_seed),
        cw_(ctx.params.cw_min) {}

  MacEntity(const MacEntity&) = delete;
  MacEntity& operator=(const MacEntity&) = delete;

  std::int32_t index() const { return index_; }
  MacAddress address() const { return MacAddress(static_cast<std::uint32_t>(index_)); }
  bool is_attacker() const { return attack_.has_value(); }
  const std::optional<AttackProfile>& attack() const { return attack_; }
  const DetectorConfig& defense() const { return defense_; }
  const NavState& nav() const { return nav_; }
  const Blacklist& blacklist() const { return blacklist_; }
  int contention_window() const { return cw_; }
  int short_retry_count() const { return short_retry_; }
  int backoff_slots() const { return backoff_; }
  std::size_t queue_size() const { return queue_.size(); }
  const std::optional<PendingExchange>& pending() const { return pending_; }

  /// Keeps the queue full of `payload_bits` payloads for `dest`.
  void set_saturated(MacAddress dest, std::int64_t payload_bits, SimTime at) {
    saturated_ = Saturation{dest, payload_bits};
    top_up(at);
  }

  bool enqueue_payload(MacAddress dest, std::int64_t payload_bits, SimTime at) {
    auto& c = ctx_.ledger.node(index_);
    ++c.offered;
    if (queue_.size() >= ctx_.params.queue_capacity) {
      ++c.queue_drops;
      return false;
    }
    queue_.push_back({dest, payload_bits, at});
    ++c.enqueued;
    if (state_ == SenderState::Idle) start_access(at);
    return true;
  }

  bool medium_idle(SimTime at) const { return !ctx_.channel.carrier_busy(index_, at) && !nav_.busy(at); }

  /// Enters contention for the head-of-line payload: DIFS of idle medium,
  /// then the backoff countdown, frozen while the medium is busy.
  void start_access(SimTime at) {
    if (queue_.empty() || state_ != SenderState::Idle) return;
    state_ = SenderState::Contending;
    contend_since_ = at;
    refresh(at);
  }

  void start_flood(SimTime first_tick) {
    if (!attack_ || attack_->mode != AttackMode::Flood) throw std::logic_error("start_flood on a non-flood node");
    ctx_.scheduler.schedule(first_tick, index_, EventKind::TimerExpiry, [this] { on_flood_tick(); });
  }

  /// Max-merge of an overheard reservation into the NAV.
  void nav_update(const Frame& frame, SimTime at) {
    if (defense_.mode == DefenseMode::Phase2 && blacklist_.count(frame.addr2)) return;
    if (attack_ && attack_->mode == AttackMode::Flood) return;
    const SimTime proposed = at + frame.duration_us;
    if (proposed <= nav_.expires_at) return;
    const SimTime old = nav_.expires_at;
    set_nav(proposed, at);
    ctx_.ledger.trace({at, TraceKind::NavAdvance, index_, static_cast<std::int64_t>(frame.addr2.value()), frame.kind,
                       proposed, false, old, frame.id});
    const bool attacker_exchange = ctx_.ledger.is_attacker(static_cast<std::int32_t>(frame.addr2.value())) ||
                                   (frame.addr1.is_unicast() &&
                                    ctx_.ledger.is_attacker(static_cast<std::int32_t>(frame.addr1.value())));
    if (attacker_exchange && !is_attacker()) ctx_.ledger.record_attacker_hold(at, proposed);
  }

  void on_frame_received(const Frame& frame, SimTime at) override {
    ctx_.ledger.trace({at, TraceKind::Receive, index_, static_cast<std::int64_t>(frame.addr2.value()), frame.kind,
                       frame.duration_us, false, nav_.expires_at, frame.id});
    if (frame.addr1 != address()) {
      nav_update(frame, at);
      if (frame.is_blacklist_notice() && defense_.mode == DefenseMode::Phase2) on_overhear_blacklist_ack(frame, at);
      refresh(at);
      return;
    }
    switch (frame.kind) {
      case FrameKind::Rts: on_rts(frame, at); break;
      case FrameKind::Cts: on_cts(frame, at); break;
      case FrameKind::Data: on_data(frame, at); break;
      case FrameKind::Ack: on_ack(frame, at); break;
    }
    refresh(at);
  }

  void on_medium_change(SimTime at) override {
    refresh(at);
    if (flood_deferred_ && !ctx_.channel.carrier_busy(index_, at) && !ctx_.scheduler.pending(flood_send_)) {
      flood_deferred_ = false;
      flood_send_ = ctx_.scheduler.schedule(at, index_, EventKind::TimerExpiry, [this] { send_flood_rts(); });
    }
  }

  /// Phase 2 receive side: blacklist the named attacker and drop the NAV.
  void on_overhear_blacklist_ack(const Frame& notice, SimTime at) {
    if (notice.addr3 == address()) {
      ctx_.ledger.record_self_notice();
      ctx_.ledger.trace({at, TraceKind::NoticeIgnored, index_, static_cast<std::int64_t>(notice.addr2.value()),
                         notice.kind, 0, false, nav_.expires_at, notice.id});
      return;
    }
    add_to_blacklist(notice.addr3, at);
    if (nav_.expires_at > at) {
      const SimTime old = nav_.expires_at;
      set_nav(at, at);
      ctx_.ledger.trace({at, TraceKind::NavRelease, index_, static_cast<std::int64_t>(notice.addr3.value()),
                         notice.kind, at, false, old, notice.id});
    }
  }

  /// End-of-run bookkeeping.
  SimTime nav_expiry() const { return nav_.expires_at; }

 private:
  enum class SenderState : std::uint8_t { Idle, Contending, Exchange };

  struct Saturation {
    MacAddress dest;
    std::int64_t payload_bits;
  };

  const TimingConfig& timing() const { return ctx_.timing; }
  SimTime now() const { return ctx_.scheduler.now(); }

  // Contention ------------------------------------------------------------

  void refresh(SimTime at) {
    const bool idle = medium_idle(at);
    if (idle && !was_idle_) idle_since_ = at;
    if (!idle && was_idle_) freeze(at);
    was_idle_ = idle;
    arm_access(at);
  }

  void freeze(SimTime at) {
    if (!ctx_.scheduler.pending(access_timer_)) return;
    // A countdown that ends this very instant still fires: both stations
    // picked the same slot and will collide.
    if (access_fire_at_ <= at) return;
    ctx_.scheduler.cancel(access_timer_);
    if (at > countdown_start_) {
      const auto elapsed = static_cast<int>((at - countdown_start_) / timing().slot_us);
      backoff_ -= std::min(backoff_, elapsed);
    }
  }

  void arm_access(SimTime at) {
    if (state_ != SenderState::Contending || !was_idle_ || ctx_.scheduler.pending(access_timer_)) return;
    if (backoff_ < 0) backoff_ = static_cast<int>(rng_.uniform_int(0, static_cast<std::uint64_t>(cw_)));
    countdown_start_ = std::max(idle_since_ + timing().difs_us, contend_since_);
    access_fire_at_ = std::max(countdown_start_ + static_cast<SimTime>(backoff_) * timing().slot_us, at);
    access_timer_ =
        ctx_.scheduler.schedule(access_fire_at_, index_, EventKind::BackoffSlot, [this] { on_access_granted(); });
  }

  void on_access_granted() {
    const SimTime at = now();
    if (state_ != SenderState::Contending || queue_.empty()) return;
    if (nav_.busy(at)) {
      backoff_ = 0;
      return;
    }
    backoff_ = -1;
    pending_.reset();
    ctx_.scheduler.cancel(responder_timer_);
    const QueuedPayload& head = queue_.front();
    if (attack_ || head.payload_bits >= timing().rts_cts_threshold_bytes * 8) {
      send_rts(head, true);
    } else {
      send_data(head.dest, head.payload_bits, data_duration_us(timing()), true);
    }
  }

  // Transmit paths ----------------------------------------------------------

  void transmit(const Frame& frame, bool via_contention) {
    const SimTime at = now();
    ctx_.ledger.trace({at, TraceKind::TxStart, index_, static_cast<std::int64_t>(frame.addr2.value()), frame.kind,
                       frame.duration_us, via_contention, nav_.expires_at, 0});
    last_tx_ = ctx_.channel.begin_transmission(index_, frame, at);
  }

  void send_rts(const QueuedPayload& head, bool via_contention) {
    const Frame rts = attack_ ? forge_rts(*attack_, address(), head.dest, timing())
                              : make_rts(address(), head.dest, rts_duration_us(head.payload_bits, timing()), timing());
    state_ = SenderState::Exchange;
    pending_ = PendingExchange{head.dest, ExchangeStage::AwaitingCts, 0, 0};
    transmit(rts, via_contention);
    arm_timeout(last_tx_.tx_end + timing().sifs_us + airtime_us(timing().cts_bits, timing()) + timing().slot_us);
  }

  void send_data(MacAddress dest, std::int64_t payload_bits, Micros duration, bool via_contention) {
    const Frame data = make_data(address(), dest, payload_bits, duration, timing());
    state_ = SenderState::Exchange;
    pending_ = PendingExchange{dest, ExchangeStage::AwaitingAck, 0, 0};
    transmit(data, via_contention);
    if (attack_) ctx_.ledger.record_attacker_data_end(last_tx_.tx_end);
    arm_timeout(last_tx_.tx_end + timing().sifs_us + airtime_us(timing().ack_bits, timing()) + timing().slot_us);
  }

  /// CTS, ACK and notices go out one SIFS after the frame they answer.
  void respond_after_sifs(Frame frame, SimTime at) {
    ctx_.scheduler.schedule(at + timing().sifs_us, index_, EventKind::TimerExpiry, [this, frame] {
      if (ctx_.channel.transmitting(index_)) {
        ctx_.ledger.record_malformed();
        return;
      }
      transmit(frame, false);
    });
  }

  void arm_timeout(SimTime at) {
    ctx_.scheduler.cancel(timeout_);
    timeout_ = ctx_.scheduler.schedule(at, index_, EventKind::TimerExpiry, [this] { on_timeout(); });
  }

  // Receive paths -----------------------------------------------------------

  void on_rts(const Frame& rts, SimTime at) {
    if (attack_ && attack_->mode == AttackMode::Flood) return;
    if (state_ == SenderState::Exchange || ctx_.channel.transmitting(index_)) return;
    if (filter_rts(blacklist_, defense_, rts) == RtsDecision::Ignore) {
      ctx_.ledger.record_rts_filtered();
      return;
    }
    if (nav_.busy(at)) return;
    const Micros cts_duration = cts_duration_us(rts.duration_us, timing());
    pending_ = PendingExchange{rts.addr2, ExchangeStage::AwaitingData, rts.duration_us,
                               expected_data_airtime_us(cts_duration, timing())};
    respond_after_sifs(make_cts(address(), rts.addr2, cts_duration, timing()), at);
    ctx_.scheduler.cancel(responder_timer_);
    const SimTime cts_end = at + timing().sifs_us + airtime_us(timing().cts_bits, timing());
    const SimTime deadline =
        cts_end + timing().sifs_us + std::max<Micros>(0, pending_->expected_data_airtime_us) + timing().slot_us;
    responder_timer_ = ctx_.scheduler.schedule(deadline, index_, EventKind::TimerExpiry, [this] {
      if (pending_ && pending_->stage == ExchangeStage::AwaitingData) pending_.reset();
    });
  }

  void on_cts(const Frame& cts, SimTime at) {
    if (attack_ && attack_->mode == AttackMode::Flood) return;
    if (!pending_ || pending_->stage != ExchangeStage::AwaitingCts || pending_->peer != cts.addr2) {
      ctx_.ledger.record_malformed();
      return;
    }
    ctx_.scheduler.cancel(timeout_);
    const QueuedPayload head = queue_.front();
    std::int64_t bits = head.payload_bits;
    Micros duration = data_duration_us(timing());
    if (attack_) {
      const auto action = attacker_next_action(*attack_, AttackTrigger::CtsReceived, at, timing());
      bits = action.payload_bits;
      duration = action.duration_us;
    }
    pending_->stage = ExchangeStage::AwaitingAck;
    ctx_.scheduler.schedule(at + timing().sifs_us, index_, EventKind::TimerExpiry,
                            [this, dest = head.dest, bits, duration] { send_data(dest, bits, duration, false); });
  }

  void on_data(const Frame& data, SimTime at) {
    bool notice = false;
    if (pending_ && pending_->stage == ExchangeStage::AwaitingData && pending_->peer == data.addr2) {
      if (defense_.detecting()) notice = evaluate(data, at);
      ctx_.scheduler.cancel(responder_timer_);
      pending_.reset();
    }
    if (notice) {
      ctx_.ledger.record_notice_sent();
      respond_after_sifs(make_blacklist_notice(address(), data.addr2, timing()), at);
    } else {
      respond_after_sifs(make_ack(address(), data.addr2, timing()), at);
    }
  }

  /// Runs both detector variants; returns true when a notice must replace the ACK.
  bool evaluate(const Frame& data, SimTime at) {
    const Verdict basic = detect_basic(pending_->stored_rts_duration_us, data.payload_bits, defense_, timing(), data.id);
    const Verdict improved = detect_improved(pending_->expected_data_airtime_us, data, defense_, timing());
    const bool use_basic = defense_.variant == DetectorVariant::Basic;
    const Verdict& chosen = use_basic ? basic : improved;
    const Verdict& other = use_basic ? improved : basic;
    const VerdictAction action = action_for(chosen, defense_.mode);
    const auto suspect = static_cast<std::int32_t>(data.addr2.value());
    ctx_.ledger.record_verdict({at, index_, data.addr2, chosen, other, ctx_.ledger.is_attacker(suspect), action});
    if (!chosen.malicious) return false;
    return on_malicious(data.addr2, at);
  }

  bool on_malicious(MacAddress attacker, SimTime at) {
    if (!defense_.filtering()) return false;
    add_to_blacklist(attacker, at);
    return defense_.mode == DefenseMode::Phase2;
  }

  void on_ack(const Frame& ack, SimTime at) {
    if (!pending_ || pending_->stage != ExchangeStage::AwaitingAck || pending_->peer != ack.addr2) {
      ctx_.ledger.record_malformed();
      return;
    }
    ctx_.scheduler.cancel(timeout_);
    const QueuedPayload done = queue_.front();
    queue_.pop_front();
    pending_.reset();
    ctx_.ledger.record_delivery(index_, done.enqueued_at, at, done.payload_bits);
    cw_ = ctx_.params.cw_min;
    short_retry_ = 0;
    backoff_ = -1;
    top_up(at);

    if (attack_) {
      const auto action = attacker_next_action(*attack_, AttackTrigger::ExchangeComplete, at, timing());
      if (action.kind == AttackAction::Kind::SendRts && !queue_.empty()) {
        ctx_.scheduler.schedule(action.send_at, index_, EventKind::TimerExpiry, [this] {
          if (ctx_.channel.transmitting(index_) || queue_.empty()) {
            state_ = SenderState::Idle;
            start_access(now());
            return;
          }
          send_rts(queue_.front(), false);
        });
        return;
      }
    }
    state_ = SenderState::Idle;
    start_access(at);
  }

  void on_timeout() {
    const SimTime at = now();
    pending_.reset();
    ++short_retry_;
    cw_ = std::min(2 * (cw_ + 1) - 1, ctx_.params.cw_max);
    if (short_retry_ > ctx_.params.retry_limit) {
      queue_.pop_front();
      ++ctx_.ledger.node(index_).retry_drops;
      cw_ = ctx_.params.cw_min;
      short_retry_ = 0;
      top_up(at);
    }
    backoff_ = -1;
    state_ = SenderState::Idle;
    start_access(at);
  }

  // Flood -------------------------------------------------------------------

  void on_flood_tick() {
    const SimTime at = now();
    const auto action = attacker_next_action(*attack_, AttackTrigger::FloodTick, at, timing());
    if (action.next_tick) {
      ctx_.scheduler.schedule(*action.next_tick, index_, EventKind::TimerExpiry, [this] { on_flood_tick(); });
    }
    if (action.kind != AttackAction::Kind::SendRts) return;
    if (ctx_.channel.carrier_busy(index_, at)) {
      flood_deferred_ = true;
      return;
    }
    send_flood_rts();
  }

  void send_flood_rts() {
    if (ctx_.channel.transmitting(index_)) return;
    transmit(forge_rts(*attack_, address(), attack_->flood_target, timing()), true);
  }

  // State helpers -----------------------------------------------------------

  void set_nav(SimTime expiry, SimTime at) {
    ctx_.ledger.record_nav_change(index_, at, nav_.expires_at, expiry);
    nav_.expires_at = expiry;
    ctx_.scheduler.cancel(nav_timer_);
    if (expiry > at) {
      nav_timer_ = ctx_.scheduler.schedule(expiry, index_, EventKind::NavExpiry, [this] { refresh(now()); });
    }
  }

  void add_to_blacklist(MacAddress who, SimTime at) {
    if (blacklist_.insert(who).second) {
      ctx_.ledger.trace({at, TraceKind::BlacklistAdd, index_, static_cast<std::int64_t>(who.value()), FrameKind::Ack,
                         0, false, nav_.expires_at, 0});
    }
  }

  // Called while still in the exchange state, so refills never start contention by themselves.
  void top_up(SimTime at) {
    if (!saturated_) return;
    while (queue_.size() < ctx_.params.queue_capacity) enqueue_payload(saturated_->dest, saturated_->payload_bits, at);
  }

  std::int32_t index_;
  MacContext ctx_;
  DetectorConfig defense_;
  std::optional<AttackProfile> attack_;
  RngStream rng_;

  std::deque<QueuedPayload> queue_;
  std::optional<Saturation> saturated_;
  SenderState state_ = SenderState::Idle;
  int cw_;
  int short_retry_ = 0;
  int backoff_ = -1;  // -1: not drawn yet
  NavState nav_;
  Blacklist blacklist_;
  std::optional<PendingExchange> pending_;

  bool was_idle_ = true;
  SimTime idle_since_ = 0;
  SimTime contend_since_ = 0;
  SimTime countdown_start_ = 0;
  SimTime access_fire_at_ = 0;
  EventHandle access_timer_;
  EventHandle timeout_;
  EventHandle responder_timer_;
  EventHandle nav_timer_;
  EventHandle flood_send_;
  bool flood_deferred_ = false;
  ChannelEvent last_tx_;
};

}  // namespace rrdsim
