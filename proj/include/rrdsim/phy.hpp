#pragma once

// Shared medium: log-distance path loss, threshold reception, carrier sense,
// and all-or-nothing collisions (no capture).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrdsim/engine.hpp"
#include "rrdsim/frames.hpp"

namespace rrdsim {

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance_m(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct PhyConfig {
  double tx_power_mw = 100.0;
  double path_loss_alpha = 4.0;
  double sensitivity_dbm = -120.0;
  double carrier_sense_dbm = -120.0;
  double reference_distance_m = 1.0;
  // Carried for completeness; the threshold model does not use them.
  double carrier_frequency_hz = 2.412e9;
  double thermal_noise_dbm = -110.0;
  double neighborhood_max_age_s = 100.0;

  void validate() const {
    if (!(tx_power_mw > 0)) throw std::invalid_argument("phy.tx_power_mw must be > 0");
    if (!(path_loss_alpha > 0)) throw std::invalid_argument("phy.path_loss_alpha must be > 0");
    if (!(reference_distance_m > 0)) throw std::invalid_argument("phy.reference_distance_m must be > 0");
  }

  friend bool operator==(const PhyConfig&, const PhyConfig&) = default;
};

/// Received power under the log-distance model. Distances below the
/// reference distance are clamped to it.
inline double rx_power_dbm(double distance, const PhyConfig& cfg) {
  const double d = std::max(distance, cfg.reference_distance_m);
  return 10.0 * std::log10(cfg.tx_power_mw) - 10.0 * cfg.path_loss_alpha * std::log10(d / cfg.reference_distance_m);
}

struct Topology {
  double width_m = 200.0;
  double height_m = 200.0;
  std::vector<Position> positions;

  bool contains(Position p) const { return p.x >= 0 && p.y >= 0 && p.x <= width_m && p.y <= height_m; }

  void validate() const {
    if (!(width_m > 0) || !(height_m > 0)) throw std::invalid_argument("topology: playground must be positive");
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if (!contains(positions[i])) {
        throw std::invalid_argument("topology: node " + std::to_string(i) + " lies outside the playground");
      }
    }
  }
};

/// Uniform placement; each node draws from its own substream keyed by `node_keys[i]`.
inline std::vector<Position> place_uniform(const std::vector<std::uint64_t>& node_keys, double width_m,
                                           double height_m, std::uint64_t master_seed) {
  std::vector<Position> out;
  out.reserve(node_keys.size());
  for (auto key : node_keys) {
    RngStream rng(node_stream_seed(master_seed, key, StreamPurpose::Placement));
    const double x = rng.uniform01() * width_m;
    const double y = rng.uniform01() * height_m;
    out.push_back({x, y});
  }
  return out;
}

struct ChannelEvent {
  std::int32_t transmitter = -1;
  Frame frame;
  SimTime tx_start = 0;
  SimTime tx_end = 0;
};

/// Receives channel callbacks for one node.
class ChannelListener {
 public:
  virtual ~ChannelListener() = default;
  virtual void on_frame_received(const Frame& frame, SimTime at) = 0;
  virtual void on_medium_change(SimTime at) = 0;
};

class Channel {
 public:
  using TxObserver = std::function<void(const ChannelEvent&)>;

  Channel(Scheduler& scheduler, PhyConfig phy, TimingConfig timing, std::vector<Position> positions)
      : scheduler_(scheduler), phy_(phy), timing_(timing), positions_(std::move(positions)) {
    const std::size_t n = positions_.size();
    power_.assign(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        power_[a * n + b] = a == b ? 0.0 : rx_power_dbm(distance_m(positions_[a], positions_[b]), phy_);
      }
    }
    listeners_.assign(n, nullptr);
    transmitting_.assign(n, false);
  }

  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  std::size_t node_count() const { return positions_.size(); }
  const PhyConfig& phy() const { return phy_; }

  void attach(std::int32_t node, ChannelListener* listener) { listeners_.at(node) = listener; }
  void set_tx_observer(TxObserver observer) { observer_ = std::move(observer); }

  double rx_power(std::int32_t from, std::int32_t to) const { return power_[index(from, to)]; }
  bool in_range(std::int32_t from, std::int32_t to) const {
    return from != to && rx_power(from, to) >= phy_.sensitivity_dbm;
  }
  bool senses(std::int32_t from, std::int32_t to) const {
    return from != to && rx_power(from, to) >= phy_.carrier_sense_dbm;
  }

  bool single_collision_domain() const {
    const auto n = static_cast<std::int32_t>(node_count());
    for (std::int32_t a = 0; a < n; ++a)
      for (std::int32_t b = 0; b < n; ++b)
        if (a != b && (!in_range(a, b) || !senses(a, b))) return false;
    return true;
  }

  bool transmitting(std::int32_t node) const { return transmitting_.at(node); }

  /// Busy if the node itself transmits or a foreign transmission reaches it
  /// above the carrier-sense threshold.
  bool carrier_busy(std::int32_t node, SimTime at) const {
    for (const auto& tx : active_) {
      if (at < tx.event.tx_start || at >= tx.event.tx_end) continue;
      if (tx.event.transmitter == node || senses(tx.event.transmitter, node)) return true;
    }
    return false;
  }

  ChannelEvent begin_transmission(std::int32_t transmitter, Frame frame, SimTime at) {
    if (at != scheduler_.now()) throw std::logic_error("Channel: transmission must start at the current time");
    if (transmitting_.at(transmitter)) {
      throw std::logic_error("Channel: node " + std::to_string(transmitter) + " is already transmitting");
    }
    validate_frame(frame);
    frame.id = ++next_frame_id_;

    Active tx;
    tx.event = ChannelEvent{transmitter, frame, at, at + airtime_us(frame.total_bits(), timing_)};
    tx.corrupted.assign(node_count(), false);

    const auto n = static_cast<std::int32_t>(node_count());
    for (std::int32_t r = 0; r < n; ++r) {
      if (!in_range(transmitter, r)) continue;
      if (transmitting_[r]) tx.corrupted[r] = true;
      for (auto& other : active_) {
        if (in_range(other.event.transmitter, r)) {
          tx.corrupted[r] = true;
          other.corrupted[r] = true;
        }
      }
    }
    // Half duplex: whatever the transmitter was receiving is lost.
    for (auto& other : active_) other.corrupted[transmitter] = true;

    transmitting_[transmitter] = true;
    active_.push_back(tx);
    const std::uint64_t id = frame.id;
    scheduler_.schedule(tx.event.tx_end, kChannelTarget, EventKind::TxEnd, [this, id] { end_transmission(id); });
    if (observer_) observer_(tx.event);
    notify_all(at);
    return tx.event;
  }

 private:
  struct Active {
    ChannelEvent event;
    std::vector<bool> corrupted;
  };

  std::size_t index(std::int32_t from, std::int32_t to) const {
    return static_cast<std::size_t>(from) * node_count() + static_cast<std::size_t>(to);
  }

  void end_transmission(std::uint64_t id) {
    auto it = std::find_if(active_.begin(), active_.end(), [id](const Active& a) { return a.event.frame.id == id; });
    if (it == active_.end()) throw std::logic_error("Channel: unknown transmission ended");
    Active done = std::move(*it);
    active_.erase(it);
    transmitting_[done.event.transmitter] = false;

    const SimTime at = scheduler_.now();
    const auto n = static_cast<std::int32_t>(node_count());
    for (std::int32_t r = 0; r < n; ++r) {
      if (!in_range(done.event.transmitter, r) || done.corrupted[r]) continue;
      if (listeners_[r]) listeners_[r]->on_frame_received(done.event.frame, at);
    }
    notify_all(at);
  }

  void notify_all(SimTime at) {
    for (auto* l : listeners_)
      if (l) l->on_medium_change(at);
  }

  Scheduler& scheduler_;
  PhyConfig phy_;
  TimingConfig timing_;
  std::vector<Position> positions_;
  std::vector<double> power_;
  std::vector<ChannelListener*> listeners_;
  std::vector<bool> transmitting_;
  std::vector<Active> active_;
  std::uint64_t next_frame_id_ = 0;
  TxObserver observer_;
};

}  // namespace rrdsim
