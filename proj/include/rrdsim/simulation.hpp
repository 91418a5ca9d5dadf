#pragma once

// One simulation run: an access point, honest stations that all send to it,
// and optional attackers, sharing one channel.
//
// Node indices: 0 is the AP, 1..node_count are honest stations, attackers
// follow. Random substreams are keyed by role rather than index so adding a
// station never perturbs the draws of the others.

#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrdsim/adversary.hpp"
#include "rrdsim/defense.hpp"
#include "rrdsim/engine.hpp"
#include "rrdsim/frames.hpp"
#include "rrdsim/mac.hpp"
#include "rrdsim/metrics.hpp"
#include "rrdsim/phy.hpp"

namespace rrdsim {

inline constexpr int kMinDensity = 2;
inline constexpr int kMaxDensity = 25;

struct TrafficConfig {
  enum class Law : std::uint8_t { Poisson, Saturation };
  Law law = Law::Poisson;
  double mean_interarrival_ms = 100.0;
  std::int64_t payload_bits = 8192;

  void validate() const {
    if (law == Law::Poisson && !(mean_interarrival_ms > 0)) {
      throw std::invalid_argument("traffic.mean_interarrival_ms must be > 0");
    }
    if (payload_bits < 0) throw std::invalid_argument("traffic.payload_bits must be >= 0");
  }
};

inline const char* to_string(TrafficConfig::Law law) {
  return law == TrafficConfig::Law::Poisson ? "poisson" : "saturation";
}

struct ScenarioConfig {
  TimingConfig timing;
  PhyConfig phy;
  double playground_width_m = 200.0;
  double playground_height_m = 200.0;
  /// Explicit positions (AP, stations, attackers, in index order); random when empty.
  std::vector<Position> positions;
  MacParams mac;
  TrafficConfig traffic;
  DetectorConfig defense;
  std::vector<AttackProfile> attackers{AttackProfile{}};
  int node_count = 25;
  double run_seconds = 500.0;
  std::uint64_t seed = 1;
  int replications = 5;
  bool allow_density_override = false;
  bool expect_single_collision_domain = true;
  /// Optional [from, to) window, in seconds, for per-node NAV occupancy.
  std::optional<std::pair<double, double>> nav_window_s;
  bool trace = false;

  int total_nodes() const { return 1 + node_count + static_cast<int>(attackers.size()); }
  int first_attacker() const { return 1 + node_count; }

  void validate() const {
    timing.validate();
    phy.validate();
    mac.validate();
    traffic.validate();
    defense.validate(timing);
    for (const auto& a : attackers) a.validate();
    if (node_count < 1) throw std::invalid_argument("run.node_count must be >= 1");
    if (!allow_density_override && (node_count < kMinDensity || node_count > kMaxDensity)) {
      throw std::invalid_argument("run.node_count = " + std::to_string(node_count) +
                                  " is outside the 2..25 density range (set run.allow_density_override to escape)");
    }
    if (!(run_seconds > 0)) throw std::invalid_argument("run.run_seconds must be > 0");
    if (replications < 1) throw std::invalid_argument("run.replications must be >= 1");
    if (!(playground_width_m > 0) || !(playground_height_m > 0)) {
      throw std::invalid_argument("topology: playground must be positive");
    }
    if (!positions.empty() && static_cast<int>(positions.size()) != total_nodes()) {
      throw std::invalid_argument("topology.positions lists " + std::to_string(positions.size()) +
                                  " nodes, scenario has " + std::to_string(total_nodes()));
    }
    if (traffic.payload_bits >= timing.rts_cts_threshold_bytes * 8) {
      (void)rts_duration_us(traffic.payload_bits, timing);  // throws DurationOverflow if unrepresentable
    }
    if (nav_window_s && !(nav_window_s->second >= nav_window_s->first && nav_window_s->first >= 0)) {
      throw std::invalid_argument("metrics.nav_window is not a valid [from, to) pair");
    }
  }
};

/// Substream key for node `index`: AP 0, station i -> i, attacker k -> 10000 + k.
inline std::uint64_t stream_key(const ScenarioConfig& cfg, int index) {
  if (index <= cfg.node_count) return static_cast<std::uint64_t>(index);
  return 10000u + static_cast<std::uint64_t>(index - cfg.first_attacker());
}

inline std::vector<Position> scenario_positions(const ScenarioConfig& cfg) {
  if (!cfg.positions.empty()) return cfg.positions;
  std::vector<std::uint64_t> keys;
  for (int i = 0; i < cfg.total_nodes(); ++i) keys.push_back(stream_key(cfg, i));
  return place_uniform(keys, cfg.playground_width_m, cfg.playground_height_m, cfg.seed);
}

class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Topology topo{cfg_.playground_width_m, cfg_.playground_height_m, scenario_positions(cfg_)};
    topo.validate();

    std::vector<bool> attacker_flags(cfg_.total_nodes(), false);
    for (int i = cfg_.first_attacker(); i < cfg_.total_nodes(); ++i) attacker_flags[i] = true;
    ledger_ = MetricsLedger(attacker_flags);
    ledger_.enable_trace(cfg_.trace);
    if (cfg_.nav_window_s) {
      ledger_.set_nav_window(seconds_to_simtime(cfg_.nav_window_s->first),
                             seconds_to_simtime(cfg_.nav_window_s->second));
    }

    channel_ = std::make_unique<Channel>(scheduler_, cfg_.phy, cfg_.timing, topo.positions);
    if (cfg_.expect_single_collision_domain && !channel_->single_collision_domain()) {
      throw std::invalid_argument("topology is not a single collision domain under the configured thresholds");
    }

    for (int i = 0; i < cfg_.total_nodes(); ++i) {
      std::optional<AttackProfile> attack;
      if (i >= cfg_.first_attacker()) attack = cfg_.attackers[i - cfg_.first_attacker()];
      const std::uint64_t key = stream_key(cfg_, i);
      MacContext ctx{scheduler_, *channel_, cfg_.timing, cfg_.mac, ledger_};
      entities_.push_back(std::make_unique<MacEntity>(i, ctx, cfg_.defense,
                                                      node_stream_seed(cfg_.seed, key, StreamPurpose::Backoff),
                                                      attack));
      channel_->attach(i, entities_.back().get());
    }

    for (int i = 1; i < cfg_.total_nodes(); ++i) setup_traffic(i);
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const ScenarioConfig& config() const { return cfg_; }
  Scheduler& scheduler() { return scheduler_; }
  Channel& channel() { return *channel_; }
  MacEntity& entity(int i) { return *entities_.at(i); }
  const MacEntity& entity(int i) const { return *entities_.at(i); }
  int node_count() const { return static_cast<int>(entities_.size()); }
  const MetricsLedger& ledger() const { return ledger_; }

  std::set<MacAddress> attacker_addresses() const {
    std::set<MacAddress> out;
    for (int i = cfg_.first_attacker(); i < cfg_.total_nodes(); ++i) out.insert(MacAddress(i));
    return out;
  }

  /// Advances the run to `end` and returns a frozen copy of the ledger.
  MetricsLedger run_until(SimTime end) {
    scheduler_.run_until(end);
    std::vector<SimTime> nav;
    std::vector<std::int64_t> residual;
    for (const auto& e : entities_) {
      nav.push_back(e->nav_expiry());
      residual.push_back(static_cast<std::int64_t>(e->queue_size()));
    }
    ledger_.finalize(end, nav, residual);
    return ledger_;
  }

  MetricsLedger run() { return run_until(seconds_to_simtime(cfg_.run_seconds)); }

 private:
  void setup_traffic(int i) {
    MacEntity& e = *entities_[i];
    const MacAddress ap(0);
    std::optional<AttackProfile> attack = e.attack();
    if (attack && attack->mode == AttackMode::Flood) {
      e.start_flood(attack->flood_interval_us);
      return;
    }
    const std::int64_t bits = attack ? attack->actual_payload_bits : cfg_.traffic.payload_bits;
    bool saturated = cfg_.traffic.law == TrafficConfig::Law::Saturation;
    double mean_ms = cfg_.traffic.mean_interarrival_ms;
    if (attack && attack->mode == AttackMode::Chain) {
      saturated = true;
    } else if (attack && attack->mean_interarrival_ms) {
      saturated = false;
      mean_ms = *attack->mean_interarrival_ms;
    }
    if (saturated) {
      scheduler_.schedule(0, i, EventKind::PacketArrival, [&e, ap, bits] { e.set_saturated(ap, bits, 0); });
      return;
    }
    auto rng = std::make_shared<RngStream>(node_stream_seed(cfg_.seed, stream_key(cfg_, i), StreamPurpose::Traffic));
    const double mean_us = mean_ms * 1000.0;
    schedule_arrival(e, rng, mean_us, bits, 0);
  }

  void schedule_arrival(MacEntity& e, std::shared_ptr<RngStream> rng, double mean_us, std::int64_t bits,
                        SimTime from) {
    const SimTime at = from + static_cast<SimTime>(rng->exponential(mean_us)) + 1;
    scheduler_.schedule(at, e.index(), EventKind::PacketArrival, [this, &e, rng, mean_us, bits, at] {
      e.enqueue_payload(MacAddress(0), bits, at);
      schedule_arrival(e, rng, mean_us, bits, at);
    });
  }

  ScenarioConfig cfg_;
  Scheduler scheduler_;
  std::unique_ptr<Channel> channel_;
  MetricsLedger ledger_;
  std::vector<std::unique_ptr<MacEntity>> entities_;
};

}  // namespace rrdsim
