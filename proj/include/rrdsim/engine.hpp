#pragma once

// Discrete-event kernel: integer microsecond clock, ordered event queue with
// cancellable handles, and portable seeded random streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace rrdsim {

/// Microseconds since simulation start.
using SimTime = std::int64_t;
/// A span of simulated time in microseconds.
using Micros = std::int64_t;

inline constexpr Micros kMicrosPerSecond = 1'000'000;

inline constexpr SimTime seconds_to_simtime(double seconds) {
  return static_cast<SimTime>(seconds * static_cast<double>(kMicrosPerSecond) + 0.5);
}

enum class EventKind : std::uint8_t {
  TxStart,
  TxEnd,
  TimerExpiry,
  NavExpiry,
  BackoffSlot,
  PacketArrival,
};

inline const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::TxStart: return "tx-start";
    case EventKind::TxEnd: return "tx-end";
    case EventKind::TimerExpiry: return "timer-expiry";
    case EventKind::NavExpiry: return "nav-expiry";
    case EventKind::BackoffSlot: return "backoff-slot";
    case EventKind::PacketArrival: return "packet-arrival";
  }
  return "?";
}

/// Event target used for channel-owned events.
inline constexpr std::int32_t kChannelTarget = -1;

struct EventRecord {
  SimTime fire_at = 0;
  std::int32_t target = kChannelTarget;
  EventKind kind = EventKind::TimerExpiry;
  std::uint64_t seq = 0;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

class EventHandle {
 public:
  EventHandle() = default;
  explicit EventHandle(std::uint64_t seq) : seq_(seq) {}

  bool valid() const { return seq_ != 0; }
  std::uint64_t seq() const { return seq_; }

 private:
  std::uint64_t seq_ = 0;
};

/// Single-threaded event scheduler. Events with equal fire times run in
/// insertion order.
class Scheduler {
 public:
  using Action = std::function<void()>;

  Scheduler() = default;
  Scheduler(const Scheduler&) = delete;
  Scheduler& operator=(const Scheduler&) = delete;

  SimTime now() const { return now_; }

  EventHandle schedule(SimTime at, std::int32_t target, EventKind kind, Action action) {
    if (at < now_) {
      throw std::logic_error("Scheduler: event scheduled in the past (at=" + std::to_string(at) +
                             ", now=" + std::to_string(now_) + ")");
    }
    const std::uint64_t seq = ++next_seq_;
    heap_.push_back(Entry{at, seq, target, kind, std::move(action)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    live_.insert(seq);
    return EventHandle(seq);
  }

  EventHandle schedule_in(Micros delay, std::int32_t target, EventKind kind, Action action) {
    return schedule(now_ + delay, target, kind, std::move(action));
  }

  /// True iff the event had not fired yet; a cancelled event never fires.
  bool cancel(EventHandle handle) {
    if (!handle.valid()) return false;
    return live_.erase(handle.seq()) > 0;
  }

  bool pending(EventHandle handle) const {
    return handle.valid() && live_.count(handle.seq()) > 0;
  }

  /// Dispatches every live event with fire_at <= end, then parks the clock at end.
  void run_until(SimTime end) {
    if (end < now_) throw std::logic_error("Scheduler: run_until end precedes now");
    while (!heap_.empty() && heap_.front().at <= end) {
      std::pop_heap(heap_.begin(), heap_.end(), Later{});
      Entry entry = std::move(heap_.back());
      heap_.pop_back();
      if (live_.erase(entry.seq) == 0) continue;
      now_ = entry.at;
      ++dispatched_;
      if (log_enabled_) log_.push_back(EventRecord{entry.at, entry.target, entry.kind, entry.seq});
      entry.action();
    }
    now_ = end;
  }

  std::uint64_t dispatched() const { return dispatched_; }
  std::size_t pending_count() const { return live_.size(); }

  void enable_log(bool on) { log_enabled_ = on; }
  const std::vector<EventRecord>& log() const { return log_; }

 private:
  struct Entry {
    SimTime at;
    std::uint64_t seq;
    std::int32_t target;
    EventKind kind;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  std::vector<Entry> heap_;
  std::unordered_set<std::uint64_t> live_;
  bool log_enabled_ = false;
  std::vector<EventRecord> log_;
};

// Randomness --------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of an independent substream; stable under adding or removing other streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t state = master;
  const std::uint64_t a = splitmix64(state);
  state = a ^ (stream * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL);
  return splitmix64(state);
}

/// Purposes a node draws randomness for; each gets its own substream.
enum class StreamPurpose : std::uint64_t { Placement = 1, Backoff = 2, Traffic = 3 };

inline std::uint64_t node_stream_seed(std::uint64_t master, std::uint64_t node_key, StreamPurpose purpose) {
  return derive_seed(master, (node_key << 4) | static_cast<std::uint64_t>(purpose));
}

/// mt19937_64 with hand-written distributions: the standard distributions are
/// implementation-defined, which would break cross-platform reproducibility.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [lo, hi], unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    if (hi < lo) throw std::invalid_argument("RngStream::uniform_int: empty range");
    const std::uint64_t span = hi - lo;
    if (span == UINT64_MAX) return next();
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return lo + x % range;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rrdsim
