// Copyright 2026 The rdeploy Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RDEPLOY_SIMNET_HPP_
#define RDEPLOY_SIMNET_HPP_

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rdeploy/actions.hpp"
#include "rdeploy/lifecycle.hpp"

namespace rdeploy::sim {

/// Message delay: fixed when min == max, otherwise uniform over [min, max].
struct DelayModel {
  SimTime min = 1;
  SimTime max = 1;

  static DelayModel fixed(SimTime d) { return {d, d}; }
  static DelayModel uniform(SimTime lo, SimTime hi) { return {lo, hi}; }
  bool is_fixed() const { return min == max; }
  friend bool operator==(const DelayModel&, const DelayModel&) = default;
};

struct CrashInjection {
  NodeId node;
  SimTime time = 0;
  friend bool operator==(const CrashInjection&, const CrashInjection&) = default;
};

struct Scenario {
  std::vector<CrashInjection> crashes;
  DelayModel delay;
  std::uint64_t seed = 0;
  SimTime horizon = 10000;
  SimTime heartbeat_period = 10;
  int miss_threshold = 3;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

class InvalidScenario : public Error {
 public:
  using Error::Error;
};

inline void validate_scenario(const Scenario& s) {
  if (s.delay.min < 0 || s.delay.min > s.delay.max) throw InvalidScenario("delay range must satisfy 0 <= min <= max");
  if (s.horizon < 0) throw InvalidScenario("horizon must be non-negative");
  if (s.heartbeat_period <= 0) throw InvalidScenario("heartbeat period must be positive");
  if (s.miss_threshold <= 0) throw InvalidScenario("miss threshold must be positive");
  for (const auto& c : s.crashes) {
    if (c.time < 0) throw InvalidScenario("crash time of '" + c.node + "' is negative");
  }
}

/// The single pseudo-random stream of a run. Range reduction is done here
/// rather than with <random> distributions so draws are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [lo, hi].
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    const auto limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Messages between deployment managers

enum class MessageKind { Dispatch, Ack, Heartbeat, QueryState, StateReport, LeaderClaim };

inline const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::Dispatch: return "Dispatch";
    case MessageKind::Ack: return "Ack";
    case MessageKind::Heartbeat: return "Heartbeat";
    case MessageKind::QueryState: return "QueryState";
    case MessageKind::StateReport: return "StateReport";
    case MessageKind::LeaderClaim: return "LeaderClaim";
  }
  return "?";
}

struct DmMessage {
  MessageKind kind = MessageKind::Heartbeat;
  NodeId from;
  NodeId to;
  SimTime sent = 0;
  std::uint64_t ref = 0;  // dispatch id echoed by its ack; query id for reports
  std::optional<DeployAction> action;
  ApplyOutcome outcome = ApplyOutcome::Ack;
  std::optional<ConfigurationState> report;
};

// ---------------------------------------------------------------------------
// Event queue

enum class TimerKind { Start, Heartbeat, DetectorCheck };

struct Deliver {
  DmMessage message;
};
struct TimerFire {
  NodeId node;
  TimerKind kind = TimerKind::Heartbeat;
};
struct Crash {
  NodeId node;
};

using Payload = std::variant<Deliver, TimerFire, Crash>;

struct SimEvent {
  SimTime time = 0;
  std::uint64_t sequence = 0;
  Payload payload;
};

/// Events leave in (time, sequence) order; sequence numbers are unique.
class EventQueue {
 public:
  SimEvent schedule(SimTime time, Payload payload) {
    SimEvent e{time, next_seq_++, std::move(payload)};
    heap_.push(e);
    return e;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  SimTime next_time() const { return heap_.top().time; }

  SimEvent pop() {
    SimEvent e = heap_.top();
    heap_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

/// Point-to-point network: seeded delays with FIFO delivery per ordered pair.
class Network {
 public:
  Network(DelayModel delay, Rng& rng) : delay_(delay), rng_(rng) {}

  /// Schedules delivery of `msg` at now + a seeded delay, never ahead of an
  /// earlier message on the same ordered pair.
  SimEvent send(EventQueue& queue, DmMessage msg, SimTime now) {
    msg.sent = now;
    SimTime at = now + rng_.uniform(delay_.min, delay_.max);
    auto& last = last_delivery_[{msg.from, msg.to}];
    if (at < last) at = last;
    last = at;
    return queue.schedule(at, Deliver{std::move(msg)});
  }

  const DelayModel& delay() const { return delay_; }

 private:
  DelayModel delay_;
  Rng& rng_;
  std::map<std::pair<NodeId, NodeId>, SimTime> last_delivery_;
};

}  // namespace rdeploy::sim

#endif  // RDEPLOY_SIMNET_HPP_
