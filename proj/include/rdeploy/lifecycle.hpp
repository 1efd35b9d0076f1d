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

#ifndef RDEPLOY_LIFECYCLE_HPP_
#define RDEPLOY_LIFECYCLE_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rdeploy/actions.hpp"
#include "rdeploy/model.hpp"

namespace rdeploy {

/// Simulated time units.
using SimTime = std::int64_t;

enum class ComponentState { Absent, Instantiated, Connected, Active, Deactivated, Failed };

inline const char* to_string(ComponentState s) {
  switch (s) {
    case ComponentState::Absent: return "Absent";
    case ComponentState::Instantiated: return "Instantiated";
    case ComponentState::Connected: return "Connected";
    case ComponentState::Active: return "Active";
    case ComponentState::Deactivated: return "Deactivated";
    case ComponentState::Failed: return "Failed";
  }
  return "?";
}

inline std::optional<ComponentState> component_state_from_string(const std::string& s) {
  for (auto st : {ComponentState::Absent, ComponentState::Instantiated, ComponentState::Connected,
                  ComponentState::Active, ComponentState::Deactivated, ComponentState::Failed}) {
    if (s == to_string(st)) return st;
  }
  return std::nullopt;
}

/// The transition table. Destroy of a never-activated incarnation
/// (Instantiated/Connected -> Absent) is allowed so an interrupted
/// deployment can be dismantled.
inline bool is_legal_transition(ComponentState from, ComponentState to) {
  using S = ComponentState;
  if (to == S::Failed) return from != S::Failed;
  switch (from) {
    case S::Absent: return to == S::Instantiated;
    case S::Instantiated: return to == S::Connected || to == S::Absent;
    case S::Connected: return to == S::Active || to == S::Absent;
    case S::Active: return to == S::Deactivated;
    case S::Deactivated: return to == S::Connected || to == S::Absent;
    case S::Failed: return to == S::Absent;
  }
  return false;
}

enum class ConnectionStatus { Established, Severed };

inline const char* to_string(ConnectionStatus s) {
  return s == ConnectionStatus::Established ? "Established" : "Severed";
}

struct ConnectionRecord {
  Connection connection;
  NodeId node;  // node of the owning endpoint
  ConnectionStatus status = ConnectionStatus::Established;

  friend bool operator==(const ConnectionRecord&, const ConnectionRecord&) = default;
};

/// Status of the application over the cluster at one instant.
struct ConfigurationState {
  SimTime time = 0;
  std::map<ComponentId, ComponentState> comp_states;  // missing means Absent
  std::map<ComponentId, NodeId> host;                 // non-Absent components
  NodeMapping mapping;
  std::map<std::string, ConnectionRecord> connections;  // by Connection::key()
  std::set<std::pair<std::string, NodeId>> processes;   // (group id, node)
  std::map<NodeId, NodeStatus> node_status;

  ComponentState state(const ComponentId& c) const {
    auto it = comp_states.find(c);
    return it == comp_states.end() ? ComponentState::Absent : it->second;
  }

  std::optional<NodeId> host_of(const ComponentId& c) const {
    auto it = host.find(c);
    if (it == host.end()) return std::nullopt;
    return it->second;
  }

  bool online(const NodeId& n) const {
    auto it = node_status.find(n);
    return it != node_status.end() && it->second == NodeStatus::Online;
  }

  bool established(const std::string& key) const {
    auto it = connections.find(key);
    return it != connections.end() && it->second.status == ConnectionStatus::Established;
  }

  /// Components hosted on `node` (non-Absent), sorted.
  std::vector<ComponentId> hosted_on(const NodeId& node) const {
    std::vector<ComponentId> out;
    for (const auto& [c, n] : host) {
      if (n == node && state(c) != ComponentState::Absent) out.push_back(c);
    }
    return out;
  }

  /// Drops Absent entries so equal deployments compare equal.
  void normalize() {
    for (auto it = comp_states.begin(); it != comp_states.end();) {
      if (it->second == ComponentState::Absent) {
        host.erase(it->first);
        it = comp_states.erase(it);
      } else {
        ++it;
      }
    }
  }

  friend bool operator==(const ConfigurationState&, const ConfigurationState&) = default;
};

/// Fresh state: every component Absent, all cluster nodes at their status.
inline ConfigurationState initial_configuration(const Cluster& cluster, NodeMapping mapping = {}) {
  ConfigurationState cfg;
  cfg.mapping = std::move(mapping);
  for (const auto& n : cluster.nodes) cfg.node_status[n.id] = n.status;
  return cfg;
}

/// True when every component of `c`'s required set is established.
inline bool connections_complete(const Application& app, const ConfigurationState& cfg,
                                 const ComponentId& c) {
  for (const auto& conn : required_connections(app, c)) {
    if (!cfg.established(conn.key())) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Applying actions

enum class ApplyOutcome { Ack, IdempotentAck, Refused };

enum class RefusalKind { IllegalTransition, WrongNode, NodeOffline, ProcessNotRunning, UnknownSubject };

inline const char* to_string(RefusalKind k) {
  switch (k) {
    case RefusalKind::IllegalTransition: return "IllegalTransition";
    case RefusalKind::WrongNode: return "WrongNode";
    case RefusalKind::NodeOffline: return "NodeOffline";
    case RefusalKind::ProcessNotRunning: return "ProcessNotRunning";
    case RefusalKind::UnknownSubject: return "UnknownSubject";
  }
  return "?";
}

struct Transition {
  ComponentId component;
  ComponentState from;
  ComponentState to;
  NodeId node;

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct ApplyResult {
  ApplyOutcome outcome = ApplyOutcome::Ack;
  std::optional<RefusalKind> refusal;
  std::optional<ComponentState> from;  // subject state when refused
  std::vector<Transition> transitions;

  bool accepted() const { return outcome != ApplyOutcome::Refused; }
};

namespace detail {

inline ApplyResult refuse(RefusalKind kind, std::optional<ComponentState> from = std::nullopt) {
  ApplyResult r;
  r.outcome = ApplyOutcome::Refused;
  r.refusal = kind;
  r.from = from;
  return r;
}

inline ApplyResult idempotent() {
  ApplyResult r;
  r.outcome = ApplyOutcome::IdempotentAck;
  return r;
}

inline void move_to(ConfigurationState& cfg, ApplyResult& r, const ComponentId& c,
                    ComponentState to, const NodeId& node) {
  auto from = cfg.state(c);
  r.transitions.push_back({c, from, to, node});
  if (to == ComponentState::Absent) {
    cfg.comp_states.erase(c);
    cfg.host.erase(c);
  } else {
    cfg.comp_states[c] = to;
    cfg.host[c] = node;
  }
}

}  // namespace detail

/// Applies one action to `cfg` following the transition table. The caller
/// checks node liveness; this checks subject state and placement only.
inline ApplyResult apply_to(ConfigurationState& cfg, const Application& app,
                            const std::vector<ProcessGroup>& groups, const DeployAction& action) {
  using S = ComponentState;
  const NodeId& node = action.node;

  auto group_exists = [&](const std::string& gid) {
    for (const auto& g : groups) {
      if (g.id == gid) return true;
    }
    return false;
  };

  switch (action.kind) {
    case ActionKind::StartProcess: {
      if (!group_exists(action.subject)) return detail::refuse(RefusalKind::UnknownSubject);
      if (cfg.processes.count({action.subject, node})) return detail::idempotent();
      cfg.processes.insert({action.subject, node});
      return {};
    }
    case ActionKind::StopProcess: {
      if (!cfg.processes.count({action.subject, node})) return detail::idempotent();
      for (const auto& g : groups) {
        if (g.id != action.subject) continue;
        for (const auto& m : g.members) {
          if (cfg.state(m) != S::Absent && cfg.host_of(m) == node) {
            return detail::refuse(RefusalKind::IllegalTransition, cfg.state(m));
          }
        }
      }
      cfg.processes.erase({action.subject, node});
      return {};
    }
    case ActionKind::Connect: {
      if (!action.connection) return detail::refuse(RefusalKind::UnknownSubject);
      const auto& conn = *action.connection;
      if (!app.find(conn.owner)) return detail::refuse(RefusalKind::UnknownSubject);
      auto s = cfg.state(conn.owner);
      if (s == S::Absent || s == S::Failed) return detail::refuse(RefusalKind::IllegalTransition, s);
      if (cfg.host_of(conn.owner) != node) return detail::refuse(RefusalKind::WrongNode, s);
      if (cfg.established(conn.key())) return detail::idempotent();
      if (s == S::Active) return detail::refuse(RefusalKind::IllegalTransition, s);
      cfg.connections[conn.key()] = ConnectionRecord{conn, node, ConnectionStatus::Established};
      ApplyResult r;
      if (s == S::Instantiated && connections_complete(app, cfg, conn.owner)) {
        detail::move_to(cfg, r, conn.owner, S::Connected, node);
      }
      return r;
    }
    case ActionKind::Disconnect: {
      auto it = cfg.connections.find(action.subject);
      if (it == cfg.connections.end()) return detail::idempotent();
      const auto owner = it->second.connection.owner;
      auto s = cfg.state(owner);
      if (it->second.node != node) return detail::refuse(RefusalKind::WrongNode, s);
      if (s == S::Active) return detail::refuse(RefusalKind::IllegalTransition, s);
      cfg.connections.erase(it);
      return {};
    }
    default:
      break;
  }

  // Component lifecycle actions.
  const ComponentId& c = action.subject;
  if (!app.find(c)) return detail::refuse(RefusalKind::UnknownSubject);
  const S s = cfg.state(c);
  if (s != S::Absent && cfg.host_of(c) != node) return detail::refuse(RefusalKind::WrongNode, s);

  ApplyResult r;
  switch (action.kind) {
    case ActionKind::Instantiate:
      if (s == S::Failed) return detail::refuse(RefusalKind::IllegalTransition, s);
      if (s != S::Absent) return detail::idempotent();
      if (!cfg.processes.count({process_group_of(groups, c), node})) {
        return detail::refuse(RefusalKind::ProcessNotRunning, s);
      }
      detail::move_to(cfg, r, c, S::Instantiated, node);
      if (connections_complete(app, cfg, c)) detail::move_to(cfg, r, c, S::Connected, node);
      return r;
    case ActionKind::Activate:
      if (s == S::Active) return detail::idempotent();
      if ((s != S::Connected && s != S::Deactivated) || !connections_complete(app, cfg, c)) {
        return detail::refuse(RefusalKind::IllegalTransition, s);
      }
      if (s == S::Deactivated) detail::move_to(cfg, r, c, S::Connected, node);
      detail::move_to(cfg, r, c, S::Active, node);
      return r;
    case ActionKind::Deactivate:
      if (s == S::Deactivated) return detail::idempotent();
      if (s != S::Active) return detail::refuse(RefusalKind::IllegalTransition, s);
      detail::move_to(cfg, r, c, S::Deactivated, node);
      return r;
    case ActionKind::Destroy: {
      if (s == S::Absent) return detail::idempotent();
      if (s == S::Active) return detail::refuse(RefusalKind::IllegalTransition, s);
      const auto host = *cfg.host_of(c);
      for (auto it = cfg.connections.begin(); it != cfg.connections.end();) {
        if (it->second.connection.owner == c) {
          it = cfg.connections.erase(it);
        } else {
          ++it;
        }
      }
      detail::move_to(cfg, r, c, S::Absent, host);
      return r;
    }
    default:
      return detail::refuse(RefusalKind::UnknownSubject);
  }
}

// ---------------------------------------------------------------------------
// Node crash

class UnknownNode : public Error {
 public:
  explicit UnknownNode(const NodeId& n) : Error("unknown node '" + n + "'"), node_(n) {}
  const NodeId& node() const { return node_; }

 private:
  NodeId node_;
};

class AlreadyOffline : public Error {
 public:
  explicit AlreadyOffline(const NodeId& n) : Error("node '" + n + "' is already offline"), node_(n) {}
  const NodeId& node() const { return node_; }

 private:
  NodeId node_;
};

/// Takes `node` offline: hosted components fail, and every connection owned
/// by a hosted component or pointing at one is severed.
inline ConfigurationState crash_node(ConfigurationState cfg, const NodeId& node) {
  auto it = cfg.node_status.find(node);
  if (it == cfg.node_status.end()) throw UnknownNode(node);
  if (it->second == NodeStatus::Offline) throw AlreadyOffline(node);
  it->second = NodeStatus::Offline;

  std::set<ComponentId> lost;
  for (const auto& c : cfg.hosted_on(node)) {
    lost.insert(c);
    cfg.comp_states[c] = ComponentState::Failed;
  }
  for (auto& [key, rec] : cfg.connections) {
    bool touches = rec.node == node || lost.count(rec.connection.owner) > 0 ||
                   (rec.connection.kind == ConnectionKind::Dependency &&
                    lost.count(rec.connection.peer) > 0);
    if (touches) rec.status = ConnectionStatus::Severed;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Node-level deployment manager

struct Heartbeat {
  NodeId node;
  SimTime time;

  friend bool operator==(const Heartbeat&, const Heartbeat&) = default;
};

/// Per-node Deployment Manager: applies actions to the components hosted on
/// its node and emits periodic heartbeats. Holds only local truth.
class NodeDm {
 public:
  NodeDm(NodeId id, std::shared_ptr<const Application> app, SimTime heartbeat_period,
         SimTime last_sent = 0)
      : id_(std::move(id)),
        app_(std::move(app)),
        groups_(process_groups(*app_)),
        period_(heartbeat_period),
        last_sent_(last_sent) {
    local_.node_status[id_] = NodeStatus::Online;
  }

  const NodeId& id() const { return id_; }
  bool online() const { return local_.online(id_); }
  SimTime period() const { return period_; }
  SimTime last_sent() const { return last_sent_; }
  const ConfigurationState& local() const { return local_; }

  ComponentState state(const ComponentId& c) const { return local_.state(c); }

  /// Applies `action` to local state. The whole action is applied or nothing.
  ApplyResult apply_action(const DeployAction& action) {
    if (!online()) return detail::refuse(RefusalKind::NodeOffline);
    if (action.node != id_) return detail::refuse(RefusalKind::WrongNode);
    return apply_to(local_, *app_, groups_, action);
  }

  std::optional<Heartbeat> heartbeat_due(SimTime now) {
    if (!online() || now < last_sent_ + period_) return std::nullopt;
    last_sent_ = now;
    return Heartbeat{id_, now};
  }

  /// Marks dependency connections whose server is in `lost` as severed.
  void sever_peers(const std::set<ComponentId>& lost) {
    for (auto& [_, rec] : local_.connections) {
      if (rec.connection.kind == ConnectionKind::Dependency && lost.count(rec.connection.peer)) {
        rec.status = ConnectionStatus::Severed;
      }
    }
  }

  /// Crash-stop: the node goes offline and every local component fails.
  void crash() { local_ = crash_node(std::move(local_), id_); }

 private:
  NodeId id_;
  std::shared_ptr<const Application> app_;
  std::vector<ProcessGroup> groups_;
  SimTime period_;
  SimTime last_sent_;
  ConfigurationState local_;
};

}  // namespace rdeploy

#endif  // RDEPLOY_LIFECYCLE_HPP_
