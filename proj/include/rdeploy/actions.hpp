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

#ifndef RDEPLOY_ACTIONS_HPP_
#define RDEPLOY_ACTIONS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdeploy/model.hpp"

namespace rdeploy {

/// virtual node id -> physical node id
struct NodeMapping {
  std::map<VirtualNodeId, NodeId> binding;

  const NodeId* find(const VirtualNodeId& vnode) const {
    auto it = binding.find(vnode);
    return it == binding.end() ? nullptr : &it->second;
  }
  friend bool operator==(const NodeMapping&, const NodeMapping&) = default;
};

/// Physical node a component is bound to under `mapping`.
inline NodeId node_of(const Application& app, const NodeMapping& mapping,
                      const ComponentId& component) {
  auto s = app.sigma.find(component);
  if (s == app.sigma.end()) throw Error("component '" + component + "' has no virtual node");
  auto b = mapping.binding.find(s->second);
  if (b == mapping.binding.end()) {
    throw Error("virtual node '" + s->second + "' is not mapped");
  }
  return b->second;
}

// ---------------------------------------------------------------------------
// Connections

enum class ConnectionKind { Dependency, Topic };

/// One endpoint-owned connection. A dependency connection is owned by the
/// client and binds its receptacle to the server's facet; a topic connection
/// is the registration of one publisher or subscriber port.
struct Connection {
  ConnectionKind kind = ConnectionKind::Dependency;
  ComponentId owner;
  std::string port;
  PortKind role = PortKind::Receptacle;
  std::string contract;
  ComponentId peer;       // dependency only
  std::string peer_port;  // dependency only

  std::string key() const {
    if (kind == ConnectionKind::Dependency) {
      return "dep:" + owner + "." + port + "->" + peer + "." + peer_port;
    }
    return std::string(role == PortKind::Publisher ? "pub:" : "sub:") + owner + "." + port +
           "@" + contract;
  }
  friend bool operator==(const Connection&, const Connection&) = default;
};

/// Connections `component` must own before it may be activated, sorted by key.
inline std::vector<Connection> required_connections(const Application& app,
                                                    const ComponentId& component) {
  const auto& c = app.at(component);
  std::map<std::string, Connection> out;
  for (const auto& server_id : app.servers_of(component)) {
    const auto* server = app.find(server_id);
    if (!server) continue;
    auto ports = detail::matching_ports(c, *server);
    if (!ports) continue;
    Connection conn{ConnectionKind::Dependency, c.id, ports->first->name, PortKind::Receptacle,
                    ports->first->contract, server->id, ports->second->name};
    out.emplace(conn.key(), conn);
  }
  for (const auto& p : c.ports) {
    if (!p.is_topic()) continue;
    Connection conn{ConnectionKind::Topic, c.id, p.name, p.kind, p.contract, {}, {}};
    out.emplace(conn.key(), conn);
  }
  std::vector<Connection> v;
  for (auto& [_, conn] : out) v.push_back(std::move(conn));
  return v;
}

// ---------------------------------------------------------------------------
// Deployment actions

enum class ActionKind {
  StartProcess,
  Instantiate,
  Connect,
  Activate,
  Deactivate,
  Disconnect,
  Destroy,
  StopProcess,
};

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::StartProcess: return "StartProcess";
    case ActionKind::Instantiate: return "Instantiate";
    case ActionKind::Connect: return "Connect";
    case ActionKind::Activate: return "Activate";
    case ActionKind::Deactivate: return "Deactivate";
    case ActionKind::Disconnect: return "Disconnect";
    case ActionKind::Destroy: return "Destroy";
    case ActionKind::StopProcess: return "StopProcess";
  }
  return "?";
}

inline std::optional<ActionKind> action_kind_from_string(const std::string& s) {
  for (auto k : {ActionKind::StartProcess, ActionKind::Instantiate, ActionKind::Connect,
                 ActionKind::Activate, ActionKind::Deactivate, ActionKind::Disconnect,
                 ActionKind::Destroy, ActionKind::StopProcess}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

/// Subject is a process group id for process actions, a component id for
/// lifecycle actions, and the connection key for Connect/Disconnect.
struct DeployAction {
  ActionKind kind = ActionKind::Instantiate;
  std::string subject;
  NodeId node;
  std::optional<Connection> connection;

  /// Component the action changes, if any (owner for connection actions).
  std::optional<ComponentId> component() const {
    switch (kind) {
      case ActionKind::StartProcess:
      case ActionKind::StopProcess:
        return std::nullopt;
      case ActionKind::Connect:
      case ActionKind::Disconnect:
        if (connection) return connection->owner;
        return std::nullopt;
      default:
        return subject;
    }
  }
  friend bool operator==(const DeployAction&, const DeployAction&) = default;
};

inline std::string to_string(const DeployAction& a) {
  return std::string(to_string(a.kind)) + "(" + a.subject + ")@" + a.node;
}

inline DeployAction make_action(ActionKind kind, std::string subject, NodeId node) {
  return DeployAction{kind, std::move(subject), std::move(node), std::nullopt};
}

inline DeployAction make_connection_action(ActionKind kind, const Connection& conn, NodeId node) {
  return DeployAction{kind, conn.key(), std::move(node), conn};
}

struct Phase {
  ActionKind kind;
  std::vector<DeployAction> actions;

  friend bool operator==(const Phase&, const Phase&) = default;
};

/// Ordered phases; every action of a phase is acknowledged before the next
/// phase starts. Used for deployment, teardown and reconfiguration alike.
struct DeploymentPlan {
  std::vector<Phase> phases;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& p : phases) n += p.actions.size();
    return n;
  }
  bool empty() const { return size() == 0; }

  std::vector<DeployAction> flatten() const {
    std::vector<DeployAction> out;
    for (const auto& p : phases) out.insert(out.end(), p.actions.begin(), p.actions.end());
    return out;
  }

  const Phase* phase(ActionKind kind) const {
    for (const auto& p : phases) {
      if (p.kind == kind) return &p;
    }
    return nullptr;
  }
  friend bool operator==(const DeploymentPlan&, const DeploymentPlan&) = default;
};

}  // namespace rdeploy

#endif  // RDEPLOY_ACTIONS_HPP_
