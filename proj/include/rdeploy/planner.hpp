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

#ifndef RDEPLOY_PLANNER_HPP_
#define RDEPLOY_PLANNER_HPP_

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rdeploy/actions.hpp"
#include "rdeploy/lifecycle.hpp"
#include "rdeploy/model.hpp"

namespace rdeploy {

// ---------------------------------------------------------------------------
// Node mapping

enum class PlacementFailure { KindMismatch, InsufficientMemory, InsufficientCpu, MissingHardware };

inline const char* to_string(PlacementFailure r) {
  switch (r) {
    case PlacementFailure::KindMismatch: return "KindMismatch";
    case PlacementFailure::InsufficientMemory: return "InsufficientMemory";
    case PlacementFailure::InsufficientCpu: return "InsufficientCpu";
    case PlacementFailure::MissingHardware: return "MissingHardware";
  }
  return "?";
}

class NoFeasibleNode : public Error {
 public:
  NoFeasibleNode(VirtualNodeId vnode, PlacementFailure reason)
      : Error("NoFeasibleNode{" + vnode + ", " + to_string(reason) + "}"),
        vnode_(std::move(vnode)),
        reason_(reason) {}
  const VirtualNodeId& vnode() const { return vnode_; }
  PlacementFailure reason() const { return reason_; }

 private:
  VirtualNodeId vnode_;
  PlacementFailure reason_;
};

/// Aggregate demand of the components assigned to one virtual node.
struct VirtualNodeDemand {
  VirtualNodeId id;
  NodeKind kind;
  std::uint64_t mem = 0;
  std::uint64_t cpu = 0;
  HardwareSet hw;
};

inline std::vector<VirtualNodeDemand> virtual_node_demands(const Application& app) {
  std::map<VirtualNodeId, VirtualNodeDemand> by_id;
  for (const auto& [v, kind] : app.virtual_nodes) by_id[v] = {v, kind, 0, 0, {}};
  for (const auto& c : app.components) {
    auto s = app.sigma.find(c.id);
    if (s == app.sigma.end()) continue;
    auto& d = by_id[s->second];
    d.id = s->second;
    d.mem += c.mem_demand;
    d.cpu += c.cpu_demand;
    d.hw.insert(c.hw_required.begin(), c.hw_required.end());
  }
  std::vector<VirtualNodeDemand> out;
  for (auto& [_, d] : by_id) out.push_back(std::move(d));
  // First-fit-decreasing order: heaviest memory first, ties by id.
  std::sort(out.begin(), out.end(), [](const VirtualNodeDemand& a, const VirtualNodeDemand& b) {
    if (a.mem != b.mem) return a.mem > b.mem;
    return a.id < b.id;
  });
  return out;
}

namespace detail {

struct Capacity {
  std::uint64_t mem = 0;
  std::uint64_t cpu = 0;
};

// 0 = wrong kind or offline, 1 = hardware missing, 2 = memory short,
// 3 = cpu short, 4 = fits.
inline int fit_level(const VirtualNodeDemand& d, const PhysicalNode& n, const Capacity& left) {
  if (n.status != NodeStatus::Online || n.kind != d.kind) return 0;
  if (!std::includes(n.hw_tags.begin(), n.hw_tags.end(), d.hw.begin(), d.hw.end())) return 1;
  if (left.mem < d.mem) return 2;
  if (left.cpu < d.cpu) return 3;
  return 4;
}

inline PlacementFailure reason_for_level(int level) {
  switch (level) {
    case 0: return PlacementFailure::KindMismatch;
    case 1: return PlacementFailure::MissingHardware;
    case 2: return PlacementFailure::InsufficientMemory;
    default: return PlacementFailure::InsufficientCpu;
  }
}

/// Depth-first search in first-fit-decreasing order; the first solution it
/// finds is exactly the first-fit assignment whenever that one succeeds.
class MappingSearch {
 public:
  MappingSearch(const std::vector<VirtualNodeDemand>& todo, const std::vector<const PhysicalNode*>& nodes,
                std::map<NodeId, Capacity> left, std::size_t budget)
      : todo_(todo), nodes_(nodes), left_(std::move(left)), budget_(budget) {}

  bool run() { return step(0); }

  const std::map<VirtualNodeId, NodeId>& result() const { return chosen_; }
  const std::optional<std::pair<VirtualNodeId, int>>& first_dead_end() const { return dead_end_; }

 private:
  bool step(std::size_t i) {
    if (i == todo_.size()) return true;
    if (budget_ == 0) return false;
    --budget_;
    const auto& d = todo_[i];
    int best = -1;
    for (const auto* n : nodes_) {
      auto& cap = left_[n->id];
      int level = fit_level(d, *n, cap);
      best = std::max(best, level);
      if (level < 4) continue;
      cap.mem -= d.mem;
      cap.cpu -= d.cpu;
      chosen_[d.id] = n->id;
      if (step(i + 1)) return true;
      chosen_.erase(d.id);
      cap.mem += d.mem;
      cap.cpu += d.cpu;
    }
    if (best < 4 && !dead_end_) dead_end_ = std::make_pair(d.id, best);
    return false;
  }

  const std::vector<VirtualNodeDemand>& todo_;
  const std::vector<const PhysicalNode*>& nodes_;
  std::map<NodeId, Capacity> left_;
  std::size_t budget_;
  std::map<VirtualNodeId, NodeId> chosen_;
  std::optional<std::pair<VirtualNodeId, int>> dead_end_;
};

}  // namespace detail

/// Binds every virtual node (except `skip`) to an Online physical node of the
/// same kind with the required hardware and enough remaining capacity.
/// Feasible pinned bindings are kept unchanged; the rest are placed first-fit
/// decreasing, backtracking only when first-fit gets stuck.
inline NodeMapping map_nodes(const Application& app, const Cluster& cluster,
                             const NodeMapping& pinned = {},
                             const std::set<VirtualNodeId>& skip = {}) {
  auto demands = virtual_node_demands(app);
  std::vector<const PhysicalNode*> nodes;
  for (const auto& n : cluster.nodes) nodes.push_back(&n);
  std::sort(nodes.begin(), nodes.end(),
            [](const PhysicalNode* a, const PhysicalNode* b) { return a->id < b->id; });

  std::map<NodeId, detail::Capacity> left;
  for (const auto* n : nodes) left[n->id] = {n->mem_capacity, n->cpu_capacity};

  NodeMapping out;
  std::vector<VirtualNodeDemand> todo;
  for (const auto& d : demands) {
    if (skip.count(d.id)) continue;
    const NodeId* pin = pinned.find(d.id);
    const PhysicalNode* target = pin ? cluster.find(*pin) : nullptr;
    if (target && detail::fit_level(d, *target, left[target->id]) == 4) {
      left[target->id].mem -= d.mem;
      left[target->id].cpu -= d.cpu;
      out.binding[d.id] = target->id;
    } else {
      todo.push_back(d);
    }
  }

  detail::MappingSearch search(todo, nodes, left, 200000);
  if (!search.run()) {
    if (const auto& dead = search.first_dead_end()) {
      throw NoFeasibleNode(dead->first, detail::reason_for_level(dead->second));
    }
    // Budget exhausted without a dead end recorded: report the first vnode.
    throw NoFeasibleNode(todo.empty() ? VirtualNodeId{} : todo.front().id,
                         PlacementFailure::InsufficientMemory);
  }
  for (const auto& [v, n] : search.result()) out.binding[v] = n;
  return out;
}

// ---------------------------------------------------------------------------
// Resource feasibility

struct NodeUsage {
  NodeId node;
  std::vector<VirtualNodeId> vnodes;
  std::uint64_t mem_used = 0;
  std::uint64_t mem_capacity = 0;
  std::uint64_t cpu_used = 0;
  std::uint64_t cpu_capacity = 0;
  double mem_utilization = 0.0;
  double cpu_utilization = 0.0;
};

struct ResourceViolation {
  NodeId node;
  PlacementFailure dimension;

  friend bool operator==(const ResourceViolation&, const ResourceViolation&) = default;
};

/// Informational only: flows crossing each link. Flows carry no declared
/// bandwidth, so nothing is enforced here.
struct LinkUsage {
  NodeId a;
  NodeId b;
  std::uint64_t bandwidth = 0;
  bool encrypted = false;
  std::size_t flows = 0;
  std::uint64_t declared_demand = 0;
};

struct ResourceReport {
  std::vector<NodeUsage> nodes;
  std::vector<ResourceViolation> violations;
  std::vector<LinkUsage> links;

  bool ok() const { return violations.empty(); }
  const NodeUsage* usage(const NodeId& n) const {
    for (const auto& u : nodes) {
      if (u.node == n) return &u;
    }
    return nullptr;
  }
};

inline ResourceReport check_resources(const Application& app, const NodeMapping& mapping,
                                      const Cluster& cluster) {
  ResourceReport report;
  std::map<NodeId, NodeUsage> usage;
  std::map<NodeId, HardwareSet> needed_hw;
  std::map<NodeId, std::set<NodeKind>> kinds;
  for (const auto& n : cluster.nodes) {
    usage[n.id] = NodeUsage{n.id, {}, 0, n.mem_capacity, 0, n.cpu_capacity, 0.0, 0.0};
  }
  for (const auto& [v, kind] : app.virtual_nodes) {
    const NodeId* n = mapping.find(v);
    if (!n) throw Error("virtual node '" + v + "' is not mapped");
    if (!cluster.find(*n)) throw UnknownNode(*n);
    usage[*n].vnodes.push_back(v);
    kinds[*n].insert(kind);
  }
  for (const auto& c : app.components) {
    NodeId n = node_of(app, mapping, c.id);
    usage[n].mem_used += c.mem_demand;
    usage[n].cpu_used += c.cpu_demand;
    needed_hw[n].insert(c.hw_required.begin(), c.hw_required.end());
  }
  auto fraction = [](std::uint64_t used, std::uint64_t cap) {
    if (cap == 0) return used == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return static_cast<double>(used) / static_cast<double>(cap);
  };
  for (const auto& id : cluster.node_ids()) {
    auto& u = usage[id];
    const auto& node = *cluster.find(id);
    u.mem_utilization = fraction(u.mem_used, u.mem_capacity);
    u.cpu_utilization = fraction(u.cpu_used, u.cpu_capacity);
    for (const auto& k : kinds[id]) {
      if (k != node.kind) {
        report.violations.push_back({id, PlacementFailure::KindMismatch});
        break;
      }
    }
    const auto& hw = needed_hw[id];
    if (!std::includes(node.hw_tags.begin(), node.hw_tags.end(), hw.begin(), hw.end())) {
      report.violations.push_back({id, PlacementFailure::MissingHardware});
    }
    if (u.mem_used > u.mem_capacity) {
      report.violations.push_back({id, PlacementFailure::InsufficientMemory});
    }
    if (u.cpu_used > u.cpu_capacity) {
      report.violations.push_back({id, PlacementFailure::InsufficientCpu});
    }
    report.nodes.push_back(u);
  }

  // Cross-node flows per link.
  std::map<std::pair<NodeId, NodeId>, std::size_t> crossing;
  auto count = [&](const ComponentId& x, const ComponentId& y) {
    NodeId a = node_of(app, mapping, x), b = node_of(app, mapping, y);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    ++crossing[{a, b}];
  };
  for (const auto& d : std::set<Dependency>(app.dependencies.begin(), app.dependencies.end())) {
    count(d.client, d.server);
  }
  for (const auto& p : app.components) {
    for (const auto& pp : p.ports) {
      if (pp.kind != PortKind::Publisher) continue;
      for (const auto& s : app.components) {
        if (s.id == p.id) continue;
        for (const auto& sp : s.ports) {
          if (sp.kind == PortKind::Subscriber && sp.contract == pp.contract) count(p.id, s.id);
        }
      }
    }
  }
  for (const auto& l : cluster.links) {
    auto key = l.a < l.b ? std::make_pair(l.a, l.b) : std::make_pair(l.b, l.a);
    auto it = crossing.find(key);
    report.links.push_back({l.a, l.b, l.bandwidth, l.encrypted, it == crossing.end() ? 0 : it->second, 0});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Label flow audit

/// One directed information flow between two components.
struct FlowEdge {
  ComponentId sender;
  ComponentId receiver;
  std::string channel;  // "request:<iface>", "reply:<iface>" or "topic:<name>"

  friend auto operator<=>(const FlowEdge&, const FlowEdge&) = default;
};

struct FlowViolation {
  FlowEdge edge;
  SecurityLabel sender_label;
  SecurityLabel receiver_label;

  friend bool operator==(const FlowViolation&, const FlowViolation&) = default;
};

struct FlowAudit {
  std::vector<FlowEdge> edges;
  std::vector<FlowViolation> violations;

  bool ok() const { return violations.empty(); }
};

inline std::string to_string(const FlowViolation& v) {
  return "FlowViolation{" + v.edge.sender + "[" + to_string(v.sender_label) + "] -> " +
         v.edge.receiver + "[" + to_string(v.receiver_label) + "] via " + v.edge.channel + "}";
}

/// Every information flow of the application: dependencies carry requests
/// and replies in both directions, topics flow publisher to subscriber.
inline std::vector<FlowEdge> information_flows(const Application& app) {
  std::set<FlowEdge> edges;
  for (const auto& d : std::set<Dependency>(app.dependencies.begin(), app.dependencies.end())) {
    const auto* client = app.find(d.client);
    const auto* server = app.find(d.server);
    if (!client || !server) continue;
    auto ports = detail::matching_ports(*client, *server);
    std::string iface = ports ? ports->first->contract : std::string{};
    edges.insert({d.client, d.server, "request:" + iface});
    edges.insert({d.server, d.client, "reply:" + iface});
  }
  for (const auto& p : app.components) {
    for (const auto& pp : p.ports) {
      if (pp.kind != PortKind::Publisher) continue;
      for (const auto& s : app.components) {
        if (s.id == p.id) continue;
        for (const auto& sp : s.ports) {
          if (sp.kind == PortKind::Subscriber && sp.contract == pp.contract) {
            edges.insert({p.id, s.id, "topic:" + pp.contract});
          }
        }
      }
    }
  }
  return {edges.begin(), edges.end()};
}

/// Flags every flow whose receiver label does not dominate its sender label.
inline FlowAudit check_label_flows(const Application& app) {
  FlowAudit audit;
  audit.edges = information_flows(app);
  for (const auto& e : audit.edges) {
    const auto& s = app.at(e.sender).label;
    const auto& r = app.at(e.receiver).label;
    if (!dominates(r, s)) audit.violations.push_back({e, s, r});
  }
  return audit;
}

// ---------------------------------------------------------------------------
// Plan synthesis

/// Deployment plan: start processes, instantiate, connect, then activate in
/// activation order.
inline DeploymentPlan synth_plan(const Application& app, const NodeMapping& mapping) {
  require_valid(app);
  const auto order = activation_order(app);
  DeploymentPlan plan;
  Phase start{ActionKind::StartProcess, {}};
  for (const auto& g : process_groups(app)) {
    start.actions.push_back(make_action(ActionKind::StartProcess, g.id,
                                        node_of(app, mapping, g.members.front())));
  }
  Phase inst{ActionKind::Instantiate, {}};
  Phase conn{ActionKind::Connect, {}};
  Phase act{ActionKind::Activate, {}};
  for (const auto& c : order) {
    NodeId n = node_of(app, mapping, c);
    inst.actions.push_back(make_action(ActionKind::Instantiate, c, n));
    for (const auto& r : required_connections(app, c)) {
      conn.actions.push_back(make_connection_action(ActionKind::Connect, r, n));
    }
    act.actions.push_back(make_action(ActionKind::Activate, c, n));
  }
  plan.phases = {std::move(start), std::move(inst), std::move(conn), std::move(act)};
  return plan;
}

class UnknownComponent : public Error {
 public:
  explicit UnknownComponent(const ComponentId& c)
      : Error("unknown component '" + c + "'"), component_(c) {}
  const ComponentId& component() const { return component_; }

 private:
  ComponentId component_;
};

/// Dismantles `subset` in reverse deployment order: deactivate clients
/// before servers, withdraw connections, destroy, then stop processes left
/// without live members.
inline DeploymentPlan synth_teardown(const Application& app, const ConfigurationState& cfg,
                                     const std::set<ComponentId>& subset) {
  for (const auto& c : subset) {
    if (!app.find(c)) throw UnknownComponent(c);
  }
  const auto order = activation_order(app);
  std::vector<ComponentId> reverse;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (subset.count(*it) && cfg.state(*it) != ComponentState::Absent) reverse.push_back(*it);
  }

  DeploymentPlan plan;
  Phase deact{ActionKind::Deactivate, {}};
  Phase disc{ActionKind::Disconnect, {}};
  Phase destroy{ActionKind::Destroy, {}};
  Phase stop{ActionKind::StopProcess, {}};
  for (const auto& c : reverse) {
    if (cfg.state(c) == ComponentState::Active) {
      deact.actions.push_back(make_action(ActionKind::Deactivate, c, *cfg.host_of(c)));
    }
  }
  for (const auto& [key, rec] : cfg.connections) {
    if (subset.count(rec.connection.owner)) {
      disc.actions.push_back(make_connection_action(ActionKind::Disconnect, rec.connection, rec.node));
    }
  }
  for (const auto& c : reverse) {
    destroy.actions.push_back(make_action(ActionKind::Destroy, c, *cfg.host_of(c)));
  }
  for (const auto& g : process_groups(app)) {
    for (const auto& [gid, node] : cfg.processes) {
      if (gid != g.id) continue;
      bool touched = false, survivor = false;
      for (const auto& m : g.members) {
        if (cfg.state(m) == ComponentState::Absent || cfg.host_of(m) != node) continue;
        (subset.count(m) ? touched : survivor) = true;
      }
      if (touched && !survivor) stop.actions.push_back(make_action(ActionKind::StopProcess, gid, node));
    }
  }
  plan.phases = {std::move(deact), std::move(disc), std::move(destroy), std::move(stop)};
  return plan;
}

/// Reconfiguration from `current` to the target where every component not in
/// the hold set is Active on its node under `target`. Held components and
/// their transitive clients are not brought up; the Active ones among them
/// are deactivated. Components already in target state are not touched.
inline DeploymentPlan reconcile(const Application& app, const ConfigurationState& current,
                                const NodeMapping& target, const std::set<ComponentId>& hold = {}) {
  using S = ComponentState;
  require_valid(app);
  const auto order = activation_order(app);
  const auto groups = process_groups(app);

  std::set<ComponentId> held = hold;
  for (const auto& c : transitive_clients(app, hold)) held.insert(c);

  auto target_node = [&](const ComponentId& c) { return node_of(app, target, c); };

  std::set<ComponentId> recreate, create;
  for (const auto& c : order) {
    if (held.count(c)) continue;
    S s = current.state(c);
    if (s == S::Failed || (s != S::Absent && current.host_of(c) != target_node(c))) {
      recreate.insert(c);
      create.insert(c);
    } else if (s == S::Absent) {
      create.insert(c);
    }
  }

  auto stale = [&](const ConnectionRecord& rec) {
    return rec.status == ConnectionStatus::Severed || recreate.count(rec.connection.owner) ||
           (rec.connection.kind == ConnectionKind::Dependency && recreate.count(rec.connection.peer));
  };
  std::set<ComponentId> owns_stale;
  for (const auto& [_, rec] : current.connections) {
    if (stale(rec)) owns_stale.insert(rec.connection.owner);
  }

  // Servers precede clients in `order`, so one pass reaches the fixpoint.
  std::set<ComponentId> down;
  for (const auto& c : order) {
    if (current.state(c) != S::Active) continue;
    bool d = recreate.count(c) || held.count(c) || owns_stale.count(c);
    for (const auto& s : app.servers_of(c)) {
      if (create.count(s) || down.count(s)) d = true;
    }
    if (d) down.insert(c);
  }

  DeploymentPlan plan;
  Phase deact{ActionKind::Deactivate, {}}, disc{ActionKind::Disconnect, {}};
  Phase destroy{ActionKind::Destroy, {}}, stop{ActionKind::StopProcess, {}};
  Phase start{ActionKind::StartProcess, {}}, inst{ActionKind::Instantiate, {}};
  Phase conn{ActionKind::Connect, {}}, act{ActionKind::Activate, {}};

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (down.count(*it)) deact.actions.push_back(make_action(ActionKind::Deactivate, *it, *current.host_of(*it)));
  }
  for (const auto& [_, rec] : current.connections) {
    if (held.count(rec.connection.owner) || !stale(rec)) continue;
    disc.actions.push_back(make_connection_action(ActionKind::Disconnect, rec.connection, rec.node));
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (recreate.count(*it)) destroy.actions.push_back(make_action(ActionKind::Destroy, *it, *current.host_of(*it)));
  }

  std::set<std::pair<std::string, NodeId>> running = current.processes;
  for (const auto& g : groups) {
    bool any_live = false;
    for (const auto& m : g.members) any_live = any_live || !held.count(m);
    std::optional<NodeId> want;
    if (any_live) want = target_node(g.members.front());
    for (const auto& [gid, node] : current.processes) {
      if (gid != g.id || (want && node == *want)) continue;
      bool blocked = false;
      for (const auto& m : g.members) {
        if (current.state(m) != S::Absent && current.host_of(m) == node && !recreate.count(m)) blocked = true;
      }
      if (!blocked) {
        stop.actions.push_back(make_action(ActionKind::StopProcess, gid, node));
        running.erase({gid, node});
      }
    }
    if (want && !running.count({g.id, *want})) {
      start.actions.push_back(make_action(ActionKind::StartProcess, g.id, *want));
    }
  }

  for (const auto& c : order) {
    if (held.count(c)) continue;
    const NodeId n = target_node(c);
    if (create.count(c)) inst.actions.push_back(make_action(ActionKind::Instantiate, c, n));
    for (const auto& r : required_connections(app, c)) {
      auto it = current.connections.find(r.key());
      bool keep = !recreate.count(c) && it != current.connections.end() && !stale(it->second);
      if (!keep) conn.actions.push_back(make_connection_action(ActionKind::Connect, r, n));
    }
    if (current.state(c) != S::Active || down.count(c)) {
      act.actions.push_back(make_action(ActionKind::Activate, c, n));
    }
  }

  plan.phases = {std::move(deact), std::move(disc),  std::move(destroy), std::move(stop),
                 std::move(start), std::move(inst), std::move(conn),    std::move(act)};
  return plan;
}

/// Minimal reconfiguration from `current` to the fully active deployment of
/// `app` under `target`.
inline DeploymentPlan diff_plans(const Application& app, const ConfigurationState& current,
                                 const NodeMapping& target) {
  return reconcile(app, current, target, {});
}

}  // namespace rdeploy

#endif  // RDEPLOY_PLANNER_HPP_
