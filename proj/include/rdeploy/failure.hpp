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

#ifndef RDEPLOY_FAILURE_HPP_
#define RDEPLOY_FAILURE_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rdeploy/lifecycle.hpp"
#include "rdeploy/model.hpp"
#include "rdeploy/planner.hpp"

namespace rdeploy {

/// Heartbeat-based crash detector. A node is suspected once it has been
/// silent for strictly more than `misses` heartbeat periods.
class FailureDetector {
 public:
  FailureDetector(SimTime period = 10, int misses = 3) : period_(period), misses_(misses) {}

  SimTime period() const { return period_; }
  int misses() const { return misses_; }
  SimTime timeout() const { return period_ * misses_; }

  void watch(const NodeId& node, SimTime since) { last_[node] = since; }
  void forget(const NodeId& node) { last_.erase(node); }

  void heard(const NodeId& node, SimTime at) {
    auto it = last_.find(node);
    if (it != last_.end() && at > it->second) it->second = at;
  }

  std::optional<SimTime> last_heard(const NodeId& node) const {
    auto it = last_.find(node);
    if (it == last_.end()) return std::nullopt;
    return it->second;
  }

  bool suspected(const NodeId& node) const { return suspected_.count(node) > 0; }
  const std::set<NodeId>& suspects() const { return suspected_; }

  /// Nodes crossing the silence threshold at `now`, each reported once.
  std::vector<NodeId> detect(SimTime now) {
    std::vector<NodeId> out;
    for (const auto& [node, last] : last_) {
      if (suspected_.count(node)) continue;
      if (now - last > timeout()) {
        suspected_.insert(node);
        out.push_back(node);
      }
    }
    return out;
  }

 private:
  SimTime period_;
  int misses_;
  std::map<NodeId, SimTime> last_;
  std::set<NodeId> suspected_;
};

struct AffectedSet {
  std::set<ComponentId> failed;
  std::set<ComponentId> impacted;

  bool empty() const { return failed.empty() && impacted.empty(); }
  friend bool operator==(const AffectedSet&, const AffectedSet&) = default;
};

/// Components lost with `node` (hosted there or bound there by the current
/// mapping) and the surviving transitive dependency clients of those.
/// Topic subscribers of lost publishers are not affected.
inline AffectedSet affected_set(const Application& app, const ConfigurationState& cfg,
                                const NodeId& node) {
  if (!cfg.node_status.count(node)) throw UnknownNode(node);
  AffectedSet out;
  for (const auto& c : app.components) {
    auto s = cfg.state(c.id);
    bool hosted = s != ComponentState::Absent && cfg.host_of(c.id) == node;
    bool bound = false;
    if (s == ComponentState::Absent) {
      auto v = app.sigma.find(c.id);
      if (v != app.sigma.end()) {
        const NodeId* n = cfg.mapping.find(v->second);
        bound = n && *n == node;
      }
    }
    if (hosted || bound) out.failed.insert(c.id);
  }
  out.impacted = transitive_clients(app, out.failed);
  return out;
}

struct NoSpareNode {
  VirtualNodeId vnode;
  NodeKind kind;
  PlacementFailure reason;

  friend bool operator==(const NoSpareNode&, const NoSpareNode&) = default;
};

struct RecoveryPlan {
  AffectedSet affected;
  NodeMapping mapping;
  DeploymentPlan plan;
  std::vector<NoSpareNode> unrecoverable;  // empty when fully recoverable
  std::set<ComponentId> held;               // left down for lack of a spare

  bool recoverable() const { return unrecoverable.empty(); }
};

/// Cluster as seen through `cfg`'s node status.
inline Cluster cluster_view(const Cluster& cluster, const ConfigurationState& cfg) {
  Cluster view = cluster;
  for (auto& n : view.nodes) {
    n.status = cfg.online(n.id) ? NodeStatus::Online : NodeStatus::Offline;
  }
  return view;
}

/// Remaps virtual nodes whose physical node is gone, keeping every
/// surviving binding, and synthesizes the reconfiguration that brings the
/// application back to all-Active. Virtual nodes without a kind-equal spare
/// are reported unrecoverable; their components and dependent clients are
/// left down while everything else still converges.
inline RecoveryPlan recover(const Application& app, const Cluster& cluster,
                            const ConfigurationState& cfg, AffectedSet affected = {}) {
  RecoveryPlan out;
  out.affected = std::move(affected);
  const Cluster view = cluster_view(cluster, cfg);

  NodeMapping pinned;
  for (const auto& [v, n] : cfg.mapping.binding) {
    if (cfg.online(n)) pinned.binding[v] = n;
  }

  std::set<VirtualNodeId> skip;
  for (;;) {
    try {
      out.mapping = map_nodes(app, view, pinned, skip);
      break;
    } catch (const NoFeasibleNode& e) {
      auto kind = app.virtual_nodes.count(e.vnode()) ? app.virtual_nodes.at(e.vnode()) : NodeKind{};
      out.unrecoverable.push_back({e.vnode(), kind, e.reason()});
      skip.insert(e.vnode());
    }
  }
  for (const auto& v : skip) {
    if (const NodeId* old = cfg.mapping.find(v)) out.mapping.binding[v] = *old;
  }
  for (const auto& [c, v] : app.sigma) {
    if (skip.count(v)) out.held.insert(c);
  }
  if (!skip.empty()) {
    // Unmapped vnodes keep a placeholder so held components resolve a node.
    for (const auto& v : skip) {
      if (!out.mapping.find(v)) out.mapping.binding[v] = std::string{};
    }
  }
  out.plan = reconcile(app, cfg, out.mapping, out.held);
  return out;
}

}  // namespace rdeploy

#endif  // RDEPLOY_FAILURE_HPP_
