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

#ifndef RDEPLOY_ORCHESTRATOR_HPP_
#define RDEPLOY_ORCHESTRATOR_HPP_

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rdeploy/failure.hpp"
#include "rdeploy/json_io.hpp"
#include "rdeploy/lifecycle.hpp"
#include "rdeploy/planner.hpp"
#include "rdeploy/simnet.hpp"

namespace rdeploy {

class NoNodesOnline : public Error {
 public:
  NoNodesOnline() : Error("no node is online") {}
};

/// The cluster leader is the smallest Online node id.
inline NodeId elect_leader(const std::map<NodeId, NodeStatus>& status) {
  for (const auto& [node, s] : status) {
    if (s == NodeStatus::Online) return node;
  }
  throw NoNodesOnline();
}

/// Rebuilds the lead replica from the state reports of the live nodes.
/// Virtual node bindings are recovered from where components or processes
/// actually run, falling back to `base` for untouched virtual nodes whose
/// node is still up; the rest stay unbound for the planner.
inline ConfigurationState reconstruct_replica(const Application& app,
                                              const std::map<NodeId, NodeStatus>& view,
                                              const std::map<NodeId, ConfigurationState>& reports,
                                              const NodeMapping& base) {
  ConfigurationState cfg;
  cfg.node_status = view;
  for (const auto& [node, rep] : reports) {
    if (!cfg.online(node)) continue;
    for (const auto& [c, s] : rep.comp_states) {
      if (s == ComponentState::Absent) continue;
      cfg.comp_states[c] = s;
      if (auto h = rep.host_of(c)) cfg.host[c] = *h;
    }
    for (const auto& [key, rec] : rep.connections) cfg.connections[key] = rec;
    for (const auto& p : rep.processes) cfg.processes.insert(p);
  }

  const auto groups = process_groups(app);
  for (const auto& [vnode, kind] : app.virtual_nodes) {
    std::optional<NodeId> bound;
    for (const auto& [c, v] : app.sigma) {
      if (v != vnode) continue;
      if (auto h = cfg.host_of(c); h && cfg.online(*h)) {
        bound = *h;
        break;
      }
    }
    if (!bound) {
      for (const auto& [gid, node] : cfg.processes) {
        for (const auto& g : groups) {
          if (g.id != gid || !cfg.online(node)) continue;
          auto v = app.sigma.find(g.members.front());
          if (v != app.sigma.end() && v->second == vnode) bound = node;
        }
        if (bound) break;
      }
    }
    if (!bound) {
      if (const NodeId* n = base.find(vnode); n && cfg.online(*n)) bound = *n;
    }
    if (bound) cfg.mapping.binding[vnode] = *bound;
  }
  return cfg;
}

/// Side effects of the lead DM: message sends and log records.
struct Outbox {
  std::function<void(sim::DmMessage)> send;
  std::function<void(const std::string&, Json)> log;
  std::function<void(const ConfigurationState&)> rebuilt;  // optional takeover hook
};

namespace detail {

inline Json id_list(const std::set<ComponentId>& ids) {
  Json a = Json::array();
  for (const auto& i : ids) a.push_back(i);
  return a;
}

}  // namespace detail

/// Cluster-lead Deployment Manager. Owns plan progress and the global
/// replica; node DMs only execute what it dispatches.
///
/// Plans run phase by phase. Inside the Activate phase a component is
/// dispatched only after every server activated in the same phase has been
/// acknowledged; Deactivate is gated the other way round. A detected node
/// failure suspends dispatching, waits for acknowledgements from live nodes
/// to drain, then replans from the replica.
class LeadDm {
 public:
  enum class Mode { Idle, Querying, Executing, Draining, Converged, Unrecoverable };

  LeadDm(NodeId self, std::shared_ptr<const Application> app, Cluster cluster, Outbox out,
         bool plan_completed = false)
      : self_(std::move(self)),
        app_(std::move(app)),
        cluster_(std::move(cluster)),
        groups_(process_groups(*app_)),
        out_(std::move(out)),
        plan_completed_(plan_completed) {}

  const NodeId& id() const { return self_; }
  Mode mode() const { return mode_; }
  const ConfigurationState& replica() const { return replica_; }
  std::size_t outstanding() const { return outstanding_.size(); }
  int recoveries() const { return recoveries_; }
  bool plan_completed() const { return plan_completed_; }
  const std::optional<ConfigurationState>& takeover_replica() const { return takeover_replica_; }

  bool idle() const {
    return (mode_ == Mode::Converged || mode_ == Mode::Unrecoverable) && outstanding_.empty();
  }

  /// Starts executing `plan` from `replica` (the initial deployment).
  void execute_plan(SimTime now, const DeploymentPlan& plan, ConfigurationState replica) {
    replica_ = std::move(replica);
    replica_.time = now;
    out_.log("plan_start", {{"leader", self_}, {"actions", plan.size()}, {"mapping", to_json(replica_.mapping)}});
    start(now, plan);
  }

  /// Takes over after the previous leader went offline: queries every live
  /// DM and rebuilds the replica from their reports before replanning.
  void begin_takeover(SimTime now, std::map<NodeId, NodeStatus> view, NodeMapping base) {
    mode_ = Mode::Querying;
    replica_.time = now;
    replica_.node_status = std::move(view);
    base_ = std::move(base);
    reports_.clear();
    awaiting_.clear();
    ++query_id_;
    out_.log("leader_claim", {{"leader", self_}});
    for (const auto& [node, s] : replica_.node_status) {
      if (s != NodeStatus::Online) continue;
      awaiting_.insert(node);
      if (node != self_) out_.send(message(sim::MessageKind::LeaderClaim, node));
      auto q = message(sim::MessageKind::QueryState, node);
      q.ref = query_id_;
      out_.send(std::move(q));
    }
  }

  void on_report(SimTime now, const sim::DmMessage& m) {
    if (mode_ != Mode::Querying || m.ref != query_id_ || !m.report) return;
    if (!awaiting_.erase(m.from)) return;
    reports_[m.from] = *m.report;
    if (awaiting_.empty()) complete_takeover(now);
  }

  void on_ack(SimTime now, const sim::DmMessage& m) {
    auto it = outstanding_.find(m.ref);
    if (it == outstanding_.end()) return;  // stale: target already declared failed
    const DeployAction action = it->second;
    outstanding_.erase(it);
    if (m.outcome == ApplyOutcome::Refused) {
      out_.log("refused", {{"from", m.from}, {"id", m.ref}, {"action", to_json(action)}});
      mode_ = Mode::Draining;
    } else {
      auto r = apply_to(replica_, *app_, groups_, action);
      replica_.time = now;
      Json f = {{"from", m.from}, {"id", m.ref}, {"action", to_json(action)}};
      if (m.outcome == ApplyOutcome::IdempotentAck) f["idempotent"] = true;
      out_.log("ack", f);
      if (!r.accepted()) out_.log("replica_divergence", {{"action", to_json(action)}});
      settle(action);
    }
    if (mode_ == Mode::Draining) {
      if (outstanding_.empty()) replan(now);
      return;
    }
    advance(now);
  }

  void on_node_failure(SimTime now, const NodeId& node) {
    if (!replica_.online(node)) return;
    if (mode_ == Mode::Querying) {
      replica_.node_status[node] = NodeStatus::Offline;
      awaiting_.erase(node);
      reports_.erase(node);
      if (awaiting_.empty()) complete_takeover(now);
      return;
    }
    replica_ = crash_node(std::move(replica_), node);
    replica_.time = now;
    auto a = affected_set(*app_, replica_, node);
    out_.log("failure_detected", {{"node", node},
                                  {"by", self_},
                                  {"failed", detail::id_list(a.failed)},
                                  {"impacted", detail::id_list(a.impacted)}});
    affected_.failed.insert(a.failed.begin(), a.failed.end());
    affected_.impacted.insert(a.impacted.begin(), a.impacted.end());
    for (auto it = outstanding_.begin(); it != outstanding_.end();) {
      if (it->second.node == node) {
        it = outstanding_.erase(it);
      } else {
        ++it;
      }
    }
    mode_ = Mode::Draining;
    if (outstanding_.empty()) replan(now);
  }

 private:
  sim::DmMessage message(sim::MessageKind kind, const NodeId& to) const {
    sim::DmMessage m;
    m.kind = kind;
    m.from = self_;
    m.to = to;
    return m;
  }

  void complete_takeover(SimTime now) {
    replica_ = reconstruct_replica(*app_, replica_.node_status, reports_, base_);
    replica_.time = now;
    takeover_replica_ = replica_;
    if (out_.rebuilt) out_.rebuilt(replica_);
    Json reported = Json::array();
    for (const auto& [n, _] : reports_) reported.push_back(n);
    out_.log("takeover_complete", {{"leader", self_}, {"reports", reported}, {"replica", to_json(replica_)}});

    AffectedSet a;
    for (const auto& [c, v] : app_->sigma) {
      if (replica_.state(c) != ComponentState::Absent) continue;
      const NodeId* n = base_.find(v);
      if (n && !replica_.online(*n)) a.failed.insert(c);
    }
    a.impacted = transitive_clients(*app_, a.failed);
    affected_ = std::move(a);
    replan(now);
  }

  void replan(SimTime now) {
    auto rp = recover(*app_, cluster_, replica_, affected_);
    replica_.mapping = rp.mapping;
    recovering_ = !rp.plan.empty() || !rp.recoverable();
    if (recovering_) {
      Json unrec = Json::array();
      for (const auto& u : rp.unrecoverable) {
        unrec.push_back({{"vnode", u.vnode}, {"kind", u.kind}, {"reason", to_string(u.reason)}});
      }
      out_.log("recovery_planned", {{"leader", self_},
                                    {"failed", detail::id_list(rp.affected.failed)},
                                    {"impacted", detail::id_list(rp.affected.impacted)},
                                    {"actions", rp.plan.size()},
                                    {"mapping", to_json(rp.mapping)},
                                    {"unrecoverable", unrec},
                                    {"held", detail::id_list(rp.held)}});
    }
    unrecoverable_ = rp.unrecoverable;
    held_ = rp.held;
    affected_ = {};
    start(now, rp.plan);
  }

  void start(SimTime now, const DeploymentPlan& plan) {
    plan_ = plan;
    phase_ = 0;
    mode_ = Mode::Executing;
    load_phase();
    advance(now);
  }

  void load_phase() {
    pending_.clear();
    unsettled_.clear();
    if (phase_ >= plan_.phases.size()) return;
    const auto& ph = plan_.phases[phase_];
    pending_ = ph.actions;
    for (const auto& a : ph.actions) {
      if (auto c = a.component()) unsettled_.insert(*c);
    }
    if (!ph.actions.empty()) {
      out_.log("phase", {{"leader", self_}, {"phase", to_string(ph.kind)}, {"actions", ph.actions.size()}});
    }
  }

  bool eligible(const DeployAction& a) const {
    if (a.kind == ActionKind::Activate) {
      for (const auto& s : app_->servers_of(a.subject)) {
        if (unsettled_.count(s)) return false;
      }
    } else if (a.kind == ActionKind::Deactivate) {
      for (const auto& c : app_->clients_of(a.subject)) {
        if (unsettled_.count(c)) return false;
      }
    }
    return true;
  }

  void settle(const DeployAction& a) {
    if (a.kind == ActionKind::Activate || a.kind == ActionKind::Deactivate) unsettled_.erase(a.subject);
  }

  void advance(SimTime now) {
    for (;;) {
      if (phase_ >= plan_.phases.size()) {
        finish(now);
        return;
      }
      bool progressed = false;
      for (auto it = pending_.begin(); it != pending_.end();) {
        if (!eligible(*it)) {
          ++it;
          continue;
        }
        DeployAction a = *it;
        it = pending_.erase(it);
        issue(now, a);
        progressed = true;
      }
      if (pending_.empty() && outstanding_.empty()) {
        ++phase_;
        load_phase();
        continue;
      }
      if (!progressed) return;
    }
  }

  void issue(SimTime now, const DeployAction& a) {
    if (!replica_.online(a.node)) {
      // Records of a dead node are only bookkeeping on the replica.
      auto r = apply_to(replica_, *app_, groups_, a);
      replica_.time = now;
      out_.log("bookkeep", {{"leader", self_}, {"action", to_json(a)}, {"accepted", r.accepted()}});
      settle(a);
      return;
    }
    const auto id = next_dispatch_++;
    outstanding_[id] = a;
    auto m = message(sim::MessageKind::Dispatch, a.node);
    m.ref = id;
    m.action = a;
    out_.log("dispatch", {{"from", self_}, {"to", a.node}, {"id", id}, {"action", to_json(a)}});
    out_.send(std::move(m));
  }

  void finish(SimTime now) {
    (void)now;
    if (recovering_) {
      if (!unrecoverable_.empty()) {
        Json vnodes = Json::array();
        for (const auto& u : unrecoverable_) {
          vnodes.push_back({{"vnode", u.vnode}, {"kind", u.kind}, {"reason", to_string(u.reason)}});
        }
        out_.log("unrecoverable", {{"leader", self_}, {"vnodes", vnodes}, {"held", detail::id_list(held_)}});
      } else {
        ++recoveries_;
        out_.log("recovery_complete", {{"leader", self_}});
      }
      recovering_ = false;
    }
    mode_ = unrecoverable_.empty() ? Mode::Converged : Mode::Unrecoverable;
    if (mode_ == Mode::Converged && !plan_completed_ && all_active()) {
      plan_completed_ = true;
      out_.log("plan_complete", {{"leader", self_}});
    }
  }

  bool all_active() const {
    for (const auto& c : app_->components) {
      if (replica_.state(c.id) != ComponentState::Active) return false;
    }
    return true;
  }

  NodeId self_;
  std::shared_ptr<const Application> app_;
  Cluster cluster_;
  std::vector<ProcessGroup> groups_;
  Outbox out_;

  Mode mode_ = Mode::Idle;
  ConfigurationState replica_;
  DeploymentPlan plan_;
  std::size_t phase_ = 0;
  std::vector<DeployAction> pending_;
  std::set<ComponentId> unsettled_;
  std::map<std::uint64_t, DeployAction> outstanding_;
  std::uint64_t next_dispatch_ = 1;

  AffectedSet affected_;
  bool recovering_ = false;
  bool plan_completed_ = false;
  int recoveries_ = 0;
  std::vector<NoSpareNode> unrecoverable_;
  std::set<ComponentId> held_;

  // Takeover bookkeeping.
  NodeMapping base_;
  std::uint64_t query_id_ = 0;
  std::set<NodeId> awaiting_;
  std::map<NodeId, ConfigurationState> reports_;
  std::optional<ConfigurationState> takeover_replica_;
};

}  // namespace rdeploy

#endif  // RDEPLOY_ORCHESTRATOR_HPP_
