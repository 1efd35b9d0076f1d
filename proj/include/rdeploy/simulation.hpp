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

#ifndef RDEPLOY_SIMULATION_HPP_
#define RDEPLOY_SIMULATION_HPP_

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rdeploy/event_log.hpp"
#include "rdeploy/failure.hpp"
#include "rdeploy/lifecycle.hpp"
#include "rdeploy/orchestrator.hpp"
#include "rdeploy/planner.hpp"
#include "rdeploy/simnet.hpp"

namespace rdeploy::sim {

enum class Outcome { Converged, Unrecoverable, HorizonExceeded, ValidationFailed, PlanInfeasible };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Converged: return "Converged";
    case Outcome::Unrecoverable: return "Unrecoverable";
    case Outcome::HorizonExceeded: return "HorizonExceeded";
    case Outcome::ValidationFailed: return "ValidationFailed";
    case Outcome::PlanInfeasible: return "PlanInfeasible";
  }
  return "?";
}

class LabelFlowViolation : public Error {
 public:
  explicit LabelFlowViolation(FlowAudit audit) : Error(describe(audit)), audit_(std::move(audit)) {}
  const FlowAudit& audit() const { return audit_; }

 private:
  static std::string describe(const FlowAudit& a) {
    std::string out = "label flow violations:";
    for (const auto& v : a.violations) out += " " + to_string(v) + ";";
    return out;
  }
  FlowAudit audit_;
};

/// Replica and ground truth captured when a new leader finished rebuilding
/// its replica.
struct TakeoverCheck {
  SimTime time = 0;
  NodeId leader;
  ConfigurationState replica;
  ConfigurationState truth;
  bool equal = false;
};

struct RunResult {
  Outcome outcome = Outcome::Converged;
  EventLog log;
  ConfigurationState truth;    // ground truth at the end of the run
  ConfigurationState replica;  // final leader replica
  NodeMapping initial_mapping;
  std::size_t actions_dispatched = 0;
  std::size_t crashes = 0;
  int recoveries = 0;
  SimTime end_time = 0;
  std::optional<SimTime> plan_complete_time;
  std::vector<TakeoverCheck> takeovers;
};

/// Projection of a configuration onto the given online nodes: component
/// states and hosts, connection records and processes located there.
inline ConfigurationState project(const ConfigurationState& cfg, const std::set<NodeId>& online) {
  ConfigurationState out;
  for (const auto& [c, s] : cfg.comp_states) {
    auto h = cfg.host_of(c);
    if (s == ComponentState::Absent || !h || !online.count(*h)) continue;
    out.comp_states[c] = s;
    out.host[c] = *h;
  }
  for (const auto& [k, rec] : cfg.connections) {
    if (online.count(rec.node)) out.connections[k] = rec;
  }
  for (const auto& p : cfg.processes) {
    if (online.count(p.second)) out.processes.insert(p);
  }
  return out;
}

/// Deterministic discrete-event run of the whole cluster. Every node runs a
/// DM and a heartbeat failure detector; the smallest live node id leads.
class Simulation {
 public:
  Simulation(Application app, Cluster cluster, Scenario scenario)
      : app_(std::make_shared<const Application>(std::move(app))),
        cluster_(std::move(cluster)),
        scenario_(std::move(scenario)),
        rng_(scenario_.seed),
        net_(scenario_.delay, rng_) {}

  RunResult run() {
    require_valid(*app_);
    validate_scenario(scenario_);
    for (const auto& c : scenario_.crashes) {
      if (!cluster_.find(c.node)) throw UnknownNode(c.node);
    }
    auto audit = check_label_flows(*app_);
    if (!audit.ok()) throw LabelFlowViolation(std::move(audit));
    initial_mapping_ = map_nodes(*app_, cluster_);
    result_.initial_mapping = initial_mapping_;

    for (const auto& n : cluster_.nodes) {
      nodes_.emplace(n.id, Node{NodeDm(n.id, app_, scenario_.heartbeat_period),
                                FailureDetector(scenario_.heartbeat_period, scenario_.miss_threshold),
                                {},
                                nullptr});
    }
    for (auto& [id, node] : nodes_) {
      for (const auto& other : cluster_.nodes) {
        if (other.status == NodeStatus::Offline) node.view[other.id] = NodeStatus::Offline;
      }
      if (cluster_.find(id)->status == NodeStatus::Offline) {
        node.dm.crash();
        continue;
      }
      for (const auto& other : cluster_.nodes) {
        node.view.emplace(other.id, NodeStatus::Online);
        if (other.id != id && other.status == NodeStatus::Online) node.detector.watch(other.id, 0);
      }
    }

    std::map<NodeId, NodeStatus> status;
    for (const auto& n : cluster_.nodes) status[n.id] = n.status;
    const NodeId first = elect_leader(status);
    queue_.schedule(0, TimerFire{first, TimerKind::Start});
    for (const auto& c : scenario_.crashes) {
      queue_.schedule(c.time, Crash{c.node});
      ++pending_crashes_;
    }
    for (const auto& [id, node] : nodes_) {
      if (!node.dm.online()) continue;
      queue_.schedule(scenario_.heartbeat_period, TimerFire{id, TimerKind::Heartbeat});
      queue_.schedule(node.detector.timeout() + 1, TimerFire{id, TimerKind::DetectorCheck});
    }

    bool quiet = false;
    while (!queue_.empty()) {
      if (queue_.next_time() > scenario_.horizon) break;
      SimEvent e = queue_.pop();
      now_ = e.time;
      std::visit([&](auto& p) { handle(p); }, e.payload);
      if (quiescent()) {
        quiet = true;
        break;
      }
    }

    const Node* lead = current_lead();
    result_.truth = ground_truth();
    result_.truth.time = now_;
    if (lead) result_.replica = lead->lead->replica();
    result_.end_time = now_;
    if (!quiet) {
      result_.outcome = Outcome::HorizonExceeded;
      result_.log.append(now_, "horizon_exceeded", {{"horizon", scenario_.horizon}});
    } else if (!lead || lead->lead->mode() == LeadDm::Mode::Unrecoverable || !all_active(result_.truth)) {
      result_.outcome = Outcome::Unrecoverable;
    } else {
      result_.outcome = Outcome::Converged;
    }
    if (lead) result_.recoveries = total_recoveries_ + lead->lead->recoveries();
    result_.actions_dispatched = result_.log.count("dispatch");
    result_.log.append(now_, "run_end", {{"outcome", to_string(result_.outcome)}});
    return std::move(result_);
  }

 private:
  struct Node {
    NodeDm dm;
    FailureDetector detector;
    std::map<NodeId, NodeStatus> view;
    std::unique_ptr<LeadDm> lead;
  };

  Outbox outbox_for(const NodeId& id) {
    Outbox out;
    out.send = [this](DmMessage m) { send(std::move(m)); };
    out.log = [this](const std::string& kind, Json fields) {
      if (kind == "plan_complete" && !result_.plan_complete_time) result_.plan_complete_time = now_;
      result_.log.append(now_, kind, fields);
    };
    out.rebuilt = [this, id](const ConfigurationState& replica) { record_takeover(id, replica); };
    return out;
  }

  void send(DmMessage m) { net_.send(queue_, std::move(m), now_); }

  void handle(TimerFire& t) {
    Node& node = nodes_.at(t.node);
    if (!node.dm.online()) return;
    switch (t.kind) {
      case TimerKind::Start: {
        node.lead = std::make_unique<LeadDm>(t.node, app_, cluster_, outbox_for(t.node));
        result_.log.append(now_, "leader_elected", {{"leader", t.node}});
        auto cfg = initial_configuration(cluster_, initial_mapping_);
        node.lead->execute_plan(now_, synth_plan(*app_, initial_mapping_), std::move(cfg));
        break;
      }
      case TimerKind::Heartbeat: {
        if (auto hb = node.dm.heartbeat_due(now_)) {
          result_.log.append(now_, "heartbeat", {{"node", t.node}});
          for (const auto& [other, s] : node.view) {
            if (other == t.node || s != NodeStatus::Online) continue;
            DmMessage m;
            m.kind = MessageKind::Heartbeat;
            m.from = t.node;
            m.to = other;
            send(std::move(m));
          }
        }
        queue_.schedule(node.dm.last_sent() + node.dm.period(), TimerFire{t.node, TimerKind::Heartbeat});
        break;
      }
      case TimerKind::DetectorCheck:
        for (const auto& suspect : node.detector.detect(now_)) on_suspect(t.node, suspect);
        break;
    }
  }

  void handle(Crash& c) {
    --pending_crashes_;
    Node& node = nodes_.at(c.node);
    if (!node.dm.online()) return;
    ++result_.crashes;
    auto lost = node.dm.local().hosted_on(c.node);
    result_.log.append(now_, "crash", {{"node", c.node}, {"hosted", detail::id_list({lost.begin(), lost.end()})}});
    if (node.lead) {
      total_recoveries_ += node.lead->recoveries();
      plan_completed_ = plan_completed_ || node.lead->plan_completed();
      node.lead.reset();
    }
    node.dm.crash();
    std::set<ComponentId> lost_set(lost.begin(), lost.end());
    for (auto& [id, other] : nodes_) {
      if (other.dm.online()) other.dm.sever_peers(lost_set);
    }
  }

  void handle(Deliver& d) {
    const DmMessage& m = d.message;
    Node& dst = nodes_.at(m.to);
    if (!dst.dm.online() || !nodes_.at(m.from).dm.online()) {
      result_.log.append(now_, "dropped", {{"from", m.from}, {"to", m.to}, {"message", to_string(m.kind)}});
      return;
    }
    switch (m.kind) {
      case MessageKind::Heartbeat:
        dst.detector.heard(m.from, now_);
        queue_.schedule(now_ + dst.detector.timeout() + 1, TimerFire{m.to, TimerKind::DetectorCheck});
        break;
      case MessageKind::Dispatch: {
        auto r = dst.dm.apply_action(*m.action);
        Json f = {{"node", m.to}, {"action", to_json(*m.action)}};
        f["outcome"] = r.outcome == ApplyOutcome::Ack ? "Ack"
                       : r.outcome == ApplyOutcome::IdempotentAck ? "IdempotentAck"
                                                                 : "Refused";
        if (r.refusal) f["refusal"] = to_string(*r.refusal);
        result_.log.append(now_, "apply", f);
        for (const auto& tr : r.transitions) {
          result_.log.append(now_, "transition", {{"component", tr.component},
                                                  {"from", to_string(tr.from)},
                                                  {"to", to_string(tr.to)},
                                                  {"node", tr.node}});
        }
        DmMessage ack;
        ack.kind = MessageKind::Ack;
        ack.from = m.to;
        ack.to = m.from;
        ack.ref = m.ref;
        ack.action = m.action;
        ack.outcome = r.outcome;
        send(std::move(ack));
        break;
      }
      case MessageKind::Ack:
        if (dst.lead) dst.lead->on_ack(now_, m);
        break;
      case MessageKind::QueryState: {
        DmMessage rep;
        rep.kind = MessageKind::StateReport;
        rep.from = m.to;
        rep.to = m.from;
        rep.ref = m.ref;
        rep.report = dst.dm.local();
        send(std::move(rep));
        break;
      }
      case MessageKind::StateReport:
        if (dst.lead) dst.lead->on_report(now_, m);
        break;
      case MessageKind::LeaderClaim:
        break;
    }
  }

  void record_takeover(const NodeId& leader, const ConfigurationState& replica) {
    std::set<NodeId> online;
    for (const auto& [id, node] : nodes_) {
      if (node.dm.online() && replica.online(id)) online.insert(id);
    }
    TakeoverCheck check;
    check.time = now_;
    check.leader = leader;
    check.replica = project(replica, online);
    check.truth = project(ground_truth(), online);
    check.equal = check.replica == check.truth;
    result_.takeovers.push_back(std::move(check));
  }

  void on_suspect(const NodeId& by, const NodeId& suspect) {
    Node& node = nodes_.at(by);
    if (node.view[suspect] == NodeStatus::Offline) return;
    node.view[suspect] = NodeStatus::Offline;
    result_.log.append(now_, "suspect", {{"by", by}, {"node", suspect}});
    if (node.lead) {
      node.lead->on_node_failure(now_, suspect);
      return;
    }
    if (elect_leader(node.view) != by) return;
    node.lead = std::make_unique<LeadDm>(by, app_, cluster_, outbox_for(by), plan_completed_);
    result_.log.append(now_, "leader_elected", {{"leader", by}});
    node.lead->begin_takeover(now_, node.view, initial_mapping_);
  }

  const Node* current_lead() const {
    const Node* found = nullptr;
    for (const auto& [id, node] : nodes_) {
      if (node.dm.online() && node.lead) {
        if (found) return nullptr;  // more than one claimant: not settled
        found = &node;
      }
    }
    return found;
  }

  bool quiescent() const {
    if (pending_crashes_ > 0) return false;
    const Node* lead = current_lead();
    if (!lead) {
      for (const auto& [_, node] : nodes_) {
        if (node.dm.online()) return false;
      }
      return true;  // nobody left
    }
    for (const auto& [id, node] : nodes_) {
      auto v = lead->view.find(id);
      bool seen_online = v != lead->view.end() && v->second == NodeStatus::Online;
      if (seen_online != node.dm.online()) return false;
    }
    return lead->lead->idle();
  }

  bool all_active(const ConfigurationState& cfg) const {
    for (const auto& c : app_->components) {
      if (cfg.state(c.id) != ComponentState::Active) return false;
    }
    return true;
  }

  /// Union of node-local truths. Components on dead nodes show as Failed
  /// unless a live node hosts a newer incarnation.
  ConfigurationState ground_truth() const {
    ConfigurationState cfg;
    for (const auto& [id, node] : nodes_) {
      cfg.node_status[id] = node.dm.online() ? NodeStatus::Online : NodeStatus::Offline;
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& [id, node] : nodes_) {
        if (node.dm.online() != (pass == 1)) continue;
        const auto& local = node.dm.local();
        for (const auto& [c, s] : local.comp_states) {
          if (s == ComponentState::Absent) continue;
          cfg.comp_states[c] = s;
          if (auto h = local.host_of(c)) cfg.host[c] = *h;
        }
        if (pass == 1) {
          for (const auto& [k, rec] : local.connections) cfg.connections[k] = rec;
          for (const auto& p : local.processes) cfg.processes.insert(p);
        }
      }
    }
    if (const Node* lead = current_lead()) cfg.mapping = lead->lead->replica().mapping;
    return cfg;
  }

  std::shared_ptr<const Application> app_;
  Cluster cluster_;
  Scenario scenario_;
  Rng rng_;
  Network net_;
  EventQueue queue_;
  SimTime now_ = 0;
  std::map<NodeId, Node> nodes_;
  NodeMapping initial_mapping_;
  int pending_crashes_ = 0;
  int total_recoveries_ = 0;
  bool plan_completed_ = false;
  RunResult result_;
};

/// Runs `app` on `cluster` under `scenario` until quiescence or the horizon.
inline RunResult run(const Application& app, const Cluster& cluster, const Scenario& scenario) {
  return Simulation(app, cluster, scenario).run();
}

}  // namespace rdeploy::sim

#endif  // RDEPLOY_SIMULATION_HPP_
