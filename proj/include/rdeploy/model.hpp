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

#ifndef RDEPLOY_MODEL_HPP_
#define RDEPLOY_MODEL_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdeploy {

using ComponentId = std::string;
using VirtualNodeId = std::string;
using NodeId = std::string;
using NodeKind = std::string;
using HardwareTag = std::string;
using HardwareSet = std::set<HardwareTag>;

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Ports

enum class PortKind { Facet, Receptacle, Publisher, Subscriber };

inline const char* to_string(PortKind kind) {
  switch (kind) {
    case PortKind::Facet: return "Facet";
    case PortKind::Receptacle: return "Receptacle";
    case PortKind::Publisher: return "Publisher";
    case PortKind::Subscriber: return "Subscriber";
  }
  return "?";
}

inline std::optional<PortKind> port_kind_from_string(const std::string& s) {
  if (s == "Facet") return PortKind::Facet;
  if (s == "Receptacle") return PortKind::Receptacle;
  if (s == "Publisher") return PortKind::Publisher;
  if (s == "Subscriber") return PortKind::Subscriber;
  return std::nullopt;
}

/// Interface ports carry an interface name as contract, topic ports a topic.
struct Port {
  std::string name;
  PortKind kind = PortKind::Facet;
  std::string contract;

  bool is_topic() const {
    return kind == PortKind::Publisher || kind == PortKind::Subscriber;
  }
  friend bool operator==(const Port&, const Port&) = default;
};

// ---------------------------------------------------------------------------
// Security labels

enum class SecurityLevel : int {
  Confidential = 0,
  CompetitionSensitive = 1,
  ManagementOnly = 2,
};

inline const char* to_string(SecurityLevel level) {
  switch (level) {
    case SecurityLevel::Confidential: return "Confidential";
    case SecurityLevel::CompetitionSensitive: return "CompetitionSensitive";
    case SecurityLevel::ManagementOnly: return "ManagementOnly";
  }
  return "?";
}

inline std::optional<SecurityLevel> security_level_from_string(const std::string& s) {
  if (s == "Confidential") return SecurityLevel::Confidential;
  if (s == "CompetitionSensitive") return SecurityLevel::CompetitionSensitive;
  if (s == "ManagementOnly") return SecurityLevel::ManagementOnly;
  return std::nullopt;
}

struct SecurityLabel {
  SecurityLevel level = SecurityLevel::Confidential;
  std::string domain;

  friend bool operator==(const SecurityLabel&, const SecurityLabel&) = default;
};

/// `high` dominates `low` when both belong to one domain and `high` is at
/// least as sensitive. Labels of different domains are incomparable.
inline bool dominates(const SecurityLabel& high, const SecurityLabel& low) {
  return high.domain == low.domain &&
         static_cast<int>(high.level) >= static_cast<int>(low.level);
}

inline std::string to_string(const SecurityLabel& label) {
  return std::string(to_string(label.level)) + "/" + label.domain;
}

// ---------------------------------------------------------------------------
// Application

struct ComponentInstance {
  ComponentId id;
  std::string type_name;
  std::vector<Port> ports;
  std::uint64_t mem_demand = 0;  // bytes
  std::uint64_t cpu_demand = 0;  // instructions per second
  HardwareSet hw_required;
  SecurityLabel label;

  const Port* find_port(const std::string& port_name) const {
    for (const auto& p : ports) {
      if (p.name == port_name) return &p;
    }
    return nullptr;
  }
  friend bool operator==(const ComponentInstance&, const ComponentInstance&) = default;
};

/// A (client, server) pair: the server answers requests of the client.
struct Dependency {
  ComponentId client;
  ComponentId server;

  friend auto operator<=>(const Dependency&, const Dependency&) = default;
};

/// Application tuple: components, dependencies, virtual-node assignment and
/// collocation pairs, plus the kind of every virtual node.
struct Application {
  std::vector<ComponentInstance> components;
  std::vector<Dependency> dependencies;
  std::map<ComponentId, VirtualNodeId> sigma;
  std::vector<std::pair<ComponentId, ComponentId>> colloc;
  std::map<VirtualNodeId, NodeKind> virtual_nodes;

  const ComponentInstance* find(const ComponentId& id) const {
    for (const auto& c : components) {
      if (c.id == id) return &c;
    }
    return nullptr;
  }

  const ComponentInstance& at(const ComponentId& id) const {
    if (const auto* c = find(id)) return *c;
    throw Error("unknown component '" + id + "'");
  }

  std::vector<ComponentId> component_ids() const {
    std::vector<ComponentId> ids;
    ids.reserve(components.size());
    for (const auto& c : components) ids.push_back(c.id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  /// Direct servers of `client` in id order.
  std::vector<ComponentId> servers_of(const ComponentId& client) const {
    std::set<ComponentId> out;
    for (const auto& d : dependencies) {
      if (d.client == client) out.insert(d.server);
    }
    return {out.begin(), out.end()};
  }

  /// Direct clients of `server` in id order.
  std::vector<ComponentId> clients_of(const ComponentId& server) const {
    std::set<ComponentId> out;
    for (const auto& d : dependencies) {
      if (d.server == server) out.insert(d.client);
    }
    return {out.begin(), out.end()};
  }

  friend bool operator==(const Application&, const Application&) = default;
};

// ---------------------------------------------------------------------------
// Cluster

enum class NodeStatus { Online, Offline };

inline const char* to_string(NodeStatus s) {
  return s == NodeStatus::Online ? "Online" : "Offline";
}

struct PhysicalNode {
  NodeId id;
  NodeKind kind;
  std::uint64_t mem_capacity = 0;
  std::uint64_t cpu_capacity = 0;
  HardwareSet hw_tags;
  NodeStatus status = NodeStatus::Online;

  friend bool operator==(const PhysicalNode&, const PhysicalNode&) = default;
};

struct Link {
  NodeId a;
  NodeId b;
  std::uint64_t bandwidth = 0;  // bytes per second
  bool encrypted = false;

  friend bool operator==(const Link&, const Link&) = default;
};

struct Cluster {
  std::vector<PhysicalNode> nodes;
  std::vector<Link> links;

  const PhysicalNode* find(const NodeId& id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }

  /// Node ids in ascending order.
  std::vector<NodeId> node_ids() const {
    std::vector<NodeId> ids;
    for (const auto& n : nodes) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  DanglingReference,
  CyclicDependency,
  UnmatchedDependencyPorts,
  CollocationNodeMismatch,
  DuplicateId,
};

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::DanglingReference: return "DanglingReference";
    case ViolationKind::CyclicDependency: return "CyclicDependency";
    case ViolationKind::UnmatchedDependencyPorts: return "UnmatchedDependencyPorts";
    case ViolationKind::CollocationNodeMismatch: return "CollocationNodeMismatch";
    case ViolationKind::DuplicateId: return "DuplicateId";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::vector<std::string> elements;  // offending ids, sorted
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

inline std::string to_string(const Violation& v) {
  std::string out = to_string(v.kind);
  out += "{";
  for (std::size_t i = 0; i < v.elements.size(); ++i) {
    if (i) out += ",";
    out += v.elements[i];
  }
  out += "}";
  if (!v.detail.empty()) out += " " + v.detail;
  return out;
}

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
  }
};

/// Raised by operations whose precondition is a valid application.
class InvalidApplication : public Error {
 public:
  explicit InvalidApplication(ValidationReport report)
      : Error(describe(report)), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  static std::string describe(const ValidationReport& r) {
    std::string out = "invalid application:";
    for (const auto& v : r.violations) out += " " + to_string(v) + ";";
    return out;
  }
  ValidationReport report_;
};

namespace detail {

/// Strongly connected components of size > 1 (or self loops) of the
/// dependency graph, each sorted; used to report cycles.
inline std::vector<std::vector<ComponentId>> dependency_cycles(const Application& app) {
  std::map<ComponentId, std::vector<ComponentId>> adj;
  std::set<ComponentId> ids;
  for (const auto& c : app.components) ids.insert(c.id);
  std::set<ComponentId> self_loops;
  for (const auto& d : app.dependencies) {
    if (!ids.count(d.client) || !ids.count(d.server)) continue;
    adj[d.client].push_back(d.server);
    if (d.client == d.server) self_loops.insert(d.client);
  }
  for (auto& [_, v] : adj) std::sort(v.begin(), v.end());

  // Tarjan, iterative-free recursion is fine at model sizes.
  std::map<ComponentId, int> index, low;
  std::set<ComponentId> on_stack;
  std::vector<ComponentId> stack;
  std::vector<std::vector<ComponentId>> out;
  int counter = 0;

  auto strongconnect = [&](auto&& self, const ComponentId& v) -> void {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    for (const auto& w : adj[v]) {
      if (!index.count(w)) {
        self(self, w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack.count(w)) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<ComponentId> scc;
      ComponentId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        scc.push_back(w);
      } while (w != v);
      if (scc.size() > 1 || self_loops.count(v)) {
        std::sort(scc.begin(), scc.end());
        out.push_back(std::move(scc));
      }
    }
  };
  for (const auto& v : ids) {
    if (!index.count(v)) strongconnect(strongconnect, v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// First (Receptacle on client, Facet on server) pair with equal contracts,
/// ordered by receptacle name then facet name.
inline std::optional<std::pair<const Port*, const Port*>> matching_ports(
    const ComponentInstance& client, const ComponentInstance& server) {
  std::optional<std::pair<const Port*, const Port*>> best;
  for (const auto& r : client.ports) {
    if (r.kind != PortKind::Receptacle) continue;
    for (const auto& f : server.ports) {
      if (f.kind != PortKind::Facet || f.contract != r.contract) continue;
      if (!best || std::tie(r.name, f.name) <
                       std::tie(best->first->name, best->second->name)) {
        best = std::make_pair(&r, &f);
      }
    }
  }
  return best;
}

/// Union-find over component ids, merging collocation pairs.
class Partition {
 public:
  explicit Partition(const std::vector<ComponentId>& ids) {
    for (const auto& id : ids) parent_[id] = id;
  }
  ComponentId find(const ComponentId& x) {
    auto it = parent_.find(x);
    if (it == parent_.end()) return x;
    if (it->second == x) return x;
    auto root = find(it->second);
    parent_[x] = root;
    return root;
  }
  void unite(const ComponentId& a, const ComponentId& b) {
    auto ra = find(a), rb = find(b);
    if (ra == rb) return;
    // Smallest id becomes the root so group names are stable.
    if (rb < ra) std::swap(ra, rb);
    parent_[rb] = ra;
  }

 private:
  std::map<ComponentId, ComponentId> parent_;
};

}  // namespace detail

/// Checks every structural invariant of an application and reports all
/// violations, each carrying the offending element ids.
inline ValidationReport validate_application(const Application& app) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::vector<std::string> elems, std::string detail = {}) {
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    report.violations.push_back({kind, std::move(elems), std::move(detail)});
  };

  std::map<ComponentId, int> seen;
  for (const auto& c : app.components) ++seen[c.id];
  for (const auto& [id, n] : seen) {
    if (n > 1) add(ViolationKind::DuplicateId, {id}, "component id repeated");
  }
  for (const auto& c : app.components) {
    std::map<std::string, int> port_names;
    for (const auto& p : c.ports) ++port_names[p.name];
    for (const auto& [name, n] : port_names) {
      if (n > 1) add(ViolationKind::DuplicateId, {c.id + "." + name}, "port name repeated");
    }
  }

  auto known = [&](const ComponentId& id) { return seen.count(id) > 0; };

  for (const auto& d : app.dependencies) {
    std::vector<std::string> missing;
    if (!known(d.client)) missing.push_back(d.client);
    if (!known(d.server)) missing.push_back(d.server);
    if (!missing.empty()) add(ViolationKind::DanglingReference, missing, "in dependencies");
  }
  for (const auto& [a, b] : app.colloc) {
    std::vector<std::string> missing;
    if (!known(a)) missing.push_back(a);
    if (!known(b)) missing.push_back(b);
    if (!missing.empty()) add(ViolationKind::DanglingReference, missing, "in colloc");
  }
  for (const auto& [comp, vnode] : app.sigma) {
    if (!known(comp)) add(ViolationKind::DanglingReference, {comp}, "in sigma");
    if (!app.virtual_nodes.count(vnode)) {
      add(ViolationKind::DanglingReference, {vnode}, "virtual node of " + comp + " undeclared");
    }
  }
  for (const auto& [id, _] : seen) {
    if (!app.sigma.count(id)) add(ViolationKind::DanglingReference, {id}, "no virtual node assigned");
  }

  for (const auto& cycle : detail::dependency_cycles(app)) {
    add(ViolationKind::CyclicDependency, cycle);
  }

  std::set<Dependency> dep_set(app.dependencies.begin(), app.dependencies.end());
  for (const auto& d : dep_set) {
    const auto* client = app.find(d.client);
    const auto* server = app.find(d.server);
    if (!client || !server) continue;
    if (!detail::matching_ports(*client, *server)) {
      add(ViolationKind::UnmatchedDependencyPorts, {d.client, d.server},
          "no Receptacle on " + d.client + " matches a Facet on " + d.server);
    }
  }

  // Collocation is checked over its symmetric-transitive closure.
  detail::Partition part(app.component_ids());
  for (const auto& [a, b] : app.colloc) {
    if (known(a) && known(b)) part.unite(a, b);
  }
  std::map<ComponentId, std::vector<ComponentId>> groups;
  for (const auto& id : app.component_ids()) groups[part.find(id)].push_back(id);
  for (const auto& [root, members] : groups) {
    std::set<VirtualNodeId> vnodes;
    for (const auto& m : members) {
      auto it = app.sigma.find(m);
      if (it != app.sigma.end()) vnodes.insert(it->second);
    }
    if (vnodes.size() > 1) {
      add(ViolationKind::CollocationNodeMismatch, members,
          "collocated components span " + std::to_string(vnodes.size()) + " virtual nodes");
    }
  }
  return report;
}

inline void require_valid(const Application& app) {
  auto report = validate_application(app);
  if (!report.ok()) throw InvalidApplication(std::move(report));
}

/// A set of components that share one process.
struct ProcessGroup {
  std::string id;  // "proc:" + smallest member id
  std::vector<ComponentId> members;  // sorted

  friend bool operator==(const ProcessGroup&, const ProcessGroup&) = default;
};

/// Connected components of the collocation graph, ordered by smallest
/// member id. Isolated components form singleton groups.
inline std::vector<ProcessGroup> process_groups(const Application& app) {
  const auto ids = app.component_ids();
  detail::Partition part(ids);
  for (const auto& [a, b] : app.colloc) part.unite(a, b);
  std::map<ComponentId, std::vector<ComponentId>> by_root;
  for (const auto& id : ids) by_root[part.find(id)].push_back(id);
  std::vector<ProcessGroup> out;
  for (auto& [root, members] : by_root) {
    out.push_back({"proc:" + members.front(), std::move(members)});
  }
  std::sort(out.begin(), out.end(), [](const ProcessGroup& a, const ProcessGroup& b) {
    return a.members.front() < b.members.front();
  });
  return out;
}

/// Group id hosting `component`.
inline std::string process_group_of(const std::vector<ProcessGroup>& groups,
                                    const ComponentId& component) {
  for (const auto& g : groups) {
    if (std::binary_search(g.members.begin(), g.members.end(), component)) return g.id;
  }
  throw Error("component '" + component + "' is in no process group");
}

/// Topological order of the dependency relation with servers before their
/// clients. Among ready components the smallest id goes first; topic
/// interactions impose no ordering.
inline std::vector<ComponentId> activation_order(const Application& app) {
  const auto ids = app.component_ids();
  std::map<ComponentId, int> pending;  // unactivated servers
  std::map<ComponentId, std::vector<ComponentId>> clients;
  for (const auto& id : ids) pending[id] = 0;
  std::set<Dependency> deps(app.dependencies.begin(), app.dependencies.end());
  for (const auto& d : deps) {
    if (!pending.count(d.client) || !pending.count(d.server)) continue;
    ++pending[d.client];
    clients[d.server].push_back(d.client);
  }
  std::priority_queue<ComponentId, std::vector<ComponentId>, std::greater<>> ready;
  for (const auto& [id, n] : pending) {
    if (n == 0) ready.push(id);
  }
  std::vector<ComponentId> order;
  while (!ready.empty()) {
    auto id = ready.top();
    ready.pop();
    order.push_back(id);
    for (const auto& c : clients[id]) {
      if (--pending[c] == 0) ready.push(c);
    }
  }
  if (order.size() != ids.size()) {
    ValidationReport r;
    for (const auto& cycle : detail::dependency_cycles(app)) {
      r.violations.push_back({ViolationKind::CyclicDependency, cycle, {}});
    }
    throw InvalidApplication(std::move(r));
  }
  return order;
}

/// Position of each component in `order`.
inline std::map<ComponentId, std::size_t> rank_of(const std::vector<ComponentId>& order) {
  std::map<ComponentId, std::size_t> rank;
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  return rank;
}

/// Components that transitively depend on any member of `roots` (excluding
/// the roots themselves).
inline std::set<ComponentId> transitive_clients(const Application& app,
                                                const std::set<ComponentId>& roots) {
  std::set<ComponentId> out;
  std::vector<ComponentId> frontier(roots.begin(), roots.end());
  while (!frontier.empty()) {
    auto s = frontier.back();
    frontier.pop_back();
    for (const auto& c : app.clients_of(s)) {
      if (roots.count(c) || out.count(c)) continue;
      out.insert(c);
      frontier.push_back(c);
    }
  }
  return out;
}

}  // namespace rdeploy

#endif  // RDEPLOY_MODEL_HPP_
