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

// Shared fixtures, random generators and brute-force oracles for the tests.
// Oracles here are written from the definitions, not from the library code.

#ifndef RDEPLOY_TESTS_SUPPORT_HPP_
#define RDEPLOY_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rdeploy/rdeploy.hpp"

namespace rdeploy::testing {

inline std::string data_path(const std::string& name) { return std::string(RDEPLOY_DATA_DIR) + "/" + name; }

inline Port port(std::string name, PortKind kind, std::string contract) {
  return Port{std::move(name), kind, std::move(contract)};
}

inline ComponentInstance component(std::string id, std::uint64_t mem = 0, std::vector<Port> ports = {}) {
  ComponentInstance c;
  c.id = id;
  c.type_name = id;
  c.mem_demand = mem;
  c.ports = std::move(ports);
  c.label = {SecurityLevel::Confidential, "A"};
  return c;
}

/// The three-component navigation example: Sensor publishes raw data to GPS,
/// GPS publishes fixes to NAVDisplay and serves it through IGps.
inline Application nav_app(bool one_vnode = false) {
  Application app;
  app.components.push_back(component("Sensor", 512, {port("raw", PortKind::Publisher, "SensorData")}));
  app.components.push_back(component("GPS", 384,
                                     {port("raw", PortKind::Subscriber, "SensorData"),
                                      port("fix", PortKind::Publisher, "Position"),
                                      port("gps", PortKind::Facet, "IGps")}));
  app.components.push_back(component("NAVDisplay", 256,
                                     {port("fix", PortKind::Subscriber, "Position"),
                                      port("gps", PortKind::Receptacle, "IGps")}));
  app.dependencies.push_back({"NAVDisplay", "GPS"});
  if (one_vnode) {
    app.sigma = {{"Sensor", "v"}, {"GPS", "v"}, {"NAVDisplay", "v"}};
    app.virtual_nodes = {{"v", "ibx530"}};
  } else {
    app.sigma = {{"Sensor", "v_sensor"}, {"GPS", "v_gps"}, {"NAVDisplay", "v_display"}};
    app.virtual_nodes = {{"v_sensor", "ibx530"}, {"v_gps", "ibx530"}, {"v_display", "ibx530"}};
  }
  return app;
}

inline Cluster uniform_cluster(int nodes, std::uint64_t mem = 600, NodeKind kind = "ibx530") {
  Cluster cl;
  for (int i = 1; i <= nodes; ++i) {
    cl.nodes.push_back(PhysicalNode{"n" + std::to_string(i), kind, mem, 1000, {}, NodeStatus::Online});
  }
  return cl;
}

/// Adds a client/server edge with matching receptacle and facet.
inline void depend(Application& app, const ComponentId& client, const ComponentId& server) {
  auto find = [&](const ComponentId& id) -> ComponentInstance& {
    for (auto& c : app.components) {
      if (c.id == id) return c;
    }
    throw std::logic_error("no component " + id);
  };
  const std::string contract = "I" + server;
  auto& s = find(server);
  if (!s.find_port("svc")) s.ports.push_back(port("svc", PortKind::Facet, contract));
  find(client).ports.push_back(port("use_" + server, PortKind::Receptacle, contract));
  app.dependencies.push_back({client, server});
}

struct AppShape {
  int components = 5;
  double edge_probability = 0.3;
  int vnodes = 3;
  int topics = 2;
  int kinds = 1;
  double colloc_probability = 0.0;
  std::uint64_t max_mem = 100;
};

/// Random valid application: an acyclic dependency graph over shuffled ids,
/// random topic ports, random virtual nodes and optional collocation.
inline Application random_app(std::mt19937_64& rng, const AppShape& shape) {
  Application app;
  std::vector<ComponentId> ids;
  for (int i = 0; i < shape.components; ++i) ids.push_back("c" + std::to_string(i));
  std::shuffle(ids.begin(), ids.end(), rng);  // rank order differs from id order
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::uint64_t> mem(1, shape.max_mem);
  for (const auto& id : ids) app.components.push_back(component(id, mem(rng)));
  for (int i = 0; i < shape.components; ++i) {
    for (int j = 0; j < i; ++j) {
      if (coin(rng) < shape.edge_probability) depend(app, ids[i], ids[j]);  // client ranks later
    }
  }
  if (shape.topics > 0) {
    std::uniform_int_distribution<int> topic(0, shape.topics - 1);
    for (auto& c : app.components) {
      double r = coin(rng);
      if (r < 0.3) c.ports.push_back(port("out", PortKind::Publisher, "T" + std::to_string(topic(rng))));
      if (r > 0.6) c.ports.push_back(port("in", PortKind::Subscriber, "T" + std::to_string(topic(rng))));
    }
  }
  std::uniform_int_distribution<int> vn(0, shape.vnodes - 1);
  std::uniform_int_distribution<int> kd(0, shape.kinds - 1);
  for (int v = 0; v < shape.vnodes; ++v) app.virtual_nodes["v" + std::to_string(v)] = "k" + std::to_string(kd(rng));
  for (const auto& id : ids) app.sigma[id] = "v" + std::to_string(vn(rng));
  if (shape.colloc_probability > 0) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        if (app.sigma[ids[i]] == app.sigma[ids[j]] && coin(rng) < shape.colloc_probability) {
          app.colloc.push_back({ids[i], ids[j]});
        }
      }
    }
  }
  return app;
}

/// Cluster holding `per_kind` nodes of every kind used by `app`.
inline Cluster cluster_for(const Application& app, int per_kind, std::uint64_t mem, std::uint64_t cpu = 1000) {
  std::set<NodeKind> kinds;
  for (const auto& [_, k] : app.virtual_nodes) kinds.insert(k);
  Cluster cl;
  int i = 0;
  for (const auto& k : kinds) {
    for (int j = 0; j < per_kind; ++j) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "n%02d", ++i);
      cl.nodes.push_back(PhysicalNode{buf, k, mem, cpu, {}, NodeStatus::Online});
    }
  }
  return cl;
}

// ---------------------------------------------------------------------------
// Oracles

/// Every permutation of the component ids in which each server precedes
/// each of its clients. Exponential; meant for small applications.
inline std::vector<std::vector<ComponentId>> all_topological_orders(const Application& app) {
  std::vector<ComponentId> ids;
  for (const auto& c : app.components) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());
  std::vector<std::vector<ComponentId>> out;
  do {
    std::map<ComponentId, std::size_t> pos;
    for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = i;
    bool ok = true;
    for (const auto& d : app.dependencies) ok = ok && pos[d.server] < pos[d.client];
    if (ok) out.push_back(ids);
  } while (std::next_permutation(ids.begin(), ids.end()));
  return out;
}

/// The lexicographically smallest topological order, by exhaustive search.
inline std::vector<ComponentId> smallest_topological_order(const Application& app) {
  auto all = all_topological_orders(app);
  return *std::min_element(all.begin(), all.end());
}

/// Whether some assignment of virtual nodes to physical nodes satisfies
/// kind, hardware, memory and cpu constraints. Exhaustive.
inline bool mapping_exists(const Application& app, const Cluster& cluster) {
  std::vector<VirtualNodeId> vnodes;
  for (const auto& [v, _] : app.virtual_nodes) vnodes.push_back(v);
  std::map<VirtualNodeId, std::uint64_t> mem, cpu;
  std::map<VirtualNodeId, HardwareSet> hw;
  for (const auto& c : app.components) {
    const auto& v = app.sigma.at(c.id);
    mem[v] += c.mem_demand;
    cpu[v] += c.cpu_demand;
    hw[v].insert(c.hw_required.begin(), c.hw_required.end());
  }
  std::vector<std::size_t> choice(vnodes.size(), 0);
  const std::size_t n = cluster.nodes.size();
  if (vnodes.empty()) return true;
  if (n == 0) return false;
  for (;;) {
    std::vector<std::uint64_t> m(n, 0), p(n, 0);
    bool ok = true;
    for (std::size_t i = 0; i < vnodes.size() && ok; ++i) {
      const auto& node = cluster.nodes[choice[i]];
      const auto& v = vnodes[i];
      ok = node.status == NodeStatus::Online && node.kind == app.virtual_nodes.at(v) &&
           std::includes(node.hw_tags.begin(), node.hw_tags.end(), hw[v].begin(), hw[v].end());
      m[choice[i]] += mem[v];
      p[choice[i]] += cpu[v];
    }
    for (std::size_t j = 0; j < n && ok; ++j) {
      ok = m[j] <= cluster.nodes[j].mem_capacity && p[j] <= cluster.nodes[j].cpu_capacity;
    }
    if (ok) return true;
    std::size_t k = 0;
    while (k < choice.size() && ++choice[k] == n) choice[k++] = 0;
    if (k == choice.size()) return false;
  }
}

/// Explicit domination table for one domain: row may read column.
inline bool may_read(SecurityLevel reader, SecurityLevel data) {
  static const bool table[3][3] = {
      // data:  Conf   CompSens  MgmtOnly
      {true, false, false},  // Confidential
      {true, true, false},   // CompetitionSensitive
      {true, true, true},    // ManagementOnly
  };
  return table[static_cast<int>(reader)][static_cast<int>(data)];
}

inline bool label_ok(const SecurityLabel& receiver, const SecurityLabel& sender) {
  return receiver.domain == sender.domain && may_read(receiver.level, sender.level);
}

/// Applies every action of `plan` in order; returns false on any refusal.
inline bool apply_plan(ConfigurationState& cfg, const Application& app, const DeploymentPlan& plan,
                       std::string* failure = nullptr) {
  const auto groups = process_groups(app);
  for (const auto& a : plan.flatten()) {
    auto r = apply_to(cfg, app, groups, a);
    if (!r.accepted()) {
      if (failure) *failure = to_string(a) + " refused: " + to_string(*r.refusal);
      return false;
    }
  }
  return true;
}

/// Configuration reached by deploying `app` from scratch under `mapping`.
inline ConfigurationState deployed(const Application& app, const Cluster& cluster, const NodeMapping& mapping) {
  auto cfg = initial_configuration(cluster, mapping);
  apply_plan(cfg, app, synth_plan(app, mapping));
  return cfg;
}

}  // namespace rdeploy::testing

#endif  // RDEPLOY_TESTS_SUPPORT_HPP_
