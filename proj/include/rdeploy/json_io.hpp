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

// JSON documents for applications, clusters, scenarios and plans.
//
// application: {components:[{id,type,mem,cpu,hw:[],label:{level,domain},
//                ports:[{name,kind,contract}]}], dependencies:[[client,server]],
//                colloc:[[a,b]], sigma:{component:vnode}, vnodes:{vnode:kind}}
// cluster:     {nodes:[{id,kind,mem,cpu,hw:[],status?}],
//                links:[[a,b,bandwidth,encrypted]]}
// scenario:    {crashes:[[node,t]], delay:{fixed:d}|{range:[lo,hi]}, seed,
//                horizon, heartbeat?:{period,misses}}

#ifndef RDEPLOY_JSON_IO_HPP_
#define RDEPLOY_JSON_IO_HPP_

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "rdeploy/actions.hpp"
#include "rdeploy/lifecycle.hpp"
#include "rdeploy/model.hpp"
#include "rdeploy/simnet.hpp"

namespace rdeploy {

using Json = nlohmann::ordered_json;

class ParseError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline const Json& field(const Json& j, const char* name, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(where + ": missing field '" + name + "'");
  return *it;
}

inline std::string str(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ParseError(where + ": expected a string");
  return j.get<std::string>();
}

inline std::uint64_t count(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw ParseError(where + ": expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

inline std::int64_t integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where + ": expected an integer");
  return j.get<std::int64_t>();
}

inline HardwareSet tags(const Json& j, const std::string& where) {
  HardwareSet out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw ParseError(where + ": expected an array of strings");
  for (const auto& t : j) out.insert(str(t, where));
  return out;
}

inline Json tags_json(const HardwareSet& s) {
  Json a = Json::array();
  for (const auto& t : s) a.push_back(t);
  return a;
}

inline std::pair<std::string, std::string> id_pair(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ParseError(where + ": expected a pair [a, b]");
  return {str(j[0], where), str(j[1], where)};
}

}  // namespace detail

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Application

inline Application application_from_json(const Json& j) {
  using detail::field;
  Application app;
  if (!j.is_object()) throw ParseError("application: expected an object");
  const auto& comps = field(j, "components", "application");
  if (!comps.is_array()) throw ParseError("application.components: expected an array");
  for (const auto& cj : comps) {
    ComponentInstance c;
    c.id = detail::str(field(cj, "id", "component"), "component.id");
    const std::string where = "component '" + c.id + "'";
    c.type_name = cj.contains("type") ? detail::str(cj["type"], where + ".type") : c.id;
    c.mem_demand = cj.contains("mem") ? detail::count(cj["mem"], where + ".mem") : 0;
    c.cpu_demand = cj.contains("cpu") ? detail::count(cj["cpu"], where + ".cpu") : 0;
    c.hw_required = cj.contains("hw") ? detail::tags(cj["hw"], where + ".hw") : HardwareSet{};
    if (cj.contains("label")) {
      const auto& lj = cj["label"];
      auto level = security_level_from_string(detail::str(field(lj, "level", where + ".label"), where));
      if (!level) throw ParseError(where + ".label.level: unknown level");
      c.label.level = *level;
      c.label.domain = detail::str(field(lj, "domain", where + ".label"), where);
    }
    if (cj.contains("ports")) {
      if (!cj["ports"].is_array()) throw ParseError(where + ".ports: expected an array");
      for (const auto& pj : cj["ports"]) {
        Port p;
        p.name = detail::str(field(pj, "name", where + ".port"), where);
        auto kind = port_kind_from_string(detail::str(field(pj, "kind", where + ".port"), where));
        if (!kind) throw ParseError(where + ".port '" + p.name + "': unknown kind");
        p.kind = *kind;
        p.contract = detail::str(field(pj, "contract", where + ".port"), where);
        c.ports.push_back(std::move(p));
      }
    }
    app.components.push_back(std::move(c));
  }
  if (j.contains("dependencies")) {
    if (!j["dependencies"].is_array()) throw ParseError("application.dependencies: expected an array");
    for (const auto& d : j["dependencies"]) {
      auto [client, server] = detail::id_pair(d, "dependency");
      app.dependencies.push_back({client, server});
    }
  }
  if (j.contains("colloc")) {
    if (!j["colloc"].is_array()) throw ParseError("application.colloc: expected an array");
    for (const auto& p : j["colloc"]) app.colloc.push_back(detail::id_pair(p, "colloc"));
  }
  if (j.contains("sigma")) {
    if (!j["sigma"].is_object()) throw ParseError("application.sigma: expected an object");
    for (const auto& [k, v] : j["sigma"].items()) app.sigma[k] = detail::str(v, "sigma." + k);
  }
  if (j.contains("vnodes")) {
    if (!j["vnodes"].is_object()) throw ParseError("application.vnodes: expected an object");
    for (const auto& [k, v] : j["vnodes"].items()) app.virtual_nodes[k] = detail::str(v, "vnodes." + k);
  }
  return app;
}

/// Canonical form: components sorted by id, pairs sorted, maps by key.
inline Json to_json(const Application& app) {
  Json j;
  Json comps = Json::array();
  std::vector<const ComponentInstance*> sorted;
  for (const auto& c : app.components) sorted.push_back(&c);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](auto* a, auto* b) { return a->id < b->id; });
  for (const auto* c : sorted) {
    Json cj;
    cj["id"] = c->id;
    cj["type"] = c->type_name;
    cj["mem"] = c->mem_demand;
    cj["cpu"] = c->cpu_demand;
    cj["hw"] = detail::tags_json(c->hw_required);
    cj["label"] = {{"level", to_string(c->label.level)}, {"domain", c->label.domain}};
    Json ports = Json::array();
    for (const auto& p : c->ports) {
      ports.push_back({{"name", p.name}, {"kind", to_string(p.kind)}, {"contract", p.contract}});
    }
    cj["ports"] = std::move(ports);
    comps.push_back(std::move(cj));
  }
  j["components"] = std::move(comps);
  std::set<Dependency> deps(app.dependencies.begin(), app.dependencies.end());
  Json dj = Json::array();
  for (const auto& d : deps) dj.push_back({d.client, d.server});
  j["dependencies"] = std::move(dj);
  std::set<std::pair<ComponentId, ComponentId>> col(app.colloc.begin(), app.colloc.end());
  Json cj = Json::array();
  for (const auto& [a, b] : col) cj.push_back({a, b});
  j["colloc"] = std::move(cj);
  Json sj = Json::object();
  for (const auto& [k, v] : app.sigma) sj[k] = v;
  j["sigma"] = std::move(sj);
  Json vj = Json::object();
  for (const auto& [k, v] : app.virtual_nodes) vj[k] = v;
  j["vnodes"] = std::move(vj);
  return j;
}

// ---------------------------------------------------------------------------
// Cluster

inline Cluster cluster_from_json(const Json& j) {
  using detail::field;
  Cluster cl;
  const auto& nodes = field(j, "nodes", "cluster");
  if (!nodes.is_array()) throw ParseError("cluster.nodes: expected an array");
  for (const auto& nj : nodes) {
    PhysicalNode n;
    n.id = detail::str(field(nj, "id", "node"), "node.id");
    const std::string where = "node '" + n.id + "'";
    n.kind = detail::str(field(nj, "kind", where), where + ".kind");
    n.mem_capacity = nj.contains("mem") ? detail::count(nj["mem"], where + ".mem") : 0;
    n.cpu_capacity = nj.contains("cpu") ? detail::count(nj["cpu"], where + ".cpu") : 0;
    n.hw_tags = nj.contains("hw") ? detail::tags(nj["hw"], where + ".hw") : HardwareSet{};
    if (nj.contains("status")) {
      auto s = detail::str(nj["status"], where + ".status");
      if (s == "Online") {
        n.status = NodeStatus::Online;
      } else if (s == "Offline") {
        n.status = NodeStatus::Offline;
      } else {
        throw ParseError(where + ".status: expected Online or Offline");
      }
    }
    cl.nodes.push_back(std::move(n));
  }
  if (j.contains("links")) {
    if (!j["links"].is_array()) throw ParseError("cluster.links: expected an array");
    for (const auto& lj : j["links"]) {
      if (!lj.is_array() || lj.size() < 2 || lj.size() > 4) {
        throw ParseError("link: expected [a, b, bandwidth, encrypted]");
      }
      Link l;
      l.a = detail::str(lj[0], "link");
      l.b = detail::str(lj[1], "link");
      if (lj.size() > 2) l.bandwidth = detail::count(lj[2], "link.bandwidth");
      if (lj.size() > 3) {
        if (!lj[3].is_boolean()) throw ParseError("link.encrypted: expected a boolean");
        l.encrypted = lj[3].get<bool>();
      }
      cl.links.push_back(std::move(l));
    }
  }
  std::set<NodeId> ids;
  for (const auto& n : cl.nodes) {
    if (!ids.insert(n.id).second) throw ParseError("cluster: duplicate node id '" + n.id + "'");
  }
  for (const auto& l : cl.links) {
    if (!ids.count(l.a) || !ids.count(l.b)) {
      throw ParseError("cluster: link " + l.a + "-" + l.b + " references an unknown node");
    }
  }
  return cl;
}

inline Json to_json(const Cluster& cl) {
  Json j;
  Json nodes = Json::array();
  std::vector<const PhysicalNode*> sorted;
  for (const auto& n : cl.nodes) sorted.push_back(&n);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (const auto* n : sorted) {
    Json nj;
    nj["id"] = n->id;
    nj["kind"] = n->kind;
    nj["mem"] = n->mem_capacity;
    nj["cpu"] = n->cpu_capacity;
    nj["hw"] = detail::tags_json(n->hw_tags);
    nj["status"] = to_string(n->status);
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  Json links = Json::array();
  for (const auto& l : cl.links) links.push_back({l.a, l.b, l.bandwidth, l.encrypted});
  j["links"] = std::move(links);
  return j;
}

// ---------------------------------------------------------------------------
// Scenario

inline sim::Scenario scenario_from_json(const Json& j) {
  sim::Scenario s;
  if (!j.is_object()) throw ParseError("scenario: expected an object");
  if (j.contains("crashes")) {
    if (!j["crashes"].is_array()) throw ParseError("scenario.crashes: expected an array");
    for (const auto& cj : j["crashes"]) {
      if (!cj.is_array() || cj.size() != 2) throw ParseError("crash: expected [node, t]");
      s.crashes.push_back({detail::str(cj[0], "crash.node"), detail::integer(cj[1], "crash.t")});
    }
  }
  if (j.contains("delay")) {
    const auto& dj = j["delay"];
    if (dj.is_number_integer()) {
      s.delay = sim::DelayModel::fixed(dj.get<std::int64_t>());
    } else if (dj.is_object() && dj.contains("fixed")) {
      s.delay = sim::DelayModel::fixed(detail::integer(dj["fixed"], "delay.fixed"));
    } else if (dj.is_object() && dj.contains("range")) {
      const auto& r = dj["range"];
      if (!r.is_array() || r.size() != 2) throw ParseError("delay.range: expected [lo, hi]");
      s.delay = sim::DelayModel::uniform(detail::integer(r[0], "delay.range"),
                                         detail::integer(r[1], "delay.range"));
    } else {
      throw ParseError("scenario.delay: expected {fixed: d} or {range: [lo, hi]}");
    }
  }
  if (j.contains("seed")) s.seed = detail::count(j["seed"], "scenario.seed");
  if (j.contains("horizon")) s.horizon = detail::integer(j["horizon"], "scenario.horizon");
  if (j.contains("heartbeat")) {
    const auto& hj = j["heartbeat"];
    if (hj.contains("period")) s.heartbeat_period = detail::integer(hj["period"], "heartbeat.period");
    if (hj.contains("misses")) s.miss_threshold = static_cast<int>(detail::integer(hj["misses"], "heartbeat.misses"));
  }
  try {
    sim::validate_scenario(s);
  } catch (const sim::InvalidScenario& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  return s;
}

inline Json to_json(const sim::Scenario& s) {
  Json j;
  Json crashes = Json::array();
  for (const auto& c : s.crashes) crashes.push_back({c.node, c.time});
  j["crashes"] = std::move(crashes);
  if (s.delay.is_fixed()) {
    j["delay"] = {{"fixed", s.delay.min}};
  } else {
    j["delay"] = {{"range", {s.delay.min, s.delay.max}}};
  }
  j["seed"] = s.seed;
  j["horizon"] = s.horizon;
  j["heartbeat"] = {{"period", s.heartbeat_period}, {"misses", s.miss_threshold}};
  return j;
}

// ---------------------------------------------------------------------------
// Actions, mappings and configuration snapshots

inline Json to_json(const Connection& c) {
  Json j;
  j["kind"] = c.kind == ConnectionKind::Dependency ? "Dependency" : "Topic";
  j["owner"] = c.owner;
  j["port"] = c.port;
  j["role"] = to_string(c.role);
  j["contract"] = c.contract;
  if (c.kind == ConnectionKind::Dependency) {
    j["peer"] = c.peer;
    j["peer_port"] = c.peer_port;
  }
  return j;
}

inline Connection connection_from_json(const Json& j) {
  Connection c;
  auto kind = detail::str(detail::field(j, "kind", "connection"), "connection.kind");
  if (kind != "Dependency" && kind != "Topic") throw ParseError("connection.kind: unknown");
  c.kind = kind == "Dependency" ? ConnectionKind::Dependency : ConnectionKind::Topic;
  c.owner = detail::str(detail::field(j, "owner", "connection"), "connection.owner");
  c.port = detail::str(detail::field(j, "port", "connection"), "connection.port");
  auto role = port_kind_from_string(detail::str(detail::field(j, "role", "connection"), "connection.role"));
  if (!role) throw ParseError("connection.role: unknown");
  c.role = *role;
  c.contract = detail::str(detail::field(j, "contract", "connection"), "connection.contract");
  if (c.kind == ConnectionKind::Dependency) {
    c.peer = detail::str(detail::field(j, "peer", "connection"), "connection.peer");
    c.peer_port = detail::str(detail::field(j, "peer_port", "connection"), "connection.peer_port");
  }
  return c;
}

inline Json to_json(const DeployAction& a) {
  Json j;
  j["action"] = to_string(a.kind);
  j["subject"] = a.subject;
  j["node"] = a.node;
  return j;
}

inline DeployAction action_from_json(const Json& j) {
  DeployAction a;
  auto kind = action_kind_from_string(detail::str(detail::field(j, "action", "action"), "action"));
  if (!kind) throw ParseError("action: unknown kind");
  a.kind = *kind;
  a.subject = detail::str(detail::field(j, "subject", "action"), "action.subject");
  a.node = detail::str(detail::field(j, "node", "action"), "action.node");
  if (j.contains("connection")) a.connection = connection_from_json(j["connection"]);
  return a;
}

inline Json to_json(const NodeMapping& m) {
  Json j = Json::object();
  for (const auto& [v, n] : m.binding) j[v] = n;
  return j;
}

inline Json to_json(const ConfigurationState& cfg) {
  Json j;
  j["time"] = cfg.time;
  Json comps = Json::object();
  for (const auto& [c, s] : cfg.comp_states) {
    Json cj = {{"state", to_string(s)}};
    if (auto h = cfg.host_of(c)) cj["node"] = *h;
    comps[c] = std::move(cj);
  }
  j["components"] = std::move(comps);
  j["mapping"] = to_json(cfg.mapping);
  Json conns = Json::array();
  for (const auto& [key, rec] : cfg.connections) {
    conns.push_back({{"key", key}, {"node", rec.node}, {"status", to_string(rec.status)}});
  }
  j["connections"] = std::move(conns);
  Json procs = Json::array();
  for (const auto& [g, n] : cfg.processes) procs.push_back({g, n});
  j["processes"] = std::move(procs);
  Json nodes = Json::object();
  for (const auto& [n, s] : cfg.node_status) nodes[n] = to_string(s);
  j["nodes"] = std::move(nodes);
  return j;
}

}  // namespace rdeploy

#endif  // RDEPLOY_JSON_IO_HPP_
