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

#ifndef RDEPLOY_CLI_HPP_
#define RDEPLOY_CLI_HPP_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "rdeploy/json_io.hpp"
#include "rdeploy/model.hpp"
#include "rdeploy/planner.hpp"
#include "rdeploy/simulation.hpp"

namespace rdeploy::cli {

enum ExitCode : int { kOk = 0, kRejected = 1, kParse = 2, kUnrecoverable = 3, kHorizon = 4 };

enum class Format { Text, Json };

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

inline void print_violations(const ValidationReport& report, Format fmt, std::ostream& os) {
  for (const auto& v : report.violations) {
    if (fmt == Format::Json) {
      Json j = {{"violation", to_string(v.kind)}, {"elements", v.elements}};
      if (!v.detail.empty()) j["detail"] = v.detail;
      os << j.dump() << '\n';
    } else {
      os << to_string(v) << '\n';
    }
  }
}

inline Json utilization_json(const ResourceReport& r) {
  Json nodes = Json::array();
  for (const auto& u : r.nodes) {
    nodes.push_back({{"node", u.node},
                     {"vnodes", u.vnodes},
                     {"mem", {u.mem_used, u.mem_capacity}},
                     {"cpu", {u.cpu_used, u.cpu_capacity}},
                     {"mem_utilization", u.mem_utilization},
                     {"cpu_utilization", u.cpu_utilization}});
  }
  Json links = Json::array();
  for (const auto& l : r.links) {
    links.push_back({{"a", l.a}, {"b", l.b}, {"bandwidth", l.bandwidth}, {"encrypted", l.encrypted}, {"flows", l.flows}});
  }
  return {{"nodes", nodes}, {"links", links}};
}

inline Json run_report(const sim::RunResult& r, const Application& app) {
  Json states = Json::object();
  for (const auto& c : app.component_ids()) {
    Json s = {{"state", to_string(r.truth.state(c))}};
    if (auto h = r.truth.host_of(c)) s["node"] = *h;
    states[c] = s;
  }
  Json j = {{"outcome", to_string(r.outcome)},
            {"actions", r.actions_dispatched},
            {"failures", r.crashes},
            {"recoveries", r.recoveries},
            {"end_time", r.end_time},
            {"components", states}};
  if (r.plan_complete_time) j["plan_complete_time"] = *r.plan_complete_time;
  return j;
}

}  // namespace detail

/// validate <app>: 0 when valid, 1 on violations, 2 on parse errors.
inline int cmd_validate(const std::string& app_path, Format fmt, Streams io) {
  Application app;
  try {
    app = application_from_json(load_json_file(app_path));
  } catch (const ParseError& e) {
    io.err << "parse error: " << e.what() << '\n';
    return kParse;
  }
  auto report = validate_application(app);
  if (report.ok()) {
    if (fmt == Format::Json) {
      io.out << Json{{"valid", true}, {"components", app.components.size()}}.dump() << '\n';
    } else {
      io.out << "ok: " << app.components.size() << " components\n";
    }
    return kOk;
  }
  detail::print_violations(report, fmt, io.out);
  return kRejected;
}

/// plan <app> <cluster>: mapping, utilization and the phase-annotated plan.
/// JSON output is one record per line.
inline int cmd_plan(const std::string& app_path, const std::string& cluster_path, Format fmt, Streams io) {
  Application app;
  Cluster cluster;
  try {
    app = application_from_json(load_json_file(app_path));
    cluster = cluster_from_json(load_json_file(cluster_path));
  } catch (const ParseError& e) {
    io.err << "parse error: " << e.what() << '\n';
    return kParse;
  }
  auto report = validate_application(app);
  if (!report.ok()) {
    detail::print_violations(report, fmt, io.err);
    return kRejected;
  }
  auto flows = check_label_flows(app);
  if (!flows.ok()) {
    for (const auto& v : flows.violations) io.err << to_string(v) << '\n';
    return kRejected;
  }
  NodeMapping mapping;
  try {
    mapping = map_nodes(app, cluster);
  } catch (const NoFeasibleNode& e) {
    io.err << e.what() << '\n';
    return kRejected;
  }
  const auto usage = check_resources(app, mapping, cluster);
  const auto plan = synth_plan(app, mapping);

  if (fmt == Format::Json) {
    io.out << Json{{"record", "mapping"}, {"mapping", to_json(mapping)}}.dump() << '\n';
    Json u = {{"record", "utilization"}};
    const Json usage_json = detail::utilization_json(usage);
    for (const auto& [k, v] : usage_json.items()) u[k] = v;
    io.out << u.dump() << '\n';
    std::size_t index = 0;
    for (const auto& ph : plan.phases) {
      for (const auto& a : ph.actions) {
        Json j = {{"record", "action"}, {"index", index++}, {"phase", to_string(ph.kind)}};
        const Json aj = to_json(a);
        for (const auto& [k, v] : aj.items()) j[k] = v;
        io.out << j.dump() << '\n';
      }
    }
    return kOk;
  }
  io.out << "mapping:\n";
  for (const auto& [v, n] : mapping.binding) io.out << "  " << v << " -> " << n << '\n';
  io.out << "utilization:\n";
  for (const auto& u : usage.nodes) {
    io.out << "  " << u.node << " mem " << u.mem_used << "/" << u.mem_capacity << " cpu " << u.cpu_used << "/"
           << u.cpu_capacity << '\n';
  }
  for (const auto& ph : plan.phases) {
    io.out << "phase " << to_string(ph.kind) << " (" << ph.actions.size() << ")\n";
    for (const auto& a : ph.actions) {
      io.out << "  " << to_string(a.kind) << " " << a.subject << " @" << a.node << '\n';
    }
  }
  return kOk;
}

/// run <app> <cluster> <scenario>: simulates, writes the event log to
/// `out_path` when given, prints the run report.
inline int cmd_run(const std::string& app_path, const std::string& cluster_path, const std::string& scenario_path,
                   std::optional<std::uint64_t> seed, const std::string& out_path, Format fmt, Streams io) {
  Application app;
  Cluster cluster;
  sim::Scenario scenario;
  try {
    app = application_from_json(load_json_file(app_path));
    cluster = cluster_from_json(load_json_file(cluster_path));
    scenario = scenario_from_json(load_json_file(scenario_path));
  } catch (const ParseError& e) {
    io.err << "parse error: " << e.what() << '\n';
    return kParse;
  }
  if (seed) scenario.seed = *seed;
  auto report = validate_application(app);
  if (!report.ok()) {
    detail::print_violations(report, fmt, io.err);
    io.out << (fmt == Format::Json ? Json{{"outcome", "ValidationFailed"}}.dump() : "outcome: ValidationFailed")
           << '\n';
    return kRejected;
  }

  sim::RunResult result;
  try {
    result = sim::run(app, cluster, scenario);
  } catch (const UnknownNode& e) {
    io.err << e.what() << '\n';
    return kParse;
  } catch (const sim::LabelFlowViolation& e) {
    io.err << e.what() << '\n';
    io.out << (fmt == Format::Json ? Json{{"outcome", "ValidationFailed"}}.dump() : "outcome: ValidationFailed")
           << '\n';
    return kRejected;
  } catch (const NoFeasibleNode& e) {
    io.err << e.what() << '\n';
    io.out << (fmt == Format::Json ? Json{{"outcome", "PlanInfeasible"}}.dump() : "outcome: PlanInfeasible") << '\n';
    return kRejected;
  }

  if (!out_path.empty()) result.log.write(out_path);
  const Json rep = detail::run_report(result, app);
  if (fmt == Format::Json) {
    io.out << rep.dump() << '\n';
  } else {
    io.out << "outcome: " << rep["outcome"].get<std::string>() << '\n'
           << "actions: " << result.actions_dispatched << '\n'
           << "failures: " << result.crashes << '\n'
           << "recoveries: " << result.recoveries << '\n'
           << "end_time: " << result.end_time << '\n';
    for (const auto& [c, s] : rep["components"].items()) {
      io.out << "  " << c << " " << s["state"].get<std::string>();
      if (s.contains("node")) io.out << " @" << s["node"].get<std::string>();
      io.out << '\n';
    }
  }
  switch (result.outcome) {
    case sim::Outcome::Converged: return kOk;
    case sim::Outcome::Unrecoverable: return kUnrecoverable;
    case sim::Outcome::HorizonExceeded: return kHorizon;
    default: return kRejected;
  }
}

}  // namespace rdeploy::cli

#endif  // RDEPLOY_CLI_HPP_
