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

#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

namespace rdeploy {
namespace {

using testing::component;
using testing::depend;
using testing::nav_app;

std::size_t position(const DeploymentPlan& plan, ActionKind kind, const std::string& subject) {
  auto flat = plan.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (flat[i].kind == kind && flat[i].subject == subject) return i;
  }
  return flat.size();
}

// --- mapping -------------------------------------------------------------

TEST(MapNodes, FirstFitDecreasingOnNavigationExample) {
  // Demands 512 (sensor), 384 (gps), 256 (display) on 600-unit nodes: each
  // one fills its own node in decreasing order.
  auto m = map_nodes(nav_app(), testing::uniform_cluster(3));
  EXPECT_EQ(m.binding, (std::map<VirtualNodeId, NodeId>{{"v_sensor", "n1"}, {"v_gps", "n2"}, {"v_display", "n3"}}));
}

TEST(MapNodes, PacksWhenCapacityAllows) {
  // 384 + 256 fit into 700; 512 does not fit next to 384.
  auto m = map_nodes(nav_app(), testing::uniform_cluster(3, 700));
  EXPECT_EQ(m.binding, (std::map<VirtualNodeId, NodeId>{{"v_sensor", "n1"}, {"v_gps", "n2"}, {"v_display", "n2"}}));
}

TEST(MapNodes, Oversubscribed) {
  try {
    map_nodes(nav_app(), testing::uniform_cluster(2, 300));
    FAIL() << "expected NoFeasibleNode";
  } catch (const NoFeasibleNode& e) {
    EXPECT_EQ(e.reason(), PlacementFailure::InsufficientMemory);
    EXPECT_EQ(e.vnode(), "v_sensor");
  }
}

TEST(MapNodes, KindAndHardware) {
  auto app = nav_app();
  auto cl = testing::uniform_cluster(3, 600, "other");
  try {
    map_nodes(app, cl);
    FAIL();
  } catch (const NoFeasibleNode& e) {
    EXPECT_EQ(e.reason(), PlacementFailure::KindMismatch);
  }
  app.components[0].hw_required = {"imu"};
  try {
    map_nodes(app, testing::uniform_cluster(3));
    FAIL();
  } catch (const NoFeasibleNode& e) {
    EXPECT_EQ(e.reason(), PlacementFailure::MissingHardware);
    EXPECT_EQ(e.vnode(), "v_sensor");
  }
  cl = testing::uniform_cluster(3);
  cl.nodes[2].hw_tags = {"imu"};
  EXPECT_EQ(map_nodes(app, cl).binding.at("v_sensor"), "n3");
}

TEST(MapNodes, CpuIsChecked) {
  auto app = nav_app();
  app.components[1].cpu_demand = 5000;
  try {
    map_nodes(app, testing::uniform_cluster(3));
    FAIL();
  } catch (const NoFeasibleNode& e) {
    EXPECT_EQ(e.reason(), PlacementFailure::InsufficientCpu);
    EXPECT_EQ(e.vnode(), "v_gps");
  }
}

TEST(MapNodes, PinnedBindingsAreKept) {
  NodeMapping pinned;
  pinned.binding["v_display"] = "n1";
  auto m = map_nodes(nav_app(), testing::uniform_cluster(4), pinned);
  EXPECT_EQ(m.binding.at("v_display"), "n1");
  EXPECT_TRUE(check_resources(nav_app(), m, testing::uniform_cluster(4)).ok());
}

TEST(MapNodes, OfflineNodesAreSkipped) {
  auto cl = testing::uniform_cluster(4);
  cl.nodes[0].status = NodeStatus::Offline;
  auto m = map_nodes(nav_app(), cl);
  for (const auto& [_, n] : m.binding) EXPECT_NE(n, "n1");
}

TEST(MapNodes, PropertyAgreesWithExhaustiveSearch) {
  std::mt19937_64 rng(99);
  int feasible = 0, infeasible = 0;
  for (int i = 0; i < 400; ++i) {
    testing::AppShape shape;
    shape.components = 2 + static_cast<int>(rng() % 6);
    shape.vnodes = 1 + static_cast<int>(rng() % 4);
    shape.kinds = 1 + static_cast<int>(rng() % 2);
    shape.topics = 0;
    auto app = testing::random_app(rng, shape);
    auto cl = testing::cluster_for(app, 1 + static_cast<int>(rng() % 3), 60 + rng() % 200);
    const bool exists = testing::mapping_exists(app, cl);
    try {
      auto m = map_nodes(app, cl);
      EXPECT_TRUE(exists);
      auto report = check_resources(app, m, cl);
      EXPECT_TRUE(report.ok());
      for (const auto& u : report.nodes) {
        EXPECT_LE(u.mem_used, u.mem_capacity);
        if (u.mem_capacity) EXPECT_DOUBLE_EQ(u.mem_utilization, double(u.mem_used) / double(u.mem_capacity));
      }
      ++feasible;
    } catch (const NoFeasibleNode&) {
      EXPECT_FALSE(exists);
      ++infeasible;
    }
  }
  EXPECT_GT(feasible, 50);
  EXPECT_GT(infeasible, 20);
}

TEST(CheckResources, ReportsOverload) {
  NodeMapping m;
  m.binding = {{"v_sensor", "n1"}, {"v_gps", "n1"}, {"v_display", "n1"}};
  auto report = check_resources(nav_app(), m, testing::uniform_cluster(1));
  ASSERT_FALSE(report.ok());
  EXPECT_EQ(report.violations[0].dimension, PlacementFailure::InsufficientMemory);
  EXPECT_EQ(report.usage("n1")->mem_used, 512u + 384u + 256u);
}

// --- label flows ---------------------------------------------------------

Application pubsub(SecurityLabel pub, SecurityLabel sub) {
  Application app;
  app.components = {component("p", 1, {testing::port("o", PortKind::Publisher, "T")}),
                    component("s", 1, {testing::port("i", PortKind::Subscriber, "T")})};
  app.components[0].label = pub;
  app.components[1].label = sub;
  app.sigma = {{"p", "v"}, {"s", "v"}};
  app.virtual_nodes = {{"v", "k"}};
  return app;
}

TEST(LabelFlows, MissionRules) {
  using L = SecurityLevel;
  EXPECT_TRUE(check_label_flows(pubsub({L::Confidential, "A"}, {L::CompetitionSensitive, "A"})).ok());
  auto down = check_label_flows(pubsub({L::ManagementOnly, "A"}, {L::Confidential, "A"}));
  ASSERT_EQ(down.violations.size(), 1u);
  EXPECT_EQ(down.violations[0].edge.sender, "p");
  EXPECT_FALSE(check_label_flows(pubsub({L::Confidential, "A"}, {L::ManagementOnly, "B"})).ok());
}

TEST(LabelFlows, DependenciesFlowBothWays) {
  using L = SecurityLevel;
  Application app;
  app.components = {component("c"), component("s")};
  app.sigma = {{"c", "v"}, {"s", "v"}};
  app.virtual_nodes = {{"v", "k"}};
  depend(app, "c", "s");
  app.components[0].label = {L::ManagementOnly, "A"};
  app.components[1].label = {L::Confidential, "A"};
  auto audit = check_label_flows(app);
  ASSERT_EQ(audit.violations.size(), 1u);  // the request c -> s
  EXPECT_EQ(audit.violations[0].edge.sender, "c");
  EXPECT_EQ(audit.violations[0].edge.receiver, "s");
}

TEST(LabelFlows, PropertyMatchesEdgeOracle) {
  std::mt19937_64 rng(321);
  const std::vector<SecurityLevel> levels = {SecurityLevel::Confidential, SecurityLevel::CompetitionSensitive,
                                             SecurityLevel::ManagementOnly};
  for (int i = 0; i < 200; ++i) {
    testing::AppShape shape;
    shape.components = 2 + static_cast<int>(rng() % 6);
    shape.topics = 2;
    auto app = testing::random_app(rng, shape);
    for (auto& c : app.components) c.label = {levels[rng() % 3], rng() % 4 == 0 ? "B" : "A"};

    // Oracle edge set straight from the definitions.
    std::set<std::pair<ComponentId, ComponentId>> expected;
    for (const auto& d : app.dependencies) {
      if (!testing::label_ok(app.at(d.server).label, app.at(d.client).label)) expected.insert({d.client, d.server});
      if (!testing::label_ok(app.at(d.client).label, app.at(d.server).label)) expected.insert({d.server, d.client});
    }
    for (const auto& p : app.components) {
      for (const auto& s : app.components) {
        if (p.id == s.id) continue;
        for (const auto& pp : p.ports) {
          for (const auto& sp : s.ports) {
            if (pp.kind == PortKind::Publisher && sp.kind == PortKind::Subscriber && pp.contract == sp.contract &&
                !testing::label_ok(s.label, p.label)) {
              expected.insert({p.id, s.id});
            }
          }
        }
      }
    }
    std::set<std::pair<ComponentId, ComponentId>> got;
    for (const auto& v : check_label_flows(app).violations) got.insert({v.edge.sender, v.edge.receiver});
    EXPECT_EQ(got, expected);
  }
}

// --- plan synthesis ------------------------------------------------------

TEST(SynthPlan, NavigationOnOneNode) {
  auto app = nav_app(true);
  NodeMapping m;
  m.binding["v"] = "n1";
  auto plan = synth_plan(app, m);
  ASSERT_EQ(plan.phases.size(), 4u);
  EXPECT_EQ(plan.phases[0].kind, ActionKind::StartProcess);
  EXPECT_EQ(plan.phases[3].kind, ActionKind::Activate);
  const auto& act = plan.phases[3].actions;
  ASSERT_EQ(act.size(), 3u);
  EXPECT_LT(position(plan, ActionKind::Activate, "GPS"), position(plan, ActionKind::Activate, "NAVDisplay"));
  // The Activate order must be one of the valid orders.
  std::vector<ComponentId> got;
  for (const auto& a : act) got.push_back(a.subject);
  auto all = testing::all_topological_orders(app);
  EXPECT_NE(std::find(all.begin(), all.end(), got), all.end());
}

TEST(SynthPlan, EmptyApplication) {
  EXPECT_TRUE(synth_plan(Application{}, NodeMapping{}).empty());
}

TEST(SynthPlan, TwoIndependentComponents) {
  Application app;
  app.components = {component("a"), component("b")};
  app.sigma = {{"a", "v1"}, {"b", "v2"}};
  app.virtual_nodes = {{"v1", "k"}, {"v2", "k"}};
  NodeMapping m;
  m.binding = {{"v1", "n1"}, {"v2", "n2"}};
  auto plan = synth_plan(app, m);
  auto count = [&](ActionKind k) {
    const auto* p = plan.phase(k);
    return p ? p->actions.size() : 0u;
  };
  EXPECT_EQ(count(ActionKind::StartProcess), 2u);
  EXPECT_EQ(count(ActionKind::Instantiate), 2u);
  EXPECT_EQ(count(ActionKind::Connect), 0u);
  EXPECT_EQ(count(ActionKind::Activate), 2u);
}

TEST(SynthPlan, PropertyOrderingAndCompleteness) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 200; ++i) {
    testing::AppShape shape;
    shape.components = 1 + static_cast<int>(rng() % 9);
    shape.colloc_probability = 0.2;
    auto app = testing::random_app(rng, shape);
    auto cl = testing::cluster_for(app, 3, 10000);
    auto m = map_nodes(app, cl);
    auto plan = synth_plan(app, m);
    for (const auto& d : app.dependencies) {
      EXPECT_LT(position(plan, ActionKind::Activate, d.server), position(plan, ActionKind::Activate, d.client));
    }
    // Counting oracle: one StartProcess per group, one Instantiate/Activate
    // per component, one Connect per dependency and per topic port.
    std::size_t topic_ports = 0;
    for (const auto& c : app.components) {
      for (const auto& p : c.ports) topic_ports += p.is_topic();
    }
    EXPECT_EQ(plan.phase(ActionKind::StartProcess)->actions.size(), process_groups(app).size());
    EXPECT_EQ(plan.phase(ActionKind::Instantiate)->actions.size(), app.components.size());
    EXPECT_EQ(plan.phase(ActionKind::Connect)->actions.size(), app.dependencies.size() + topic_ports);
    EXPECT_EQ(plan.phase(ActionKind::Activate)->actions.size(), app.components.size());

    auto cfg = initial_configuration(cl, m);
    std::string why;
    ASSERT_TRUE(testing::apply_plan(cfg, app, plan, &why)) << why;
    for (const auto& c : app.components) {
      EXPECT_EQ(cfg.state(c.id), ComponentState::Active);
      EXPECT_EQ(cfg.host_of(c.id), node_of(app, m, c.id));
    }
  }
}

TEST(SynthTeardown, ReverseActivationOrder) {
  auto app = nav_app();
  auto cl = testing::uniform_cluster(3);
  auto m = map_nodes(app, cl);
  auto cfg = testing::deployed(app, cl, m);
  auto plan = synth_teardown(app, cfg, {"GPS", "NAVDisplay"});
  EXPECT_LT(position(plan, ActionKind::Deactivate, "NAVDisplay"), position(plan, ActionKind::Deactivate, "GPS"));
  EXPECT_EQ(plan.phases[0].kind, ActionKind::Deactivate);
  EXPECT_EQ(plan.phases[3].kind, ActionKind::StopProcess);
  ASSERT_TRUE(testing::apply_plan(cfg, app, plan));
  EXPECT_EQ(cfg.state("GPS"), ComponentState::Absent);
  EXPECT_EQ(cfg.state("Sensor"), ComponentState::Active);
  EXPECT_THROW(synth_teardown(app, cfg, {"Nope"}), UnknownComponent);
}

TEST(DiffPlans, FixedPoint) {
  auto app = nav_app();
  auto cl = testing::uniform_cluster(3);
  auto m = map_nodes(app, cl);
  auto cfg = testing::deployed(app, cl, m);
  EXPECT_TRUE(diff_plans(app, cfg, m).empty());
}

TEST(DiffPlans, MoveServerReconnectsClient) {
  auto app = nav_app();
  auto cl = testing::uniform_cluster(4);
  auto m = map_nodes(app, cl);
  auto cfg = testing::deployed(app, cl, m);
  auto target = m;
  target.binding["v_gps"] = "n4";
  auto plan = diff_plans(app, cfg, target);
  EXPECT_LT(position(plan, ActionKind::Deactivate, "NAVDisplay"), position(plan, ActionKind::Destroy, "GPS"));
  EXPECT_EQ(position(plan, ActionKind::Deactivate, "Sensor"), plan.size());  // untouched
  ASSERT_TRUE(testing::apply_plan(cfg, app, plan));
  EXPECT_EQ(cfg.host_of("GPS"), "n4");
  for (const auto& c : app.components) EXPECT_EQ(cfg.state(c.id), ComponentState::Active);
}

ConfigurationState essence(ConfigurationState cfg) {
  cfg.normalize();
  cfg.time = 0;
  cfg.mapping = {};
  for (auto it = cfg.connections.begin(); it != cfg.connections.end();) {
    it = it->second.status == ConnectionStatus::Established ? std::next(it) : cfg.connections.erase(it);
  }
  return cfg;
}

TEST(DiffPlans, PropertyReachesTarget) {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 200; ++i) {
    testing::AppShape shape;
    shape.components = 2 + static_cast<int>(rng() % 7);
    shape.colloc_probability = 0.3;
    auto app = testing::random_app(rng, shape);
    auto cl = testing::cluster_for(app, 4, 10000);
    auto current_map = map_nodes(app, cl);
    auto cfg = testing::deployed(app, cl, current_map);
    EXPECT_TRUE(diff_plans(app, cfg, current_map).empty());

    // Random target: every virtual node to a random node of its kind.
    NodeMapping target;
    for (const auto& [v, kind] : app.virtual_nodes) {
      std::vector<NodeId> same;
      for (const auto& n : cl.nodes) {
        if (n.kind == kind) same.push_back(n.id);
      }
      target.binding[v] = same[rng() % same.size()];
    }
    auto plan = diff_plans(app, cfg, target);
    std::string why;
    ASSERT_TRUE(testing::apply_plan(cfg, app, plan, &why)) << why;
    EXPECT_EQ(essence(cfg), essence(testing::deployed(app, cl, target)));

    // Untouched components: same node in both mappings and no server moved.
    std::set<ComponentId> moved;
    for (const auto& c : app.components) {
      if (node_of(app, current_map, c.id) != node_of(app, target, c.id)) moved.insert(c.id);
    }
    auto affected = transitive_clients(app, moved);
    affected.insert(moved.begin(), moved.end());
    for (const auto& a : plan.flatten()) {
      if (auto c = a.component()) EXPECT_TRUE(affected.count(*c)) << to_string(a);
    }
  }
}

}  // namespace
}  // namespace rdeploy
