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

namespace rdeploy::sim {
namespace {

using testing::nav_app;

TEST(RngTest, DeterministicAndInRange) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    auto x = a.uniform(-3, 7);
    EXPECT_EQ(x, b.uniform(-3, 7));
    EXPECT_GE(x, -3);
    EXPECT_LE(x, 7);
  }
  Rng c(1);
  EXPECT_EQ(c.uniform(5, 5), 5);
  // Every value of a small range shows up.
  std::set<std::int64_t> seen;
  for (int i = 0; i < 200; ++i) seen.insert(c.uniform(0, 3));
  EXPECT_EQ(seen.size(), 4u);
}

TEST(EventQueueTest, TimeThenSequence) {
  EventQueue q;
  q.schedule(5, Crash{"a"});
  q.schedule(1, Crash{"b"});
  q.schedule(5, Crash{"c"});
  q.schedule(1, Crash{"d"});
  std::vector<std::string> got;
  while (!q.empty()) got.push_back(std::get<Crash>(q.pop().payload).node);
  EXPECT_EQ(got, (std::vector<std::string>{"b", "d", "a", "c"}));
}

TEST(NetworkTest, FifoPerPair) {
  Rng rng(9);
  Network net(DelayModel::uniform(1, 50), rng);
  EventQueue q;
  for (SimTime t = 0; t < 200; ++t) {
    DmMessage m;
    m.from = t % 2 ? "a" : "b";
    m.to = "c";
    m.ref = static_cast<std::uint64_t>(t);
    net.send(q, m, t);
  }
  std::map<NodeId, std::uint64_t> last;
  while (!q.empty()) {
    auto e = q.pop();
    const auto& m = std::get<Deliver>(e.payload).message;
    EXPECT_GE(e.time, m.sent + 1);
    if (last.count(m.from)) EXPECT_GT(m.ref, last[m.from]);
    last[m.from] = m.ref;
  }
}

TEST(ScenarioTest, Validation) {
  Scenario s;
  s.delay = {5, 2};
  EXPECT_THROW(validate_scenario(s), InvalidScenario);
  s.delay = {1, 1};
  s.crashes.push_back({"n1", -1});
  EXPECT_THROW(validate_scenario(s), InvalidScenario);
  auto parsed = scenario_from_json(load_json_file(testing::data_path("crash_gps.json")));
  EXPECT_EQ(parsed.crashes, (std::vector<CrashInjection>{{"n2", 500}}));
  EXPECT_EQ(parsed.delay, DelayModel::uniform(2, 8));
  EXPECT_EQ(to_json(scenario_from_json(to_json(parsed))).dump(), to_json(parsed).dump());
}

Scenario scenario(std::uint64_t seed, std::vector<CrashInjection> crashes = {}) {
  Scenario s;
  s.seed = seed;
  s.delay = DelayModel::uniform(1, 9);
  s.crashes = std::move(crashes);
  return s;
}

TEST(SimulationTest, SameSeedSameLog) {
  auto app = nav_app();
  auto cl = testing::uniform_cluster(4);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto s = scenario(seed, {{"n2", 37}});
    auto a = run(app, cl, s);
    auto b = run(app, cl, s);
    EXPECT_EQ(a.log.to_jsonl(), b.log.to_jsonl());
  }
  EXPECT_NE(run(app, cl, scenario(1)).log.to_jsonl(), run(app, cl, scenario(2)).log.to_jsonl());
}

TEST(SimulationTest, CrashedNodeNeitherSendsNorReceives) {
  auto app = nav_app();
  auto cl = testing::uniform_cluster(4);
  auto r = run(app, cl, scenario(4, {{"n3", 200}}));
  bool after = false;
  for (const auto& rec : r.log.records()) {
    if (rec["kind"] == "crash") after = true;
    if (!after) continue;
    if (rec["kind"] == "apply") EXPECT_NE(rec["node"], "n3");
    if (rec["kind"] == "heartbeat") EXPECT_NE(rec["node"], "n3");
  }
  EXPECT_GT(r.log.count("dropped"), 0u);
}

// In-flight messages of a crashed node are lost, so the last heartbeat that
// arrives was sent at most one period plus the delay spread before the
// crash. The crash is suspected strictly after the timeout measured from
// that arrival and no later than the timeout plus the largest delay.
TEST(SimulationTest, DetectionLatencyBounds) {
  auto app = nav_app();
  auto cl = testing::uniform_cluster(4);
  std::mt19937_64 rng(15);
  for (int i = 0; i < 40; ++i) {
    const SimTime crash_at = 50 + static_cast<SimTime>(rng() % 400);
    auto s = scenario(rng(), {{"n3", crash_at}});
    auto r = run(app, cl, s);
    SimTime first = -1;
    for (const auto& rec : r.log.of_kind("suspect")) {
      if (rec["node"] == "n3") {
        first = rec["t"].get<SimTime>();
        break;
      }
    }
    ASSERT_GE(first, 0);
    const SimTime timeout = s.heartbeat_period * s.miss_threshold;
    EXPECT_GE(first - crash_at, timeout - s.heartbeat_period - (s.delay.max - s.delay.min) + 1);
    EXPECT_LE(first - crash_at, timeout + s.delay.max + 1);
  }
}

TEST(SimulationTest, RejectsBadInput) {
  auto app = nav_app();
  auto cl = testing::uniform_cluster(4);
  EXPECT_THROW(run(app, cl, scenario(1, {{"nx", 5}})), UnknownNode);
  auto small = testing::uniform_cluster(1, 100);
  EXPECT_THROW(run(app, small, scenario(1)), NoFeasibleNode);
  auto bad = app;
  bad.components[2].label = {SecurityLevel::Confidential, "B"};
  EXPECT_THROW(run(bad, cl, scenario(1)), LabelFlowViolation);
}

}  // namespace
}  // namespace rdeploy::sim
