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

// Command-line front end: validate, plan, run.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rdeploy/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rdeploy: plan and simulate component deployments"};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));

  std::string app_path, cluster_path, scenario_path, out_path;
  std::optional<std::uint64_t> seed;

  auto* validate = app.add_subcommand("validate", "Check an application description");
  validate->add_option("app", app_path)->required();

  auto* plan = app.add_subcommand("plan", "Map virtual nodes and print the deployment plan");
  plan->add_option("app", app_path)->required();
  plan->add_option("cluster", cluster_path)->required();

  auto* run = app.add_subcommand("run", "Simulate deployment under a failure scenario");
  run->add_option("app", app_path)->required();
  run->add_option("cluster", cluster_path)->required();
  run->add_option("scenario", scenario_path)->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_path, "Event log path (JSON lines)");

  for (auto* sub : {validate, plan, run}) {
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : rdeploy::cli::kParse;
  }

  const auto fmt = format == "json" ? rdeploy::cli::Format::Json : rdeploy::cli::Format::Text;
  rdeploy::cli::Streams io{std::cout, std::cerr};
  try {
    if (*validate) return rdeploy::cli::cmd_validate(app_path, fmt, io);
    if (*plan) return rdeploy::cli::cmd_plan(app_path, cluster_path, fmt, io);
    return rdeploy::cli::cmd_run(app_path, cluster_path, scenario_path, seed, out_path, fmt, io);
  } catch (const rdeploy::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rdeploy::cli::kRejected;
  }
}
