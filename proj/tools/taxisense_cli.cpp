// Copyright 2026 The taxisense Authors
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

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taxisense/cli.hpp"

namespace {

using taxisense::Mechanism;
namespace cli = taxisense::cli;

const std::map<std::string, Mechanism> kMechanism{{"vcg", Mechanism::kVcg},
                                                  {"rbc", Mechanism::kRbc}};

std::vector<Mechanism> mechanisms(const std::string& choice) {
  if (choice == "both") return {Mechanism::kVcg, Mechanism::kRbc};
  return {kMechanism.at(choice)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ride-hailing dispatch with auction-based sensing tasks"};
  app.require_subcommand(1);

  cli::RunOptions run;
  std::string run_mechanism = "rbc";
  std::uint64_t run_seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario under one mechanism");
  run_cmd->add_option("config", run.config_path, "Config or scenario JSON")->required();
  run_cmd->add_option("--mechanism", run_mechanism)->check(CLI::IsMember({"vcg", "rbc"}));
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "Defaults to the config seed");
  run_cmd->add_option("--out", run.out_dir, "Output directory");

  cli::CompareOptions compare;
  auto* compare_cmd = app.add_subcommand("compare", "Both mechanisms over several seeds");
  compare_cmd->add_option("config", compare.config_path)->required();
  compare_cmd->add_option("--seeds", compare.seeds, "Number of seeds");
  compare_cmd->add_option("--first-seed", compare.first_seed);
  compare_cmd->add_option("--out", compare.out_dir);
  compare_cmd->add_option("--jobs", compare.jobs);

  cli::SweepOptions sweep;
  std::string sweep_mechanism = "both";
  auto* sweep_cmd = app.add_subcommand("sweep", "Vary one parameter; long-format CSV");
  sweep_cmd->add_option("config", sweep.config_path)->required();
  sweep_cmd->add_option("--param", sweep.param, "n_type_a|n_type_b|bid_bounds|demand_level|omega")
      ->required();
  sweep_cmd->add_option("--values", sweep.values, "Comma-separated; bid_bounds as LOW:HIGH")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep.seeds);
  sweep_cmd->add_option("--first-seed", sweep.first_seed);
  sweep_cmd->add_option("--mechanism", sweep_mechanism)
      ->check(CLI::IsMember({"vcg", "rbc", "both"}));
  sweep_cmd->add_option("--out", sweep.out_dir);
  sweep_cmd->add_option("--jobs", sweep.jobs);

  cli::VerifyOptions verify;
  std::string verify_mechanism = "both";
  std::string params_path;
  auto* verify_cmd = app.add_subcommand("verify", "Run a mechanism property suite");
  verify_cmd->add_option("--suite", verify.suite)
      ->required()
      ->check(CLI::IsMember({"ir", "ic", "bb", "ae", "oracle"}));
  verify_cmd->add_option("--instances", verify.instances);
  verify_cmd->add_option("--seed", verify.seed);
  verify_cmd->add_option("--mechanism", verify_mechanism)
      ->check(CLI::IsMember({"vcg", "rbc", "both"}));
  verify_cmd->add_option("--out", verify.out_dir, "Where a counterexample is written");
  auto* params_opt = verify_cmd->add_option("--params", params_path, "Parameter overrides JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kConfigError;
  }

  if (*run_cmd) {
    run.mechanism = kMechanism.at(run_mechanism);
    if (*seed_opt) run.seed = run_seed;
    return cli::cmd_run(run);
  }
  if (*compare_cmd) return cli::cmd_compare(compare);
  if (*sweep_cmd) {
    sweep.mechanisms = mechanisms(sweep_mechanism);
    return cli::cmd_sweep(sweep);
  }
  verify.mechanisms = mechanisms(verify_mechanism);
  if (*params_opt) verify.params_path = params_path;
  return cli::cmd_verify(verify);
}
