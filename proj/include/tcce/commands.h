// Copyright 2026 The tcce Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TCCE_COMMANDS_H_
#define TCCE_COMMANDS_H_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tcce/config.h"
#include "tcce/exploitability.h"
#include "tcce/multi_agent_env.h"
#include "tcce/solver.h"

namespace tcce {

// Traffic scenario for the six map kinds, the tabular game for "grid_merge".
std::unique_ptr<MultiAgentEnv> make_env(const ScenarioConfig& scenario);

// Demonstrations as CSV: one row per (episode, agent, step) with the
// normalized observation in trailing columns.
void save_demos(const std::filesystem::path& path, const std::vector<Trajectory>& demos);
std::vector<Trajectory> load_demos(const std::filesystem::path& path);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<IterationMetrics>& history);
// One row per iteration with one multiplier column per agent.
void write_lambda_csv(const std::filesystem::path& path, const std::vector<IterationMetrics>& history, int n_agents);

struct TrainOutcome {
  SolverState state;
  std::vector<Trajectory> demos;
};

// Trains one configuration into `dir`: demos.csv, anchor (reused when
// anchor.ckpt already exists there), metrics.csv, lambda.csv, checkpoint/
// and resolved_config.json. The config is resolved first.
TrainOutcome train_run(const RunConfig& config, const std::filesystem::path& dir);

struct EvalSummary {
  double mean_reward = 0.0;     // undiscounted, per controlled trajectory
  double mean_disc_cost = 0.0;  // discounted, per controlled trajectory
  double mean_min_distance = 0.0;
  double crash_rate = 0.0;
  double mean_lambda = 0.0;
  std::vector<Trajectory> trajectories;  // controlled agents only
};

// Rolls out the current joint policy for `episodes` episodes.
EvalSummary evaluate_policy(const MultiAgentEnv& env, const SolverState& state, int episodes, std::uint64_t seed,
                            int workers = 1);

// Gap reports of every controlled agent with the configured estimator.
std::vector<GapReport> compute_gaps(const RunConfig& config, const MultiAgentEnv& env, const SolverState& state,
                                    const std::string& method);

// Each command catches errors, prints a diagnostic to stderr and returns a
// nonzero status on failure.
int cmd_train(const RunConfig& config);
int cmd_gap(const RunConfig& config, const std::filesystem::path& checkpoint, const std::string& method);
int cmd_fidelity(const RunConfig& config, const std::filesystem::path& checkpoint,
                 const std::filesystem::path& demo_path);
int cmd_rollout_export(const RunConfig& config, const std::filesystem::path& checkpoint, int n_episodes);

}  // namespace tcce

#endif  // TCCE_COMMANDS_H_
