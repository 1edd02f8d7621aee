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

#ifndef TCCE_TRAFFIC_GAME_H_
#define TCCE_TRAFFIC_GAME_H_

#include <memory>

#include "tcce/driver.h"
#include "tcce/multi_agent_env.h"
#include "tcce/traffic_env.h"

namespace tcce {

// Stateful MultiAgentEnv view of a TrafficEnv. Clones share the immutable
// simulator and copy only the episode state.
class TrafficGame : public MultiAgentEnv {
 public:
  explicit TrafficGame(std::shared_ptr<const TrafficEnv> env, DriverParams driver = {});
  explicit TrafficGame(const ScenarioConfig& config);

  std::unique_ptr<MultiAgentEnv> clone() const override;
  int num_agents() const override { return env_->num_agents(); }
  bool is_controlled(int agent) const override;
  std::shared_ptr<const ObsLayout> layout() const override { return env_->layout(); }
  ActionBounds action_bounds() const override { return env_->config().action_bounds; }
  int horizon() const override { return env_->config().horizon; }

  std::vector<Observation> reset(std::uint64_t seed) override;
  StepResult step(std::span<const Action> joint) override;

  bool agent_done(int agent) const override { return state_.done[agent]; }
  bool episode_over() const override;
  int time_step() const override { return state_.t; }
  std::vector<Observation> observations() const override;
  Action scripted_action(int agent) const override;

  const TrafficEnv& env() const { return *env_; }
  const EnvState& state() const { return state_; }

 private:
  std::shared_ptr<const TrafficEnv> env_;
  DriverParams driver_;
  EnvState state_;
  bool started_ = false;
};

// Noise added to scripted actions when synthesizing demonstrations.
struct DemoNoise {
  double accel_std = 0.5;
  double heading_change_std = 0.01;
};

// Rolls out scripted_action() with seeded Gaussian noise and records one
// trajectory per controlled agent and episode.
std::vector<Trajectory> generate_demonstrations(const MultiAgentEnv& prototype, int n_episodes, std::uint64_t seed,
                                                const DemoNoise& noise = {});

}  // namespace tcce

#endif  // TCCE_TRAFFIC_GAME_H_
