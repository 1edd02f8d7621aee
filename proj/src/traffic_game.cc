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

#include "tcce/traffic_game.h"

#include <algorithm>
#include <random>

namespace tcce {

std::vector<int> MultiAgentEnv::controlled_agents() const {
  std::vector<int> out;
  for (int i = 0; i < num_agents(); ++i)
    if (is_controlled(i)) out.push_back(i);
  return out;
}

TrafficGame::TrafficGame(std::shared_ptr<const TrafficEnv> env, DriverParams driver)
    : env_(std::move(env)), driver_(driver) {}

TrafficGame::TrafficGame(const ScenarioConfig& config) : TrafficGame(std::make_shared<const TrafficEnv>(config)) {}

std::unique_ptr<MultiAgentEnv> TrafficGame::clone() const { return std::make_unique<TrafficGame>(*this); }

bool TrafficGame::is_controlled(int agent) const {
  const auto& c = env_->config().controlled;
  return c.empty() || c[agent];
}

std::vector<Observation> TrafficGame::reset(std::uint64_t seed) {
  auto [state, obs] = env_->reset(seed);
  state_ = std::move(state);
  started_ = true;
  return obs;
}

StepResult TrafficGame::step(std::span<const Action> joint) {
  if (!started_) throw Error("step: reset() must be called first");
  TrafficEnv::Transition tr = env_->step(state_, joint);
  state_ = std::move(tr.state);
  return {std::move(tr.outcome), std::move(tr.observations)};
}

bool TrafficGame::episode_over() const {
  return !started_ || state_.all_done() || state_.t >= env_->config().horizon;
}

std::vector<Observation> TrafficGame::observations() const {
  std::vector<Observation> out;
  for (int i = 0; i < num_agents(); ++i) out.push_back(env_->observe(state_, i));
  return out;
}

Action TrafficGame::scripted_action(int agent) const { return rule_based_driver(*env_, state_, agent, driver_); }

std::vector<Trajectory> generate_demonstrations(const MultiAgentEnv& prototype, int n_episodes, std::uint64_t seed,
                                                const DemoNoise& noise) {
  if (n_episodes < 1) throw Error("generate_demonstrations: n_episodes must be >= 1");
  std::vector<Trajectory> out;
  const ActionBounds bounds = prototype.action_bounds();
  const std::vector<int> controlled = prototype.controlled_agents();
  for (int ep = 0; ep < n_episodes; ++ep) {
    std::unique_ptr<MultiAgentEnv> env = prototype.clone();
    const std::uint64_t ep_seed = mix_seed(seed, static_cast<std::uint64_t>(ep));
    std::mt19937_64 rng(mix_seed(ep_seed, 0xDE30ULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Observation> obs = env->reset(ep_seed);
    const int n = env->num_agents();
    std::vector<Trajectory> trajs(n);
    for (int i = 0; i < n; ++i) {
      trajs[i].agent = i;
      trajs[i].episode = ep;
    }
    while (!env->episode_over()) {
      std::vector<Action> joint(n);
      std::vector<bool> live(n);
      for (int i = 0; i < n; ++i) {
        live[i] = !env->agent_done(i);
        Action a = env->scripted_action(i);
        a.accel += noise.accel_std * gauss(rng);
        a.heading_change += noise.heading_change_std * gauss(rng);
        joint[i] = bounds.clamp(a);
      }
      StepResult res = env->step(joint);
      for (int i = 0; i < n; ++i) {
        if (!live[i]) continue;
        TrajectoryStep s;
        s.observation = obs[i].normalized();
        s.action = joint[i];
        s.reward = res.outcome.rewards[i];
        s.cost = res.outcome.costs[i];
        s.speed = res.outcome.speeds.empty() ? 0.0 : res.outcome.speeds[i];
        s.min_distance = res.outcome.min_distances.empty() ? kInf : res.outcome.min_distances[i];
        s.collided = res.outcome.collided[i];
        trajs[i].steps.push_back(std::move(s));
      }
      obs = std::move(res.observations);
    }
    for (int i : controlled) out.push_back(std::move(trajs[i]));
  }
  return out;
}

}  // namespace tcce
