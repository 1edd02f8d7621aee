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

#ifndef TCCE_MULTI_AGENT_ENV_H_
#define TCCE_MULTI_AGENT_ENV_H_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tcce/core.h"

namespace tcce {

struct StepResult {
  StepOutcome outcome;
  std::vector<Observation> observations;
};

// Stateful episode driver seen by the solver and the exploitability
// estimators. Implementations are clonable so that look-ahead search can
// branch from any point of an episode.
class MultiAgentEnv {
 public:
  virtual ~MultiAgentEnv() = default;

  virtual std::unique_ptr<MultiAgentEnv> clone() const = 0;

  virtual int num_agents() const = 0;
  // Uncontrolled agents are driven by scripted_action().
  virtual bool is_controlled(int agent) const = 0;
  virtual std::shared_ptr<const ObsLayout> layout() const = 0;
  virtual ActionBounds action_bounds() const = 0;
  virtual int horizon() const = 0;

  virtual std::vector<Observation> reset(std::uint64_t seed) = 0;
  // One action per agent; actions of done agents are ignored.
  virtual StepResult step(std::span<const Action> joint) = 0;

  virtual bool agent_done(int agent) const = 0;
  virtual bool episode_over() const = 0;
  virtual int time_step() const = 0;
  // Current observation of every agent.
  virtual std::vector<Observation> observations() const = 0;

  // Deterministic demonstration behaviour for `agent` in the current state.
  virtual Action scripted_action(int agent) const = 0;

  std::vector<int> controlled_agents() const;
};

}  // namespace tcce

#endif  // TCCE_MULTI_AGENT_ENV_H_
