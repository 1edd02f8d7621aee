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

#ifndef TCCE_MARKOV_GAME_H_
#define TCCE_MARKOV_GAME_H_

#include <cstdint>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "tcce/core.h"
#include "tcce/multi_agent_env.h"
#include "tcce/policy.h"

namespace tcce {

// Finite-horizon tabular Markov game with simultaneous moves. Joint actions
// are flattened row-major with player 0 most significant.
struct TabularMarkovGame {
  int n_states = 0;
  std::vector<int> action_counts;
  int horizon = 1;
  std::vector<double> initial;  // distribution over states
  // transitions[s][joint] = list of (next state, probability)
  std::vector<std::vector<std::vector<std::pair<int, double>>>> transitions;
  // rewards[i][s][joint], costs[i][s][joint]
  std::vector<std::vector<std::vector<double>>> rewards;
  std::vector<std::vector<std::vector<double>>> costs;

  int n_players() const { return static_cast<int>(action_counts.size()); }
  int n_joint() const;
  int joint_index(const std::vector<int>& actions) const;
  std::vector<int> joint_actions(int index) const;
  // Throws Error on shape problems or transition rows not summing to 1.
  void validate() const;
};

// probs[t][s][a] for one player.
using TabularPolicy = std::vector<std::vector<std::vector<double>>>;

// Expected discounted penalized return r - lambda * c of `player`.
double policy_value(const TabularMarkovGame& game, const std::vector<TabularPolicy>& policies, int player,
                    double gamma, double lambda = 0.0);

struct BestResponse {
  double value = 0.0;
  std::vector<std::vector<int>> policy;             // [t][s]
  std::vector<std::vector<double>> value_to_go;     // [t][s], t = 0..horizon
};

// Dynamic programming over the single-agent MDP induced by the other
// players' policies (the player's own entry in `policies` is ignored).
BestResponse exact_markov_best_response(const TabularMarkovGame& game, const std::vector<TabularPolicy>& policies,
                                        int player, double gamma, double lambda = 0.0);

double exact_markov_gap(const TabularMarkovGame& game, const std::vector<TabularPolicy>& policies, int player,
                        double gamma, double lambda = 0.0);

// Two-agent merge gridworld. Each agent walks cells 0..4 of its own lane into
// a shared merge cell 5 and exits to cell 6 (+10). Both agents ending a step
// on the merge cell crash (cell 7, -10 each). Actions: 0 = wait, 1 = advance.
// Cost 1 while both agents are at cell >= 4 and not yet exited.
struct GridMerge {
  static constexpr int kLaneCells = 5;
  static constexpr int kMergeCell = 5;
  static constexpr int kExit = 6;
  static constexpr int kCrash = 7;
  static constexpr int kPositions = 8;
  static constexpr int kHorizon = 8;
  static constexpr double kGoalReward = 10.0;
  static constexpr double kCrashPenalty = 10.0;

  static int state(int p0, int p1) { return p0 * kPositions + p1; }
  static int pos(int state, int agent) { return agent == 0 ? state / kPositions : state % kPositions; }
  static bool finished(int p) { return p == kExit || p == kCrash; }
};

TabularMarkovGame build_grid_merge_game(int horizon = GridMerge::kHorizon);

// One-hot(ego cell) + one-hot(other cell) + one-hot(t).
std::vector<double> grid_merge_observation(int state, int t, int agent, int horizon);
std::shared_ptr<const ObsLayout> grid_merge_layout(int horizon);

// MultiAgentEnv view of the merge gridworld. An agent advances iff its
// normalized first action coordinate is positive.
class GridMergeEnv : public MultiAgentEnv {
 public:
  explicit GridMergeEnv(int horizon = GridMerge::kHorizon);

  std::unique_ptr<MultiAgentEnv> clone() const override;
  int num_agents() const override { return 2; }
  bool is_controlled(int) const override { return true; }
  std::shared_ptr<const ObsLayout> layout() const override { return layout_; }
  ActionBounds action_bounds() const override { return {}; }
  int horizon() const override { return game_->horizon; }

  std::vector<Observation> reset(std::uint64_t seed) override;
  StepResult step(std::span<const Action> joint) override;

  bool agent_done(int agent) const override;
  bool episode_over() const override;
  int time_step() const override { return t_; }
  std::vector<Observation> observations() const override { return observe(); }
  Action scripted_action(int agent) const override;

  const TabularMarkovGame& game() const { return *game_; }
  int state() const { return state_; }

  static Action action_for(int discrete);
  static int discrete_action(const Action& a);

 private:
  std::vector<Observation> observe() const;

  std::shared_ptr<const TabularMarkovGame> game_;
  std::shared_ptr<const ObsLayout> layout_;
  int state_ = 0;
  int t_ = 0;
  std::mt19937_64 rng_;
};

// Tabular view of a Gaussian policy on the merge gridworld:
// P(advance) = P(u_0 > 0) = Phi(mean_0 / std_0).
TabularPolicy tabularize_gaussian(const GaussianPolicy& policy, int agent, int horizon);

}  // namespace tcce

#endif  // TCCE_MARKOV_GAME_H_
