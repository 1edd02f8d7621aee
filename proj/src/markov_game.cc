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

#include "tcce/markov_game.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace tcce {

int TabularMarkovGame::n_joint() const {
  int n = 1;
  for (int c : action_counts) n *= c;
  return n;
}

int TabularMarkovGame::joint_index(const std::vector<int>& actions) const {
  int idx = 0;
  for (int i = 0; i < n_players(); ++i) idx = idx * action_counts[i] + actions[i];
  return idx;
}

std::vector<int> TabularMarkovGame::joint_actions(int index) const {
  std::vector<int> a(action_counts.size());
  for (int i = n_players() - 1; i >= 0; --i) {
    a[i] = index % action_counts[i];
    index /= action_counts[i];
  }
  return a;
}

void TabularMarkovGame::validate() const {
  if (n_states < 1 || action_counts.empty() || horizon < 1) throw Error("markov game: empty game");
  if (static_cast<int>(initial.size()) != n_states) throw Error("markov game: initial distribution size mismatch");
  if (static_cast<int>(transitions.size()) != n_states) throw Error("markov game: transition table size mismatch");
  if (static_cast<int>(rewards.size()) != n_players() || static_cast<int>(costs.size()) != n_players())
    throw Error("markov game: one reward and cost table per player required");
  for (int s = 0; s < n_states; ++s) {
    if (static_cast<int>(transitions[s].size()) != n_joint()) throw Error("markov game: transition row count mismatch");
    for (const auto& row : transitions[s]) {
      double total = 0.0;
      for (const auto& [next, p] : row) {
        if (next < 0 || next >= n_states || p < 0.0) throw Error("markov game: invalid transition entry");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw Error("markov game: transition row of state " + std::to_string(s) + " sums to " + std::to_string(total));
    }
  }
}

namespace {

void check_policies(const TabularMarkovGame& game, const std::vector<TabularPolicy>& policies, int skip) {
  if (static_cast<int>(policies.size()) != game.n_players()) throw Error("markov game: one policy per player required");
  for (int i = 0; i < game.n_players(); ++i) {
    if (i == skip) continue;
    if (static_cast<int>(policies[i].size()) < game.horizon) throw Error("markov game: policy shorter than horizon");
    for (int t = 0; t < game.horizon; ++t)
      if (static_cast<int>(policies[i][t].size()) != game.n_states) throw Error("markov game: policy state count mismatch");
  }
}

// Probability of joint action `j` under all players' policies except `skip`
// (whose own action is taken as given).
double joint_prob(const TabularMarkovGame& game, const std::vector<TabularPolicy>& policies, int t, int s,
                  const std::vector<int>& actions, int skip) {
  double p = 1.0;
  for (int i = 0; i < game.n_players(); ++i)
    if (i != skip) p *= policies[i][t][s][actions[i]];
  return p;
}

}  // namespace

double policy_value(const TabularMarkovGame& game, const std::vector<TabularPolicy>& policies, int player,
                    double gamma, double lambda) {
  game.validate();
  check_policies(game, policies, -1);
  std::vector<double> next(game.n_states, 0.0), cur(game.n_states);
  for (int t = game.horizon - 1; t >= 0; --t) {
    for (int s = 0; s < game.n_states; ++s) {
      double v = 0.0;
      for (int j = 0; j < game.n_joint(); ++j) {
        const std::vector<int> a = game.joint_actions(j);
        const double p = joint_prob(game, policies, t, s, a, -1);
        if (p == 0.0) continue;
        double q = game.rewards[player][s][j] - lambda * game.costs[player][s][j];
        for (const auto& [ns, pt] : game.transitions[s][j]) q += gamma * pt * next[ns];
        v += p * q;
      }
      cur[s] = v;
    }
    std::swap(cur, next);
  }
  double value = 0.0;
  for (int s = 0; s < game.n_states; ++s) value += game.initial[s] * next[s];
  return value;
}

BestResponse exact_markov_best_response(const TabularMarkovGame& game, const std::vector<TabularPolicy>& policies,
                                        int player, double gamma, double lambda) {
  game.validate();
  check_policies(game, policies, player);
  BestResponse br;
  br.value_to_go.assign(game.horizon + 1, std::vector<double>(game.n_states, 0.0));
  br.policy.assign(game.horizon, std::vector<int>(game.n_states, 0));
  const int n_own = game.action_counts[player];
  for (int t = game.horizon - 1; t >= 0; --t) {
    for (int s = 0; s < game.n_states; ++s) {
      std::vector<double> q(n_own, 0.0);
      for (int j = 0; j < game.n_joint(); ++j) {
        const std::vector<int> a = game.joint_actions(j);
        const double p = joint_prob(game, policies, t, s, a, player);
        if (p == 0.0) continue;
        double v = game.rewards[player][s][j] - lambda * game.costs[player][s][j];
        for (const auto& [ns, pt] : game.transitions[s][j]) v += gamma * pt * br.value_to_go[t + 1][ns];
        q[a[player]] += p * v;
      }
      const int best = static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
      br.policy[t][s] = best;
      br.value_to_go[t][s] = q[best];
    }
  }
  for (int s = 0; s < game.n_states; ++s) br.value += game.initial[s] * br.value_to_go[0][s];
  return br;
}

double exact_markov_gap(const TabularMarkovGame& game, const std::vector<TabularPolicy>& policies, int player,
                        double gamma, double lambda) {
  return exact_markov_best_response(game, policies, player, gamma, lambda).value -
         policy_value(game, policies, player, gamma, lambda);
}

TabularMarkovGame build_grid_merge_game(int horizon) {
  using G = GridMerge;
  TabularMarkovGame game;
  game.n_states = G::kPositions * G::kPositions;
  game.action_counts = {2, 2};
  game.horizon = horizon;
  game.initial.assign(game.n_states, 0.0);
  game.initial[G::state(0, 0)] = 1.0;
  game.transitions.assign(game.n_states, {});
  game.rewards.assign(2, std::vector<std::vector<double>>(game.n_states, std::vector<double>(4, 0.0)));
  game.costs = game.rewards;
  for (int s = 0; s < game.n_states; ++s) {
    for (int j = 0; j < 4; ++j) {
      const std::vector<int> a = game.joint_actions(j);
      int p[2] = {G::pos(s, 0), G::pos(s, 1)};
      int q[2] = {p[0], p[1]};
      for (int i = 0; i < 2; ++i)
        if (!G::finished(p[i]) && a[i] == 1) q[i] = p[i] + 1;
      if (q[0] == G::kMergeCell && q[1] == G::kMergeCell) {
        q[0] = q[1] = G::kCrash;
        for (int i = 0; i < 2; ++i) game.rewards[i][s][j] = -G::kCrashPenalty;
      } else {
        for (int i = 0; i < 2; ++i)
          if (p[i] == G::kMergeCell && q[i] == G::kExit) game.rewards[i][s][j] = G::kGoalReward;
      }
      const bool close = (q[0] == 4 || q[0] == G::kMergeCell) && (q[1] == 4 || q[1] == G::kMergeCell);
      for (int i = 0; i < 2; ++i)
        if (!G::finished(p[i]) && close) game.costs[i][s][j] = 1.0;
      game.transitions[s].push_back({{G::state(q[0], q[1]), 1.0}});
    }
  }
  game.validate();
  return game;
}

std::vector<double> grid_merge_observation(int state, int t, int agent, int horizon) {
  std::vector<double> obs(2 * GridMerge::kPositions + horizon + 1, 0.0);
  obs[GridMerge::pos(state, agent)] = 1.0;
  obs[GridMerge::kPositions + GridMerge::pos(state, 1 - agent)] = 1.0;
  obs[2 * GridMerge::kPositions + std::clamp(t, 0, horizon)] = 1.0;
  return obs;
}

std::shared_ptr<const ObsLayout> grid_merge_layout(int horizon) {
  auto layout = std::make_shared<ObsLayout>();
  for (int k = 0; k < GridMerge::kPositions; ++k) {
    layout->ego_slots.push_back(layout->names.size());
    layout->names.push_back("ego.cell" + std::to_string(k));
  }
  for (int k = 0; k < GridMerge::kPositions; ++k) layout->names.push_back("other.cell" + std::to_string(k));
  for (int t = 0; t <= horizon; ++t) layout->names.push_back("t" + std::to_string(t));
  layout->scale.assign(layout->names.size(), 1.0);
  layout->frame_size = layout->names.size();
  layout->frames = 1;
  return layout;
}

GridMergeEnv::GridMergeEnv(int horizon)
    : game_(std::make_shared<const TabularMarkovGame>(build_grid_merge_game(horizon))),
      layout_(grid_merge_layout(horizon)) {}

std::unique_ptr<MultiAgentEnv> GridMergeEnv::clone() const { return std::make_unique<GridMergeEnv>(*this); }

Action GridMergeEnv::action_for(int discrete) { return ActionBounds{}.from_normalized(discrete ? 0.5 : -0.5, 0.0); }

int GridMergeEnv::discrete_action(const Action& a) { return ActionBounds{}.to_normalized(a)[0] > 0.0 ? 1 : 0; }

std::vector<Observation> GridMergeEnv::observe() const {
  std::vector<Observation> out(2);
  for (int i = 0; i < 2; ++i) {
    out[i].values = grid_merge_observation(state_, t_, i, game_->horizon);
    out[i].layout = layout_;
  }
  return out;
}

std::vector<Observation> GridMergeEnv::reset(std::uint64_t seed) {
  rng_.seed(mix_seed(seed, 0x6E1DULL));
  std::discrete_distribution<int> init(game_->initial.begin(), game_->initial.end());
  state_ = init(rng_);
  t_ = 0;
  return observe();
}

bool GridMergeEnv::agent_done(int agent) const {
  return t_ >= game_->horizon || GridMerge::finished(GridMerge::pos(state_, agent));
}

bool GridMergeEnv::episode_over() const { return agent_done(0) && agent_done(1); }

StepResult GridMergeEnv::step(std::span<const Action> joint) {
  if (episode_over()) throw Error("step: episode already finished");
  if (joint.size() != 2) throw Error("step: expected one action per agent");
  const int j = game_->joint_index({discrete_action(joint[0]), discrete_action(joint[1])});
  const auto& row = game_->transitions[state_][j];
  std::vector<double> probs;
  for (const auto& e : row) probs.push_back(e.second);
  std::discrete_distribution<int> pick(probs.begin(), probs.end());
  const int next = row[row.size() == 1 ? 0 : pick(rng_)].first;
  StepResult res;
  StepOutcome& o = res.outcome;
  const bool was_done[2] = {agent_done(0), agent_done(1)};
  for (int i = 0; i < 2; ++i) {
    o.rewards.push_back(was_done[i] ? 0.0 : game_->rewards[i][state_][j]);
    o.costs.push_back(was_done[i] ? 0.0 : game_->costs[i][state_][j]);
    o.collided.push_back(!was_done[i] && GridMerge::pos(next, i) == GridMerge::kCrash);
    o.speeds.push_back(GridMerge::pos(next, i) != GridMerge::pos(state_, i) ? 1.0 : 0.0);
  }
  const int p0 = GridMerge::pos(next, 0);
  const int p1 = GridMerge::pos(next, 1);
  const double gap = (GridMerge::finished(p0) || GridMerge::finished(p1)) ? kInf : std::abs(p0 - p1);
  o.min_distances = {gap, gap};
  state_ = next;
  ++t_;
  o.done = {agent_done(0), agent_done(1)};
  res.observations = observe();
  return res;
}

Action GridMergeEnv::scripted_action(int agent) const {
  const int self = GridMerge::pos(state_, agent);
  const int other = GridMerge::pos(state_, 1 - agent);
  // Agent 0 has priority; agent 1 yields when both wait to enter the merge.
  if (agent == 1 && self == GridMerge::kLaneCells - 1 && other == GridMerge::kLaneCells - 1) return action_for(0);
  return action_for(1);
}

TabularPolicy tabularize_gaussian(const GaussianPolicy& policy, int agent, int horizon) {
  const int n_states = GridMerge::kPositions * GridMerge::kPositions;
  TabularPolicy out(horizon, std::vector<std::vector<double>>(n_states));
  for (int t = 0; t < horizon; ++t) {
    for (int s = 0; s < n_states; ++s) {
      const GaussianDist d = policy.dist(grid_merge_observation(s, t, agent, horizon));
      const double p_adv = 0.5 * std::erfc(-d.mean[0] / (std::exp(d.log_std[0]) * std::sqrt(2.0)));
      out[t][s] = {1.0 - p_adv, p_adv};
    }
  }
  return out;
}

}  // namespace tcce
