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

#include "tcce/exploitability.h"

#include <algorithm>
#include <cmath>

namespace tcce {

double episode_value(const Trajectory& t, double gamma, double lambda, bool penalized) {
  double v = 0.0;
  double g = 1.0;
  for (const TrajectoryStep& s : t.steps) {
    v += g * (penalized ? s.reward - lambda * s.cost : s.reward);
    g *= gamma;
  }
  return v;
}

namespace {

void mean_se(const std::vector<double>& v, double& mean, double& se) {
  const double n = static_cast<double>(v.size());
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

}  // namespace

ValueEstimate evaluate_agent(const std::vector<EpisodeRecord>& episodes, int agent, double gamma, double lambda,
                             bool penalized) {
  if (episodes.empty()) throw Error("evaluate_agent: no episodes");
  ValueEstimate est;
  for (const auto& ep : episodes) est.per_episode.push_back(episode_value(ep.trajectories[agent], gamma, lambda, penalized));
  mean_se(est.per_episode, est.mean, est.se);
  return est;
}

GapReport paired_gap(const std::vector<EpisodeRecord>& deviation, const std::vector<EpisodeRecord>& policy,
                     int agent, double gamma, double lambda, bool penalized, const std::string& method) {
  if (deviation.size() != policy.size() || deviation.empty())
    throw Error("paired_gap: episode sets must be nonempty and of equal size");
  const ValueEstimate dv = evaluate_agent(deviation, agent, gamma, lambda, penalized);
  const ValueEstimate pv = evaluate_agent(policy, agent, gamma, lambda, penalized);
  std::vector<double> diff(dv.per_episode.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = dv.per_episode[k] - pv.per_episode[k];
  GapReport r;
  r.agent = agent;
  r.method = method;
  r.episodes = static_cast<int>(diff.size());
  mean_se(diff, r.gap, r.se);
  r.value_deviation = dv.mean;
  r.value_policy = pv.mean;
  return r;
}

GapReport br_break_equilibrium(const MultiAgentEnv& prototype, const SolverState& state, int agent, int budget_iters,
                               std::uint64_t seed, const GapOptions& options) {
  if (agent < 0 || agent >= static_cast<int>(state.agents.size()) || !state.controlled[agent])
    throw Error("br_break_equilibrium: agent " + std::to_string(agent) + " is not a controlled agent");
  if (options.eval_episodes < 1) throw Error("br_break_equilibrium: eval_episodes must be >= 1");
  SolverState dev = state;
  dev.seed = mix_seed(seed, 0xB4EA0000ULL + static_cast<std::uint64_t>(agent));
  dev.history.clear();
  TrainOptions train_options;
  train_options.workers = options.workers;
  train_options.only_agent = agent;
  train_options.freeze_lambda = true;
  for (int k = 0; k < budget_iters; ++k) solver_iteration(prototype, dev, train_options);
  const std::uint64_t eval_seed = mix_seed(seed, 0xE7A1ULL);
  const auto ep_dev = collect_rollouts(prototype, dev, options.eval_episodes, eval_seed, options.workers);
  const auto ep_pi = collect_rollouts(prototype, state, options.eval_episodes, eval_seed, options.workers);
  return paired_gap(ep_dev, ep_pi, agent, state.hyper.gamma, state.agents[agent].lagrange.lambda, options.penalized,
                    "break");
}

CandidateFn anchor_candidates(std::shared_ptr<const LaplaceMixturePolicy> anchor, int k_cand) {
  if (!anchor) throw Error("anchor_candidates: no anchor policy");
  if (k_cand < 1 || k_cand > anchor->components())
    throw Error("anchor_candidates: K_cand=" + std::to_string(k_cand) + " exceeds the " +
                std::to_string(anchor->components()) + " mixture components");
  return [anchor, k_cand](const Observation& obs) {
    const LaplaceMixtureDist d = anchor->dist(obs.normalized());
    const std::vector<int> order = d.ranked_components();
    std::vector<NormAction> out;
    for (int k = 0; k < k_cand; ++k) out.push_back(d.loc[order[k]]);
    return out;
  };
}

ValueFn critic_value(const SolverState& state) {
  return [&state](const MultiAgentEnv&, int agent, const Observation& obs) {
    return state.agents[agent].value.predict(obs.normalized());
  };
}

GapReport br_restricted_actions(const MultiAgentEnv& prototype, const SolverState& state,
                                std::shared_ptr<const LaplaceMixturePolicy> anchor, int agent, std::uint64_t seed,
                                const RestrictOptions& ro, const GapOptions& options) {
  if (agent < 0 || agent >= static_cast<int>(state.agents.size()) || !state.controlled[agent])
    throw Error("br_restricted_actions: agent " + std::to_string(agent) + " is not a controlled agent");
  if (options.eval_episodes < 1) throw Error("br_restricted_actions: eval_episodes must be >= 1");
  const CandidateFn candidates = ro.candidates ? ro.candidates : anchor_candidates(anchor, ro.k_cand);
  const ValueFn value = ro.value ? ro.value : critic_value(state);
  const double gamma = state.hyper.gamma;
  const double lambda = state.agents[agent].lagrange.lambda;
  const bool penalized = options.penalized;
  const int samples = std::max(1, ro.opponent_samples);

  Actor deviator = [&](int i, const Observation& obs, const MultiAgentEnv& env, std::mt19937_64& rng) {
    const std::vector<NormAction> cands = candidates(obs);
    if (cands.empty()) throw Error("br_restricted_actions: empty candidate set");
    const int n = env.num_agents();
    const ActionBounds bounds = env.action_bounds();
    const std::vector<Observation> all_obs = env.observations();
    // Opponent joint actions shared by all candidates.
    std::vector<std::vector<Action>> opponents(samples, std::vector<Action>(n));
    for (int m = 0; m < samples; ++m) {
      for (int j = 0; j < n; ++j) {
        if (j == i || env.agent_done(j)) continue;
        if (state.controlled[j]) {
          const NormAction u = state.agents[j].policy.sample(all_obs[j].normalized(), rng);
          opponents[m][j] = bounds.clamp(bounds.from_normalized(u[0], u[1]));
        } else {
          opponents[m][j] = bounds.clamp(env.scripted_action(j));
        }
      }
    }
    double best_score = -kInf;
    NormAction best = cands.front();
    for (const NormAction& u : cands) {
      double score = 0.0;
      for (int m = 0; m < samples; ++m) {
        std::vector<Action> joint = opponents[m];
        joint[i] = bounds.clamp(bounds.from_normalized(u[0], u[1]));
        std::unique_ptr<MultiAgentEnv> sim = env.clone();
        StepResult res = sim->step(joint);
        double s = penalized ? res.outcome.rewards[i] - lambda * res.outcome.costs[i] : res.outcome.rewards[i];
        if (!sim->agent_done(i)) s += gamma * value(*sim, i, res.observations[i]);
        score += s;
      }
      score /= samples;
      if (score > best_score) {
        best_score = score;
        best = u;
      }
    }
    return best;
  };
  std::vector<Actor> overrides(state.agents.size());
  overrides[agent] = deviator;
  const std::uint64_t eval_seed = mix_seed(seed, 0xE7A2ULL);
  const auto ep_dev = collect_rollouts(prototype, state, options.eval_episodes, eval_seed, options.workers, &overrides);
  const auto ep_pi = collect_rollouts(prototype, state, options.eval_episodes, eval_seed, options.workers);
  return paired_gap(ep_dev, ep_pi, agent, gamma, lambda, penalized, "restrict");
}

}  // namespace tcce
