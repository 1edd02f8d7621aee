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

#ifndef TCCE_EXPLOITABILITY_H_
#define TCCE_EXPLOITABILITY_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tcce/multi_agent_env.h"
#include "tcce/policy.h"
#include "tcce/solver.h"

namespace tcce {

struct GapReport {
  int agent = 0;
  std::string method;  // break | restrict | exact
  double gap = 0.0;
  double se = 0.0;
  int episodes = 0;
  double value_deviation = 0.0;
  double value_policy = 0.0;
};

// Discounted return of one trajectory as r - lambda * c (or r alone).
double episode_value(const Trajectory& t, double gamma, double lambda, bool penalized = true);

// Mean and standard error of the per-episode values of `agent`.
struct ValueEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::vector<double> per_episode;
};
ValueEstimate evaluate_agent(const std::vector<EpisodeRecord>& episodes, int agent, double gamma, double lambda,
                             bool penalized = true);

// Paired (common random numbers) difference of deviation and policy values.
GapReport paired_gap(const std::vector<EpisodeRecord>& deviation, const std::vector<EpisodeRecord>& policy,
                     int agent, double gamma, double lambda, bool penalized, const std::string& method);

struct GapOptions {
  int eval_episodes = 100;
  int workers = 1;
  bool penalized = true;
};

// Continues solver updates for `agent` alone (others frozen, lambda fixed)
// for budget_iters iterations, then compares the deviator to the current
// joint policy on common evaluation seeds.
GapReport br_break_equilibrium(const MultiAgentEnv& prototype, const SolverState& state, int agent, int budget_iters,
                               std::uint64_t seed, const GapOptions& options = {});

// Candidate normalized actions available to the deviator at an observation.
using CandidateFn = std::function<std::vector<NormAction>(const Observation& obs)>;
// Value-to-go of `agent` at a successor environment state.
using ValueFn = std::function<double(const MultiAgentEnv& env, int agent, const Observation& obs)>;

// The K_cand component locations of the anchor with the largest weights.
CandidateFn anchor_candidates(std::shared_ptr<const LaplaceMixturePolicy> anchor, int k_cand);
// The agent's value critic.
ValueFn critic_value(const SolverState& state);

struct RestrictOptions {
  int k_cand = 4;
  // Opponent action samples averaged by the one-step lookahead.
  int opponent_samples = 8;
  CandidateFn candidates;  // default: anchor_candidates(anchor, k_cand)
  ValueFn value;           // default: critic_value(state)
};

// The deviator greedily picks, at every step, the candidate maximizing the
// expected one-step penalized reward plus gamma times the successor value.
GapReport br_restricted_actions(const MultiAgentEnv& prototype, const SolverState& state,
                                std::shared_ptr<const LaplaceMixturePolicy> anchor, int agent, std::uint64_t seed,
                                const RestrictOptions& restrict_options, const GapOptions& options = {});

}  // namespace tcce

#endif  // TCCE_EXPLOITABILITY_H_
