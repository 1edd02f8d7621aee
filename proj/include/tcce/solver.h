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

#ifndef TCCE_SOLVER_H_
#define TCCE_SOLVER_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "tcce/core.h"
#include "tcce/critics.h"
#include "tcce/multi_agent_env.h"
#include "tcce/policy.h"

namespace tcce {

// Mean of the ceil(alpha * N) largest values. Throws on empty input.
double cvar(std::span<const double> values, double alpha);

struct LagrangeState {
  double lambda = 0.0;
  double lr = 0.01;
  std::vector<double> history;
};

// Projected dual ascent: lambda <- max(0, lambda + lr * (signal - epsilon)).
LagrangeState lagrange_update(LagrangeState state, double signal, double epsilon_cost);

// Visit counts over a tiling of the ego slots of normalized observations.
class DensityEstimator {
 public:
  DensityEstimator() = default;
  DensityEstimator(std::vector<std::size_t> slots, double tile, double rho_min);

  std::uint64_t key(std::span<const double> normalized_obs) const;
  void add(std::span<const double> normalized_obs);
  // count / total, floored at rho_min (rho_min when nothing was counted).
  double density(std::span<const double> normalized_obs) const;
  std::uint64_t total() const { return total_; }
  std::uint64_t count(std::span<const double> normalized_obs) const;

 private:
  std::vector<std::size_t> slots_;
  double tile_ = 0.5;
  double rho_min_ = 1e-3;
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

double exploration_bonus(const DensityEstimator& density, std::span<const double> normalized_obs,
                         double bonus_scale, double beta_max, double rho_min);

// r + beta + eta1 * logp_anchor + (1 / eta2) * logp_prev.
double shaped_reward(double r, double beta, double logp_anchor, double logp_prev, double eta1, double eta2);

// Generalized advantage estimation over one trajectory with terminal
// bootstrap 0. Returns advantages; returns are advantages + values.
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                        double gae_lambda);

struct AgentModels {
  GaussianPolicy policy;
  GaussianPolicy prev;  // frozen previous iterate
  ValueCritic value;
  QuantileCritic cost;
  Adam policy_opt;
  Adam value_opt;
  Adam cost_opt;
  LagrangeState lagrange;
  DensityEstimator density;
};

struct IterationMetrics {
  int iteration = 0;
  int agent = 0;
  double mean_reward = 0.0;     // undiscounted raw episode reward
  double mean_disc_cost = 0.0;  // discounted episode cost
  double kl_anchor = 0.0;
  double kl_prev = 0.0;
  double entropy = 0.0;
  double lambda = 0.0;
  double crash_rate = 0.0;
  double cce_gap = std::numeric_limits<double>::quiet_NaN();
};

struct SolverState {
  Hyperparams hyper;
  std::uint64_t seed = 0;
  int iteration = 0;
  // Indexed by agent id; entries of uncontrolled agents are unused.
  std::vector<AgentModels> agents;
  std::vector<bool> controlled;
  std::shared_ptr<const LaplaceMixturePolicy> anchor;
  std::vector<IterationMetrics> history;
};

// Builds a fresh solver state: per-agent policies initialized by behavior
// cloning on the demonstrations, fresh critics and multipliers.
SolverState init_solver(const MultiAgentEnv& prototype, const Hyperparams& hyper,
                        std::shared_ptr<const LaplaceMixturePolicy> anchor, const std::vector<Trajectory>& demos,
                        std::uint64_t seed);

// Per-agent action override for evaluation. Returns a normalized action.
using Actor = std::function<NormAction(int agent, const Observation& obs, const MultiAgentEnv& env,
                                       std::mt19937_64& rng)>;

struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::vector<Trajectory> trajectories;  // indexed by agent id
  bool crashed = false;                  // any controlled agent collided
};

// Called with the environment and the joint action just before each step.
using StepObserver = std::function<void(const MultiAgentEnv& env, std::span<const Action> joint)>;

// Runs one episode with every controlled agent sampling from its current
// policy (or `overrides[i]` when set) using a per-agent RNG stream derived
// from `episode_seed`; uncontrolled agents follow scripted_action().
EpisodeRecord run_episode(const MultiAgentEnv& prototype, const SolverState& state, std::uint64_t episode_seed,
                          const std::vector<Actor>* overrides = nullptr, const StepObserver& observer = {});

// B episodes with seeds mix_seed(master_seed, b), fanned out over workers
// and merged in episode order.
std::vector<EpisodeRecord> collect_rollouts(const MultiAgentEnv& prototype, const SolverState& state, int episodes,
                                            std::uint64_t master_seed, int workers = 1,
                                            const std::vector<Actor>* overrides = nullptr);

// Flattened per-agent training batch (columns are samples).
struct AgentBatch {
  Mat obs;
  Mat actions;
  Vec logp_old;
  Vec reward;
  Vec cost;
  Vec bonus;
  Vec shaped;
  Vec value;
  Vec rho;  // CVaR of the predicted cost quantiles
  Mat quantiles;
  Mat next_quantiles;  // zero at terminal steps
  std::vector<bool> terminal;
  Vec adv_r;       // normalized
  Vec adv_r_raw;
  Vec returns;
  Vec adv_c;
  double adv_std = 1.0;  // std used to normalize adv_r
  std::vector<double> episode_disc_cost;
  std::vector<double> episode_reward;
};

AgentBatch build_batch(const std::vector<EpisodeRecord>& episodes, const SolverState& state, int agent);

// Discounted sum of CVaR-distorted cost TD residuals with terminal bootstrap 0.
std::vector<double> cost_advantage(std::span<const double> costs, std::span<const double> rho, double gamma,
                                   double gae_lambda);

struct ClipTerms {
  double lambda = 0.0;
  double epsilon_cost = 0.0;
  double eta = 0.0;           // entropy weight implied by the KL terms
  double clip = 0.2;
  double adv_scale = 1.0;     // divides the entropy and cost terms
  double entropy_coef = 0.0;  // extra entropy weight of the total loss
};

// Batch mean of min(ratio A, clip(ratio) A) + (eta / s) H - (lambda / s)
// (ratio A^c - eps), plus entropy_coef * H. Returned as an objective to
// maximize; fills its gradient with respect to policy.params() on request.
double clip_objective(const GaussianPolicy& policy, const Mat& obs, const Mat& actions, const Vec& logp_old,
                      const Vec& adv_r, const Vec& adv_c, const ClipTerms& terms, Vec* grad = nullptr);

// Mean squared error of the value critic on (obs, returns).
double value_loss(const ValueCritic& critic, const Mat& obs, const Vec& returns);

// Targets c_t + gamma * Z(o_{t+1}) (c_t at terminal steps).
Mat quantile_targets(const AgentBatch& batch, double gamma);
// One gradient step of the quantile Huber loss; returns the pre-step loss.
double quantile_update(QuantileCritic& critic, Adam& opt, const Mat& obs, const Mat& targets, double kappa);

struct TrainOptions {
  int workers = 1;
  // When >= 0 only this agent is updated; the others stay frozen.
  int only_agent = -1;
  bool freeze_lambda = false;
  // Compute KL metrics on up to this many observations per agent.
  int metric_obs = 64;
  std::function<void(const SolverState&)> on_iteration;
};

// One outer iteration: snapshot previous policies, collect rollouts, update
// every (selected) agent, adapt multipliers, append metrics.
void solver_iteration(const MultiAgentEnv& prototype, SolverState& state, const TrainOptions& options = {});

// Runs hyper.iterations outer iterations from an initialized state.
void train(const MultiAgentEnv& prototype, SolverState& state, const TrainOptions& options = {});

}  // namespace tcce

#endif  // TCCE_SOLVER_H_
