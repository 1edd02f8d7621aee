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

#ifndef TCCE_TESTS_FIXTURES_H_
#define TCCE_TESTS_FIXTURES_H_

// Small scenario and solver builders plus checks shared by the unit tests
// and the acceptance binary.

#include <memory>
#include <random>
#include <vector>

#include "oracles.h"
#include "tcce/critics.h"
#include "tcce/exploitability.h"
#include "tcce/markov_game.h"
#include "tcce/mlp.h"
#include "tcce/policy.h"
#include "tcce/solver.h"
#include "tcce/traffic_game.h"

namespace tcce::fixture {

inline ScenarioConfig small_merge(int n_agents = 2, int horizon = 40) {
  ScenarioConfig c;
  c.map_kind = "merge";
  c.n_agents = n_agents;
  c.horizon = horizon;
  return c;
}

inline Hyperparams small_hyper() {
  Hyperparams h;
  h.hidden = {16};
  h.n_quantiles = 8;
  h.rollout_rounds = 2;
  h.update_rounds = 2;
  h.minibatch = 64;
  h.iterations = 3;
  h.anchor_epochs = 3;
  h.demo_episodes = 4;
  return h;
}

// Demonstrations, anchor and initialized solver state for `env`.
struct SolverSetup {
  std::vector<Trajectory> demos;
  std::shared_ptr<const LaplaceMixturePolicy> anchor;
  SolverState state;
};

inline SolverSetup make_solver(const MultiAgentEnv& env, const Hyperparams& h, std::uint64_t seed) {
  SolverSetup s;
  s.demos = generate_demonstrations(env, h.demo_episodes, mix_seed(seed, 1));
  AnchorOptions opt;
  opt.epochs = h.anchor_epochs;
  s.anchor = std::make_shared<LaplaceMixturePolicy>(
      train_anchor(s.demos, env.action_bounds(), h.hidden, h.mixture_components, opt, mix_seed(seed, 2)).policy);
  s.state = init_solver(env, h, s.anchor, s.demos, seed);
  return s;
}

// Worst relative error of analytic against central-difference gradients
// over `trials` random networks and objectives.
inline double worst_gradient_error(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 6), depth(0, 2);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    NetSpec spec{dim(rng), {}, dim(rng)};
    for (int l = depth(rng); l > 0; --l) spec.hidden.push_back(dim(rng));
    Mlp net(spec, rng());
    Mat x(spec.input_dim, 3), w(spec.output_dim, 3);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = g(rng);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = g(rng);
    // sum_j <w_j, f(x_j)> + 0.5 ||f(x_j)||^2
    auto objective = [&](const Vec& p) {
      Mlp m = net;
      m.set_params(p);
      const Mat out = m.forward(x);
      return (w.array() * out.array()).sum() + 0.5 * out.squaredNorm();
    };
    Mlp::Cache cache;
    const Mat out = net.forward(x, &cache);
    const Vec analytic = net.backward(cache, w + out);
    worst = std::max(worst, oracle::relative_error(analytic, oracle::numeric_gradient(objective, net.params())));
  }
  return worst;
}

// Trains a quantile critic on samples of a fixed one-state cost
// distribution (uniform on [0, 2] with an atom of mass 0.3 at 0) and returns
// the largest deviation from the empirical quantiles of those samples.
inline double quantile_fit_error(int steps, std::uint64_t seed) {
  const int n_quant = 8, batch = 64;
  QuantileCritic critic(1, {16}, n_quant, seed);
  Adam opt(critic.params().size(), 1e-2);
  std::mt19937_64 rng(mix_seed(seed, 3));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&] {
    const double p = u(rng);
    return p < 0.3 ? 0.0 : 2.0 * (p - 0.3) / 0.7;
  };
  std::vector<double> seen;
  const Mat obs = Mat::Ones(1, batch);
  for (int s = 0; s < steps; ++s) {
    Mat targets(n_quant, batch);
    for (Eigen::Index k = 0; k < targets.size(); ++k) {
      targets.data()[k] = draw();
      seen.push_back(targets.data()[k]);
    }
    if (s == steps / 2) opt.set_lr(1e-3);
    quantile_update(critic, opt, obs, targets, 0.01);
  }
  const std::vector<double> z = critic.predict(std::vector<double>{1.0});
  double worst = 0.0;
  for (int q = 0; q < n_quant; ++q)
    worst = std::max(worst, std::abs(z[q] - oracle::empirical_quantile(seen, critic.taus()[q])));
  return worst;
}

// Largest deviation of the alpha = 1 cost advantages from GAE on the mean of
// the predicted quantiles, over one batch of a small merge scenario.
inline double alpha_one_advantage_error(std::uint64_t seed) {
  const TrafficGame game(small_merge(2, 30));
  Hyperparams h = small_hyper();
  h.alpha = 1.0;
  auto setup = make_solver(game, h, seed);
  const AgentBatch b = build_batch(collect_rollouts(game, setup.state, 2, mix_seed(seed, 4)), setup.state, 0);
  std::vector<double> c, mean_q;
  double worst = 0.0;
  Eigen::Index start = 0;
  for (Eigen::Index j = 0; j < b.cost.size(); ++j) {
    c.push_back(b.cost[j]);
    mean_q.push_back(b.quantiles.col(j).mean());
    if (b.terminal[static_cast<std::size_t>(j)]) {
      const auto ref = oracle::gae_by_summation(c, mean_q, h.gamma, h.gae_lambda);
      for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(b.adv_c[start + k] - ref[k]));
      start = j + 1;
      c.clear();
      mean_q.clear();
    }
  }
  // Every sample must belong to a finished trajectory.
  return start == b.cost.size() ? worst : kInf;
}

// Merge gridworld with Gaussian policies behavior-cloned from the scripted
// drivers. Settings are those the tabular oracle comparisons use.
struct TabularSetup {
  GridMergeEnv env;
  std::shared_ptr<const LaplaceMixturePolicy> anchor;
  SolverState state;
};

inline Hyperparams tabular_hyper() {
  Hyperparams h;
  h.hidden = {32, 32};
  h.rollout_rounds = 64;
  h.update_rounds = 4;
  h.minibatch = 64;
  h.eta1 = 0.0;
  h.eta2 = 10.0;
  h.lr_policy = 3e-3;
  h.entropy_coef = 0.0;
  h.init_log_std = -0.5;
  h.mixture_components = 2;
  return h;
}

inline TabularSetup make_tabular(std::uint64_t seed) {
  TabularSetup s;
  const auto demos = generate_demonstrations(s.env, 50, mix_seed(seed, 1), DemoNoise{0.0, 0.0});
  AnchorOptions opt;
  opt.epochs = 30;
  const Hyperparams h = tabular_hyper();
  s.anchor = std::make_shared<LaplaceMixturePolicy>(
      train_anchor(demos, s.env.action_bounds(), h.hidden, h.mixture_components, opt, mix_seed(seed, 2)).policy);
  s.state = init_solver(s.env, h, s.anchor, demos, seed);
  return s;
}

inline std::vector<TabularPolicy> tabular_policies(const SolverState& state, int horizon) {
  return {tabularize_gaussian(state.agents[0].policy, 0, horizon), tabularize_gaussian(state.agents[1].policy, 1, horizon)};
}

// Restricted estimator on the gridworld with both discrete actions as
// candidates and the exact best-response value-to-go as successor value.
inline RestrictOptions exact_restrict_options(const BestResponse& best) {
  RestrictOptions ro;
  ro.k_cand = 2;
  ro.opponent_samples = 64;
  ro.candidates = [](const Observation&) { return std::vector<NormAction>{{-0.5, 0.0}, {0.5, 0.0}}; };
  ro.value = [vtg = best.value_to_go](const MultiAgentEnv& e, int, const Observation&) {
    const auto& g = static_cast<const GridMergeEnv&>(e);
    return vtg[g.time_step()][g.state()];
  };
  return ro;
}

}  // namespace tcce::fixture

#endif  // TCCE_TESTS_FIXTURES_H_
