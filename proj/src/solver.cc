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

#include "tcce/solver.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace tcce {

namespace {

Vec column(std::span<const double> v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::span<const double> col_span(const Mat& m, Eigen::Index j) {
  return {m.data() + j * m.rows(), static_cast<std::size_t>(m.rows())};
}

Mat gather(const Mat& m, std::span<const int> idx) {
  Mat out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

Vec gather(const Vec& v, std::span<const int> idx) {
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out[static_cast<Eigen::Index>(j)] = v[idx[j]];
  return out;
}

void require_finite(double v, const char* what, int iteration, int agent) {
  if (!std::isfinite(v))
    throw Error(std::string("solver: non-finite ") + what + " at iteration " + std::to_string(iteration) +
                ", agent " + std::to_string(agent));
}

}  // namespace

double cvar(std::span<const double> values, double alpha) {
  if (values.empty()) throw Error("cvar: empty input");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("cvar: alpha must be in (0, 1]");
  const std::size_t n = values.size();
  const std::size_t k =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n) - 1e-9)), 1, n);
  std::vector<double> v(values.begin(), values.end());
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(), std::greater<double>());
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += v[i];
  return s / static_cast<double>(k);
}

LagrangeState lagrange_update(LagrangeState state, double signal, double epsilon_cost) {
  if (!std::isfinite(signal)) throw Error("lagrange_update: non-finite cost signal");
  state.lambda = std::max(0.0, state.lambda + state.lr * (signal - epsilon_cost));
  state.history.push_back(state.lambda);
  return state;
}

DensityEstimator::DensityEstimator(std::vector<std::size_t> slots, double tile, double rho_min)
    : slots_(std::move(slots)), tile_(tile), rho_min_(rho_min) {
  if (!(tile > 0.0)) throw Error("density estimator: tile width must be > 0");
}

std::uint64_t DensityEstimator::key(std::span<const double> obs) const {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t s : slots_) {
    if (s >= obs.size()) throw Error("density estimator: slot outside observation");
    const auto cell = static_cast<std::int64_t>(std::floor(obs[s] / tile_));
    auto u = static_cast<std::uint64_t>(cell);
    for (int b = 0; b < 8; ++b) {
      h ^= (u >> (8 * b)) & 0xFFULL;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

void DensityEstimator::add(std::span<const double> obs) {
  ++counts_[key(obs)];
  ++total_;
}

std::uint64_t DensityEstimator::count(std::span<const double> obs) const {
  const auto it = counts_.find(key(obs));
  return it == counts_.end() ? 0 : it->second;
}

double DensityEstimator::density(std::span<const double> obs) const {
  if (total_ == 0) return rho_min_;
  return std::max(static_cast<double>(count(obs)) / static_cast<double>(total_), rho_min_);
}

double exploration_bonus(const DensityEstimator& density, std::span<const double> obs, double bonus_scale,
                         double beta_max, double rho_min) {
  if (bonus_scale == 0.0) return 0.0;
  return std::min(bonus_scale / std::max(density.density(obs), rho_min), beta_max);
}

double shaped_reward(double r, double beta, double logp_anchor, double logp_prev, double eta1, double eta2) {
  double s = r + beta;
  if (eta1 != 0.0) s += eta1 * logp_anchor;
  if (!std::isinf(eta2)) s += logp_prev / eta2;
  return s;
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                        double gae_lambda) {
  if (rewards.size() != values.size()) throw Error("gae: rewards and values differ in length");
  std::vector<double> adv(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    const double next_v = t + 1 < rewards.size() ? values[t + 1] : 0.0;
    const double delta = rewards[t] + gamma * next_v - values[t];
    running = delta + gamma * gae_lambda * running;
    adv[t] = running;
  }
  return adv;
}

std::vector<double> cost_advantage(std::span<const double> costs, std::span<const double> rho, double gamma,
                                   double gae_lambda) {
  return gae(costs, rho, gamma, gae_lambda);
}

SolverState init_solver(const MultiAgentEnv& prototype, const Hyperparams& hyper,
                        std::shared_ptr<const LaplaceMixturePolicy> anchor, const std::vector<Trajectory>& demos,
                        std::uint64_t seed) {
  hyper.validate();
  SolverState st;
  st.hyper = hyper;
  st.seed = seed;
  st.anchor = std::move(anchor);
  const int n = prototype.num_agents();
  const int input_dim = static_cast<int>(prototype.layout()->size());
  const ActionBounds bounds = prototype.action_bounds();
  GaussianPolicy base(input_dim, hyper.hidden, hyper.init_log_std, mix_seed(seed, 11));
  if (!demos.empty())
    behavior_clone(base, demos, bounds, hyper.anchor_epochs, hyper.minibatch, 1e-3, mix_seed(seed, 12));
  st.agents.resize(n);
  st.controlled.resize(n);
  for (int i = 0; i < n; ++i) {
    st.controlled[i] = prototype.is_controlled(i);
    if (!st.controlled[i]) continue;
    AgentModels& m = st.agents[i];
    m.policy = base;
    m.prev = base;
    m.value = ValueCritic(input_dim, hyper.hidden, mix_seed(seed, 100 + i));
    m.cost = QuantileCritic(input_dim, hyper.hidden, hyper.n_quantiles, mix_seed(seed, 200 + i));
    m.policy_opt = Adam(m.policy.num_params(), hyper.lr_policy, hyper.max_grad_norm);
    m.value_opt = Adam(m.value.net().num_params(), hyper.lr_critic, hyper.max_grad_norm);
    m.cost_opt = Adam(m.cost.net().num_params(), hyper.lr_critic, hyper.max_grad_norm);
    m.lagrange.lambda = hyper.lambda_init;
    m.lagrange.lr = hyper.lr_lagrange;
    m.density = DensityEstimator(prototype.layout()->ego_slots, hyper.density_tile, hyper.rho_min);
  }
  return st;
}

EpisodeRecord run_episode(const MultiAgentEnv& prototype, const SolverState& state, std::uint64_t episode_seed,
                          const std::vector<Actor>* overrides, const StepObserver& observer) {
  std::unique_ptr<MultiAgentEnv> env = prototype.clone();
  const int n = env->num_agents();
  const ActionBounds bounds = env->action_bounds();
  EpisodeRecord rec;
  rec.seed = episode_seed;
  rec.trajectories.resize(n);
  std::vector<std::mt19937_64> rngs;
  for (int i = 0; i < n; ++i) {
    rec.trajectories[i].agent = i;
    rngs.emplace_back(mix_seed(episode_seed, 0xA11CE00ULL + static_cast<std::uint64_t>(i)));
  }
  std::vector<Observation> obs = env->reset(episode_seed);
  std::vector<TrajectoryStep> pending(n);
  while (!env->episode_over()) {
    std::vector<Action> joint(n);
    std::vector<bool> live(n);
    for (int i = 0; i < n; ++i) {
      live[i] = !env->agent_done(i);
      if (!live[i]) continue;
      TrajectoryStep& s = pending[i];
      s = TrajectoryStep{};
      s.observation = obs[i].normalized();
      if (state.controlled[i]) {
        const GaussianPolicy& pol = state.agents[i].policy;
        NormAction u;
        if (overrides && (*overrides)[i]) {
          u = (*overrides)[i](i, obs[i], *env, rngs[i]);
          s.log_prob = pol.log_prob(s.observation, u);
        } else {
          const GaussianDist d = pol.dist(s.observation);
          u = d.sample(rngs[i]);
          s.log_prob = d.log_prob(u);
        }
        s.raw_action = u;
        joint[i] = bounds.clamp(bounds.from_normalized(u[0], u[1]));
      } else {
        joint[i] = bounds.clamp(env->scripted_action(i));
        const auto u = bounds.to_normalized(joint[i]);
        s.raw_action = u;
      }
      s.action = joint[i];
    }
    if (observer) observer(*env, joint);
    StepResult res = env->step(joint);
    for (int i = 0; i < n; ++i) {
      if (!live[i]) continue;
      TrajectoryStep& s = pending[i];
      s.reward = res.outcome.rewards[i];
      s.cost = res.outcome.costs[i];
      s.speed = res.outcome.speeds.empty() ? 0.0 : res.outcome.speeds[i];
      s.min_distance = res.outcome.min_distances.empty() ? kInf : res.outcome.min_distances[i];
      s.collided = res.outcome.collided[i];
      if (s.collided && state.controlled[i]) rec.crashed = true;
      rec.trajectories[i].steps.push_back(std::move(s));
    }
    obs = std::move(res.observations);
  }
  return rec;
}

std::vector<EpisodeRecord> collect_rollouts(const MultiAgentEnv& prototype, const SolverState& state, int episodes,
                                            std::uint64_t master_seed, int workers,
                                            const std::vector<Actor>* overrides) {
  if (episodes < 1) throw Error("collect_rollouts: need at least one episode");
  std::vector<EpisodeRecord> out(episodes);
  auto run = [&](int e) {
    try {
      out[e] = run_episode(prototype, state, mix_seed(master_seed, static_cast<std::uint64_t>(e)), overrides);
      for (auto& t : out[e].trajectories) t.episode = e;
    } catch (const Error& err) {
      throw Error("episode " + std::to_string(e) + ": " + err.what());
    }
  };
  workers = std::clamp(workers, 1, episodes);
  if (workers == 1) {
    for (int e = 0; e < episodes; ++e) run(e);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int e = w; e < episodes; e += workers) run(e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

AgentBatch build_batch(const std::vector<EpisodeRecord>& episodes, const SolverState& state, int agent) {
  const Hyperparams& h = state.hyper;
  const AgentModels& m = state.agents[agent];
  std::vector<const Trajectory*> trajs;
  std::size_t n = 0;
  for (const EpisodeRecord& ep : episodes) {
    const Trajectory& t = ep.trajectories[agent];
    if (t.steps.empty()) continue;
    trajs.push_back(&t);
    n += t.steps.size();
  }
  if (n == 0) throw Error("build_batch: agent " + std::to_string(agent) + " has no samples");
  AgentBatch b;
  const Eigen::Index dim = static_cast<Eigen::Index>(trajs.front()->steps.front().observation.size());
  const auto N = static_cast<Eigen::Index>(n);
  b.obs.resize(dim, N);
  b.actions.resize(kActionDim, N);
  b.logp_old.resize(N);
  b.reward.resize(N);
  b.cost.resize(N);
  b.terminal.assign(n, false);
  Eigen::Index j = 0;
  for (const Trajectory* t : trajs) {
    for (std::size_t k = 0; k < t->steps.size(); ++k, ++j) {
      const TrajectoryStep& s = t->steps[k];
      b.obs.col(j) = column(s.observation);
      b.actions(0, j) = s.raw_action[0];
      b.actions(1, j) = s.raw_action[1];
      b.logp_old[j] = s.log_prob;
      b.reward[j] = s.reward;
      b.cost[j] = s.cost;
      b.terminal[static_cast<std::size_t>(j)] = k + 1 == t->steps.size();
    }
    std::vector<double> costs, rewards;
    for (const auto& s : t->steps) {
      costs.push_back(s.cost);
      rewards.push_back(s.reward);
    }
    b.episode_disc_cost.push_back(discounted_return(costs, h.gamma));
    b.episode_reward.push_back(std::accumulate(rewards.begin(), rewards.end(), 0.0));
  }

  Vec logp_anchor = Vec::Zero(N);
  if (h.eta1 != 0.0) {
    if (!state.anchor) throw Error("build_batch: eta1 > 0 requires an anchor policy");
    const Mat out = state.anchor->net().forward(b.obs);
    for (Eigen::Index c = 0; c < N; ++c)
      logp_anchor[c] = state.anchor->dist_from_output(out.col(c)).log_prob({b.actions(0, c), b.actions(1, c)});
  }
  Vec logp_prev = Vec::Zero(N);
  if (!std::isinf(h.eta2)) logp_prev = m.prev.log_prob_batch(b.obs, b.actions);

  b.value = m.value.predict(b.obs);
  b.quantiles = m.cost.predict(b.obs);
  b.rho.resize(N);
  b.bonus.resize(N);
  b.shaped.resize(N);
  for (Eigen::Index c = 0; c < N; ++c) {
    b.rho[c] = cvar(col_span(b.quantiles, c), h.alpha);
    b.bonus[c] = exploration_bonus(m.density, col_span(b.obs, c), h.bonus_scale, h.beta_max, h.rho_min);
    b.shaped[c] = shaped_reward(b.reward[c], b.bonus[c], logp_anchor[c], logp_prev[c], h.eta1, h.eta2);
  }
  b.next_quantiles = Mat::Zero(b.quantiles.rows(), N);
  for (Eigen::Index c = 0; c + 1 < N; ++c)
    if (!b.terminal[static_cast<std::size_t>(c)]) b.next_quantiles.col(c) = b.quantiles.col(c + 1);

  b.adv_r_raw.resize(N);
  b.adv_c.resize(N);
  Eigen::Index start = 0;
  for (const Trajectory* t : trajs) {
    const auto len = static_cast<Eigen::Index>(t->steps.size());
    const auto span = [&](const Vec& v) { return std::span<const double>(v.data() + start, static_cast<std::size_t>(len)); };
    const auto a = gae(span(b.shaped), span(b.value), h.gamma, h.gae_lambda);
    const auto ac = cost_advantage(span(b.cost), span(b.rho), h.gamma, h.gae_lambda);
    for (Eigen::Index k = 0; k < len; ++k) {
      b.adv_r_raw[start + k] = a[static_cast<std::size_t>(k)];
      b.adv_c[start + k] = ac[static_cast<std::size_t>(k)];
    }
    start += len;
  }
  b.returns = b.adv_r_raw + b.value;
  const double mean = b.adv_r_raw.mean();
  const double var = (b.adv_r_raw.array() - mean).square().mean();
  b.adv_std = std::max(std::sqrt(var), 1e-8);
  b.adv_r = ((b.adv_r_raw.array() - mean) / b.adv_std).matrix();
  return b;
}

double clip_objective(const GaussianPolicy& policy, const Mat& obs, const Mat& actions, const Vec& logp_old,
                      const Vec& adv_r, const Vec& adv_c, const ClipTerms& t, Vec* grad) {
  const Eigen::Index n = obs.cols();
  if (n == 0) throw Error("clip_objective: empty batch");
  GaussianPolicy::Batch batch;
  const Vec logp = policy.log_prob_batch(obs, actions, &batch);
  Vec dlogp(n);
  double total = 0.0;
  const double cost_w = t.lambda / t.adv_scale;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double ratio = std::exp(logp[j] - logp_old[j]);
    if (!std::isfinite(ratio)) throw Error("clip_objective: non-finite probability ratio");
    const double a = adv_r[j];
    const double unclipped = ratio * a;
    const double clipped = std::clamp(ratio, 1.0 - t.clip, 1.0 + t.clip) * a;
    double d = 0.0;
    if (unclipped <= clipped) {
      total += unclipped;
      d = unclipped;
    } else {
      total += clipped;
    }
    if (cost_w != 0.0) {
      total -= cost_w * (ratio * adv_c[j] - t.epsilon_cost);
      d -= cost_w * ratio * adv_c[j];
    }
    dlogp[j] = d / static_cast<double>(n);
  }
  const double ent_w = t.eta / t.adv_scale + t.entropy_coef;
  const double objective = total / static_cast<double>(n) + ent_w * policy.entropy();
  if (grad) *grad = policy.grad(batch, actions, dlogp, ent_w);
  return objective;
}

double value_loss(const ValueCritic& critic, const Mat& obs, const Vec& returns) { return critic.loss(obs, returns); }

Mat quantile_targets(const AgentBatch& batch, double gamma) {
  Mat y = gamma * batch.next_quantiles;
  y.rowwise() += batch.cost.transpose();
  return y;
}

double quantile_update(QuantileCritic& critic, Adam& opt, const Mat& obs, const Mat& targets, double kappa) {
  Vec g;
  const double loss = critic.loss(obs, targets, kappa, &g);
  Vec p = critic.params();
  opt.step(p, g);
  critic.set_params(p);
  return loss;
}

void solver_iteration(const MultiAgentEnv& prototype, SolverState& state, const TrainOptions& options) {
  const Hyperparams& h = state.hyper;
  const int n = static_cast<int>(state.agents.size());
  auto selected = [&](int i) { return state.controlled[i] && (options.only_agent < 0 || options.only_agent == i); };
  for (int i = 0; i < n; ++i)
    if (selected(i)) state.agents[i].prev = state.agents[i].policy;
  const std::vector<EpisodeRecord> episodes =
      collect_rollouts(prototype, state, h.rollout_rounds, mix_seed(state.seed, 0x1000 + state.iteration),
                       options.workers);
  double crashes = 0.0;
  for (const auto& ep : episodes) crashes += ep.crashed ? 1.0 : 0.0;
  const double crash_rate = crashes / static_cast<double>(episodes.size());
  const double eta = h.entropy_eta();
  for (int i = 0; i < n; ++i) {
    if (!selected(i)) continue;
    AgentModels& m = state.agents[i];
    const AgentBatch b = build_batch(episodes, state, i);
    for (Eigen::Index c = 0; c < b.obs.cols(); ++c) m.density.add(col_span(b.obs, c));
    m.value.update_stats(b.returns);
    const Mat targets = quantile_targets(b, h.gamma);
    ClipTerms terms;
    terms.lambda = m.lagrange.lambda;
    terms.epsilon_cost = h.epsilon_cost;
    terms.eta = eta;
    terms.clip = h.clip;
    terms.adv_scale = b.adv_std;
    terms.entropy_coef = h.entropy_coef;
    std::mt19937_64 rng(mix_seed(state.seed, mix_seed(0x2000 + state.iteration, i)));
    std::vector<int> idx(static_cast<std::size_t>(b.obs.cols()));
    std::iota(idx.begin(), idx.end(), 0);
    const std::size_t mb = static_cast<std::size_t>(std::max(1, h.minibatch));
    for (int epoch = 0; epoch < h.update_rounds; ++epoch) {
      std::shuffle(idx.begin(), idx.end(), rng);
      for (std::size_t s = 0; s < idx.size(); s += mb) {
        const std::span<const int> part(idx.data() + s, std::min(idx.size(), s + mb) - s);
        const Mat obs = gather(b.obs, part);
        Vec g;
        const double obj = clip_objective(m.policy, obs, gather(b.actions, part), gather(b.logp_old, part),
                                          gather(b.adv_r, part), gather(b.adv_c, part), terms, &g);
        require_finite(obj, "clip objective", state.iteration, i);
        Vec p = m.policy.params();
        m.policy_opt.step(p, -g);
        m.policy.set_params(p);

        const Vec ret = gather(b.returns, part);
        Vec vp = m.value.params();
        m.value_opt.step(vp, h.value_coef * m.value.grad(obs, ret));
        m.value.set_params(vp);

        const double ql = quantile_update(m.cost, m.cost_opt, obs, gather(targets, part), h.kappa);
        require_finite(ql, "quantile loss", state.iteration, i);
      }
    }
    const double signal = cvar(b.episode_disc_cost, h.alpha);
    if (!options.freeze_lambda) m.lagrange = lagrange_update(m.lagrange, signal, h.epsilon_cost);

    IterationMetrics met;
    met.iteration = state.iteration;
    met.agent = i;
    met.mean_reward =
        std::accumulate(b.episode_reward.begin(), b.episode_reward.end(), 0.0) / b.episode_reward.size();
    met.mean_disc_cost =
        std::accumulate(b.episode_disc_cost.begin(), b.episode_disc_cost.end(), 0.0) / b.episode_disc_cost.size();
    std::vector<std::vector<double>> kl_obs;
    const Eigen::Index stride = std::max<Eigen::Index>(1, b.obs.cols() / std::max(1, options.metric_obs));
    for (Eigen::Index c = 0; c < b.obs.cols() && static_cast<int>(kl_obs.size()) < options.metric_obs; c += stride)
      kl_obs.emplace_back(b.obs.col(c).data(), b.obs.col(c).data() + b.obs.rows());
    std::mt19937_64 kl_rng(mix_seed(state.seed, mix_seed(0x3000 + state.iteration, i)));
    met.kl_anchor = state.anchor ? kl_mc(m.policy, *state.anchor, kl_obs, 4, kl_rng) : 0.0;
    met.kl_prev = kl_mc(m.policy, m.prev, kl_obs, 4, kl_rng);
    met.entropy = m.policy.entropy();
    met.lambda = m.lagrange.lambda;
    met.crash_rate = crash_rate;
    require_finite(met.mean_reward, "mean reward", state.iteration, i);
    state.history.push_back(met);
  }
  ++state.iteration;
  if (options.on_iteration) options.on_iteration(state);
}

void train(const MultiAgentEnv& prototype, SolverState& state, const TrainOptions& options) {
  for (int it = 0; it < state.hyper.iterations; ++it) solver_iteration(prototype, state, options);
}

}  // namespace tcce
