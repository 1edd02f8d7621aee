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

#include "tcce/commands.h"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tcce/checkpoint.h"
#include "tcce/fidelity.h"
#include "tcce/markov_game.h"
#include "tcce/traffic_game.h"

namespace tcce {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

fs::path out_dir(const RunConfig& c) { return fs::path(c.output_dir); }

template <typename F>
int guarded(const char* name, F&& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

EvalSummary evaluate_policy(const MultiAgentEnv& env, const SolverState& state, int episodes, std::uint64_t seed,
                     int workers) {
  const auto eps = collect_rollouts(env, state, episodes, seed, workers);
  EvalSummary s;
  std::vector<bool> crashed;
  int n_traj = 0;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    crashed.push_back(eps[e].crashed);
    for (std::size_t i = 0; i < eps[e].trajectories.size(); ++i) {
      if (!state.controlled[i]) continue;
      Trajectory t = eps[e].trajectories[i];
      t.episode = static_cast<int>(e);
      std::vector<double> r, c;
      for (const auto& st : t.steps) {
        r.push_back(st.reward);
        c.push_back(st.cost);
      }
      s.mean_reward += discounted_return(r, 1.0);
      s.mean_disc_cost += discounted_return(c, state.hyper.gamma);
      ++n_traj;
      s.trajectories.push_back(std::move(t));
    }
  }
  s.mean_reward /= n_traj;
  s.mean_disc_cost /= n_traj;
  const auto md = feature_samples(s.trajectories, Feature::kMinDistance);
  for (double d : md) s.mean_min_distance += d / static_cast<double>(md.size());
  s.crash_rate = crash_rate(crashed);
  int n_ctrl = 0;
  for (std::size_t i = 0; i < state.agents.size(); ++i) {
    if (!state.controlled[i]) continue;
    s.mean_lambda += state.agents[i].lagrange.lambda;
    ++n_ctrl;
  }
  s.mean_lambda /= n_ctrl;
  return s;
}

namespace {

void write_gaps(const fs::path& path, const std::vector<GapReport>& reports, const std::string& scenario,
                std::uint64_t seed) {
  std::ofstream out = open_out(path);
  out << "scenario,agent,method,gap,se,episodes,seed,value_deviation,value_policy\n";
  for (const GapReport& r : reports)
    out << scenario << ',' << r.agent << ',' << r.method << ',' << fmt(r.gap) << ',' << fmt(r.se) << ',' << r.episodes << ',' << seed
        << ',' << fmt(r.value_deviation) << ',' << fmt(r.value_policy) << '\n';
}

std::string tag(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::unique_ptr<MultiAgentEnv> make_env(const ScenarioConfig& scenario) {
  if (scenario.map_kind == "grid_merge") return std::make_unique<GridMergeEnv>();
  return std::make_unique<TrafficGame>(scenario);
}

void save_demos(const fs::path& path, const std::vector<Trajectory>& demos) {
  std::ofstream out = open_out(path);
  std::size_t dim = demos.empty() || demos[0].steps.empty() ? 0 : demos[0].steps[0].observation.size();
  out << "episode,agent,t,speed,min_distance,reward,cost,collided,accel,heading_change,u0,u1,log_prob";
  for (std::size_t k = 0; k < dim; ++k) out << ",o" << k;
  out << '\n';
  for (const Trajectory& tr : demos) {
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      const TrajectoryStep& s = tr.steps[t];
      if (s.observation.size() != dim) throw Error("save_demos: observation sizes differ");
      out << tr.episode << ',' << tr.agent << ',' << t << ',' << fmt(s.speed) << ',' << fmt(s.min_distance) << ','
          << fmt(s.reward) << ',' << fmt(s.cost) << ',' << (s.collided ? 1 : 0) << ',' << fmt(s.action.accel) << ','
          << fmt(s.action.heading_change) << ',' << fmt(s.raw_action[0]) << ',' << fmt(s.raw_action[1]) << ','
          << fmt(s.log_prob);
      for (double v : s.observation) out << ',' << fmt(v);
      out << '\n';
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<Trajectory> load_demos(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing demonstrations " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("empty demonstrations file " + path.string());
  const std::size_t cols = split(line, ',').size();
  if (cols < 13) throw Error("malformed demonstrations header in " + path.string());
  std::vector<Trajectory> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != cols) throw Error(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    const int ep = std::stoi(f[0]);
    const int agent = std::stoi(f[1]);
    if (out.empty() || out.back().episode != ep || out.back().agent != agent) {
      Trajectory t;
      t.episode = ep;
      t.agent = agent;
      out.push_back(std::move(t));
    }
    TrajectoryStep s;
    s.speed = std::stod(f[3]);
    s.min_distance = std::stod(f[4]);
    s.reward = std::stod(f[5]);
    s.cost = std::stod(f[6]);
    s.collided = f[7] == "1";
    s.action = {std::stod(f[8]), std::stod(f[9])};
    s.raw_action = {std::stod(f[10]), std::stod(f[11])};
    s.log_prob = std::stod(f[12]);
    for (std::size_t k = 13; k < cols; ++k) s.observation.push_back(std::stod(f[k]));
    out.back().steps.push_back(std::move(s));
  }
  if (out.empty()) throw Error("no demonstrations in " + path.string());
  return out;
}

void write_metrics_csv(const fs::path& path, const std::vector<IterationMetrics>& history) {
  std::ofstream out = open_out(path);
  out << "iteration,agent_id,mean_reward,mean_disc_cost,kl_anchor,entropy,lambda,cce_gap,kl_prev,crash_rate\n";
  for (const IterationMetrics& m : history)
    out << m.iteration << ',' << m.agent << ',' << fmt(m.mean_reward) << ',' << fmt(m.mean_disc_cost) << ','
        << fmt(m.kl_anchor) << ',' << fmt(m.entropy) << ',' << fmt(m.lambda) << ',' << fmt(m.cce_gap) << ','
        << fmt(m.kl_prev) << ',' << fmt(m.crash_rate) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

void write_lambda_csv(const fs::path& path, const std::vector<IterationMetrics>& history, int n_agents) {
  std::ofstream out = open_out(path);
  out << "iteration";
  for (int i = 0; i < n_agents; ++i) out << ",lambda_" << i;
  out << '\n';
  std::size_t k = 0;
  while (k < history.size()) {
    const int it = history[k].iteration;
    std::vector<double> lam(n_agents, 0.0);
    for (; k < history.size() && history[k].iteration == it; ++k)
      if (history[k].agent >= 0 && history[k].agent < n_agents) lam[history[k].agent] = history[k].lambda;
    out << it;
    for (double l : lam) out << ',' << fmt(l);
    out << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

TrainOutcome train_run(const RunConfig& config, const fs::path& dir) {
  const RunConfig c = resolve(config);
  validate(c);
  fs::create_directories(dir);
  write_text(dir / "resolved_config.json", serialize_config(c));
  const std::unique_ptr<MultiAgentEnv> env = make_env(c.scenario);
  const Hyperparams& h = c.hyper;

  TrainOutcome result;
  result.demos = generate_demonstrations(*env, h.demo_episodes, mix_seed(c.seed, 1));
  save_demos(dir / "demos.csv", result.demos);

  const int input_dim = static_cast<int>(env->layout()->size());
  std::shared_ptr<const LaplaceMixturePolicy> anchor;
  if (fs::exists(dir / "anchor.ckpt")) {
    anchor = std::make_shared<LaplaceMixturePolicy>(
        load_anchor(dir / "anchor.ckpt", input_dim, h.hidden, h.mixture_components));
  } else {
    AnchorOptions ao;
    ao.epochs = h.anchor_epochs;
    const AnchorResult ar =
        train_anchor(result.demos, env->action_bounds(), h.hidden, h.mixture_components, ao, mix_seed(c.seed, 2));
    // Round to the stored precision so a reused anchor behaves identically.
    auto fresh = std::make_shared<LaplaceMixturePolicy>(ar.policy);
    fresh->net().set_params(fresh->net().params().cast<float>().cast<double>());
    save_anchor(dir / "anchor.ckpt", *fresh, c.seed);
    anchor = fresh;
  }

  result.state = init_solver(*env, h, anchor, result.demos, c.seed);
  TrainOptions to;
  to.workers = c.workers;
  train(*env, result.state, to);

  write_metrics_csv(dir / "metrics.csv", result.state.history);
  write_lambda_csv(dir / "lambda.csv", result.state.history, env->num_agents());
  save_checkpoint(dir / "checkpoint", result.state);
  return result;
}

std::vector<GapReport> compute_gaps(const RunConfig& config, const MultiAgentEnv& env, const SolverState& state,
                                    const std::string& method) {
  GapOptions go;
  go.eval_episodes = config.eval.episodes;
  go.workers = config.workers;
  std::vector<GapReport> out;
  for (int i : env.controlled_agents()) {
    const std::uint64_t seed = mix_seed(config.seed, 0x6A90ULL + static_cast<std::uint64_t>(i));
    if (method == "break") {
      out.push_back(br_break_equilibrium(env, state, i, config.eval.break_budget, seed, go));
    } else if (method == "restrict") {
      RestrictOptions ro;
      ro.k_cand = config.hyper.candidate_actions;
      ro.opponent_samples = config.eval.opponent_samples;
      if (config.scenario.map_kind == "grid_merge") {
        // The tabular game has two actions; offer both.
        const ActionBounds b = env.action_bounds();
        const std::vector<NormAction> all{b.to_normalized(GridMergeEnv::action_for(0)),
                                          b.to_normalized(GridMergeEnv::action_for(1))};
        ro.candidates = [all](const Observation&) { return all; };
      } else if (!state.anchor) {
        throw Error("restrict method needs an anchor policy in the checkpoint");
      }
      out.push_back(br_restricted_actions(env, state, state.anchor, i, seed, ro, go));
    } else {
      throw Error("unknown gap method '" + method + "' (expected break or restrict)");
    }
  }
  return out;
}

int cmd_train(const RunConfig& config) {
  return guarded("train", [&] {
    const RunConfig base = resolve(config);
    validate(base);
    const fs::path root = out_dir(base);
    if (!base.sweep.enabled) {
      train_run(base, root);
      return;
    }
    fs::create_directories(root);
    write_text(root / "resolved_config.json", serialize_config(base));
    std::ofstream summary = open_out(root / "summary.csv");
    summary << "d_thresh,alpha,final_lambda,mean_disc_cost,mean_min_distance,crash_rate,mean_reward\n";
    for (double d : base.sweep.d_thresh) {
      for (double a : base.sweep.alpha) {
        RunConfig sub = base;
        sub.sweep.enabled = false;
        sub.hyper.d_thresh = d;
        sub.hyper.alpha = a;
        const fs::path dir = root / ("d" + tag(d) + "_alpha" + tag(a));
        sub.output_dir = dir.string();
        const TrainOutcome r = train_run(sub, dir);
        const RunConfig rs = resolve(sub);
        const auto env = make_env(rs.scenario);
        const EvalSummary e = evaluate_policy(*env, r.state, rs.eval.episodes, mix_seed(rs.seed, 0x5EE9ULL), rs.workers);
        summary << fmt(d) << ',' << fmt(a) << ',' << fmt(e.mean_lambda) << ',' << fmt(e.mean_disc_cost) << ','
                << fmt(e.mean_min_distance) << ',' << fmt(e.crash_rate) << ',' << fmt(e.mean_reward) << '\n';
        summary.flush();
      }
    }
  });
}

int cmd_gap(const RunConfig& config, const fs::path& checkpoint, const std::string& method) {
  return guarded("gap", [&] {
    const RunConfig c = resolve(config);
    validate(c);
    const auto env = make_env(c.scenario);
    const SolverState state = load_checkpoint(checkpoint, *env, c.hyper);
    write_gaps(out_dir(c) / "gaps.csv", compute_gaps(c, *env, state, method), c.scenario.map_kind, c.seed);
  });
}

int cmd_fidelity(const RunConfig& config, const fs::path& checkpoint, const fs::path& demo_path) {
  return guarded("fidelity", [&] {
    const RunConfig c = resolve(config);
    validate(c);
    const std::vector<Trajectory> demos = load_demos(demo_path);
    const auto env = make_env(c.scenario);
    const SolverState state = load_checkpoint(checkpoint, *env, c.hyper);
    const EvalSummary e = evaluate_policy(*env, state, c.eval.episodes, mix_seed(c.seed, 0xF1DULL), c.workers);
    std::ofstream out = open_out(out_dir(c) / "fidelity.csv");
    out << "feature,metric,value,n_samples,bins\n";
    for (Feature f : {Feature::kSpeed, Feature::kMinDistance}) {
      const auto sim = feature_samples(e.trajectories, f);
      const auto demo = feature_samples(demos, f);
      const auto edges = default_edges(f);
      for (Metric m : {Metric::kKl, Metric::kHellinger, Metric::kWasserstein1}) {
        const GateResult g = fidelity_gate(sim, demo, edges, m, c.hyper.fidelity_threshold);
        out << to_string(f) << ',' << to_string(m) << ',' << fmt(g.value) << ',' << sim.size() << ','
            << (m == Metric::kWasserstein1 ? 0 : edges.size() - 1) << '\n';
      }
    }
    out << "episode,crash_rate," << fmt(e.crash_rate) << ',' << c.eval.episodes << ",0\n";
    if (!out) throw Error("failed writing fidelity.csv");
  });
}

int cmd_rollout_export(const RunConfig& config, const fs::path& checkpoint, int n_episodes) {
  return guarded("export", [&] {
    const RunConfig c = resolve(config);
    validate(c);
    if (n_episodes < 1) throw Error("episodes must be >= 1");
    const auto env = make_env(c.scenario);
    if (!dynamic_cast<const TrafficGame*>(env.get())) throw Error("export needs a traffic scenario");
    const SolverState state = load_checkpoint(checkpoint, *env, c.hyper);
    const fs::path dir = out_dir(c) / "export";
    fs::create_directories(dir);
    std::ofstream index = open_out(dir / "episodes.csv");
    index << "episode,seed,file\n";
    for (int ep = 0; ep < n_episodes; ++ep) {
      const std::uint64_t seed = mix_seed(mix_seed(c.seed, 0xE8ULL), static_cast<std::uint64_t>(ep));
      struct Row {
        int t;
        int agent;
        VehicleState v;
        Action a;
      };
      std::vector<Row> rows;
      const StepObserver observer = [&rows](const MultiAgentEnv& e, std::span<const Action> joint) {
        const auto& g = static_cast<const TrafficGame&>(e);
        for (int i = 0; i < g.num_agents(); ++i)
          if (!g.agent_done(i)) rows.push_back({g.time_step(), i, g.state().vehicles[i], joint[i]});
      };
      const EpisodeRecord rec = run_episode(*env, state, seed, nullptr, observer);
      char name[32];
      std::snprintf(name, sizeof(name), "episode_%03d.csv", ep);
      std::ofstream out = open_out(dir / name);
      out << "t,agent_id,x,y,heading,speed,accel,heading_change,reward,cost,collided\n";
      for (const Row& r : rows) {
        const TrajectoryStep& s = rec.trajectories[r.agent].steps.at(r.t);
        out << r.t << ',' << r.agent << ',' << fmt(r.v.x) << ',' << fmt(r.v.y) << ',' << fmt(r.v.heading) << ','
            << fmt(r.v.speed) << ',' << fmt(r.a.accel) << ',' << fmt(r.a.heading_change) << ',' << fmt(s.reward)
            << ',' << fmt(s.cost) << ',' << (s.collided ? 1 : 0) << '\n';
      }
      if (!out) throw Error(std::string("failed writing ") + name);
      index << ep << ',' << seed << ',' << name << '\n';
    }
  });
}

}  // namespace tcce
