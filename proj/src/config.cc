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

#include "tcce/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tcce/road_map.h"

namespace tcce {

using json = nlohmann::json;

namespace {

// Reads fields of one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(where("") + ": expected an object");
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  bool has(const std::string& key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return true;
  }

  const json& at(const std::string& key) const { return j_.at(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        out = number(j_.at(key), key);
      } else {
        out = j_.at(key).get<T>();
      }
    } catch (const json::exception& e) {
      throw Error(where(key) + ": " + e.what());
    }
  }

  double number(const json& v, const std::string& key) const {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "inf") return kInf;
      if (s == "-inf") return -kInf;
    }
    throw Error(where(key) + ": expected a number");
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw Error(where(it.key()) + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json num(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return v;
}

void read_hyper(Reader& r, Hyperparams& h) {
  r.get("gamma", h.gamma);
  r.get("gae_lambda", h.gae_lambda);
  r.get("clip", h.clip);
  r.get("eta1", h.eta1);
  r.get("eta2", h.eta2);
  r.get("bonus_scale", h.bonus_scale);
  r.get("alpha", h.alpha);
  r.get("epsilon_cost", h.epsilon_cost);
  r.get("kappa", h.kappa);
  r.get("n_quantiles", h.n_quantiles);
  r.get("mixture_components", h.mixture_components);
  r.get("candidate_actions", h.candidate_actions);
  r.get("rollout_rounds", h.rollout_rounds);
  r.get("update_rounds", h.update_rounds);
  r.get("minibatch", h.minibatch);
  r.get("value_coef", h.value_coef);
  r.get("entropy_coef", h.entropy_coef);
  r.get("lr_policy", h.lr_policy);
  r.get("lr_critic", h.lr_critic);
  r.get("lr_lagrange", h.lr_lagrange);
  r.get("lambda_init", h.lambda_init);
  r.get("fidelity_threshold", h.fidelity_threshold);
  r.get("d_thresh", h.d_thresh);
  r.get("beta_max", h.beta_max);
  r.get("rho_min", h.rho_min);
  r.get("density_tile", h.density_tile);
  r.get("history_frames", h.history_frames);
  r.get("hidden", h.hidden);
  r.get("iterations", h.iterations);
  r.get("init_log_std", h.init_log_std);
  r.get("max_grad_norm", h.max_grad_norm);
  r.get("anchor_epochs", h.anchor_epochs);
  r.get("demo_episodes", h.demo_episodes);
  r.finish();
}

json write_hyper(const Hyperparams& h) {
  return json{{"gamma", num(h.gamma)},
              {"gae_lambda", num(h.gae_lambda)},
              {"clip", num(h.clip)},
              {"eta1", num(h.eta1)},
              {"eta2", num(h.eta2)},
              {"bonus_scale", num(h.bonus_scale)},
              {"alpha", num(h.alpha)},
              {"epsilon_cost", num(h.epsilon_cost)},
              {"kappa", num(h.kappa)},
              {"n_quantiles", h.n_quantiles},
              {"mixture_components", h.mixture_components},
              {"candidate_actions", h.candidate_actions},
              {"rollout_rounds", h.rollout_rounds},
              {"update_rounds", h.update_rounds},
              {"minibatch", h.minibatch},
              {"value_coef", num(h.value_coef)},
              {"entropy_coef", num(h.entropy_coef)},
              {"lr_policy", num(h.lr_policy)},
              {"lr_critic", num(h.lr_critic)},
              {"lr_lagrange", num(h.lr_lagrange)},
              {"lambda_init", num(h.lambda_init)},
              {"fidelity_threshold", num(h.fidelity_threshold)},
              {"d_thresh", num(h.d_thresh)},
              {"beta_max", num(h.beta_max)},
              {"rho_min", num(h.rho_min)},
              {"density_tile", num(h.density_tile)},
              {"history_frames", h.history_frames},
              {"hidden", h.hidden},
              {"iterations", h.iterations},
              {"init_log_std", num(h.init_log_std)},
              {"max_grad_norm", num(h.max_grad_norm)},
              {"anchor_epochs", h.anchor_epochs},
              {"demo_episodes", h.demo_episodes}};
}

void read_scenario(Reader& r, ScenarioConfig& s) {
  r.get("map_kind", s.map_kind);
  r.get("map_seed", s.map_seed);
  r.get("n_agents", s.n_agents);
  r.get("horizon", s.horizon);
  r.get("dt", s.dt);
  if (r.has("spawn")) {
    const json& arr = r.at("spawn");
    if (!arr.is_array()) throw Error(r.where("spawn") + ": expected an array");
    s.spawn.clear();
    for (std::size_t k = 0; k < arr.size(); ++k) {
      Reader e(arr[k], r.where("spawn") + "[" + std::to_string(k) + "]");
      SpawnSpec sp;
      e.get("lane", sp.lane);
      e.get("arc", sp.arc);
      e.get("speed", sp.speed);
      e.finish();
      s.spawn.push_back(sp);
    }
  }
  if (r.has("goals")) {
    const json& arr = r.at("goals");
    if (!arr.is_array()) throw Error(r.where("goals") + ": expected an array");
    s.goals.clear();
    for (std::size_t k = 0; k < arr.size(); ++k) {
      Reader e(arr[k], r.where("goals") + "[" + std::to_string(k) + "]");
      GoalSpec g;
      e.get("lane", g.lane);
      e.get("arc", g.arc);
      e.finish();
      s.goals.push_back(g);
    }
  }
  r.get("controlled", s.controlled);
  if (r.has("vehicle_dims")) {
    Reader e(r.at("vehicle_dims"), r.where("vehicle_dims"));
    e.get("length", s.vehicle_dims.length);
    e.get("width", s.vehicle_dims.width);
    e.finish();
  }
  if (r.has("reward_weights")) {
    Reader e(r.at("reward_weights"), r.where("reward_weights"));
    e.get("w_progress", s.reward_weights.w_progress);
    e.get("w_goal", s.reward_weights.w_goal);
    e.get("w_collision", s.reward_weights.w_collision);
    e.get("w_lane", s.reward_weights.w_lane);
    e.get("w_action", s.reward_weights.w_action);
    e.finish();
  }
  r.get("shaped_cost", s.shaped_cost);
  r.get("v_max", s.v_max);
  if (r.has("action_bounds")) {
    Reader e(r.at("action_bounds"), r.where("action_bounds"));
    e.get("accel_min", s.action_bounds.accel_min);
    e.get("accel_max", s.action_bounds.accel_max);
    e.get("heading_change_max", s.action_bounds.heading_change_max);
    e.finish();
  }
  r.get("spawn_jitter_arc", s.spawn_jitter_arc);
  r.get("spawn_jitter_speed", s.spawn_jitter_speed);
  r.finish();
}

json write_scenario(const ScenarioConfig& s) {
  json spawn = json::array();
  for (const SpawnSpec& sp : s.spawn) spawn.push_back({{"lane", sp.lane}, {"arc", sp.arc}, {"speed", sp.speed}});
  json goals = json::array();
  for (const GoalSpec& g : s.goals) goals.push_back({{"lane", g.lane}, {"arc", g.arc}});
  return json{{"map_kind", s.map_kind},
              {"map_seed", s.map_seed},
              {"n_agents", s.n_agents},
              {"horizon", s.horizon},
              {"dt", num(s.dt)},
              {"spawn", spawn},
              {"goals", goals},
              {"controlled", s.controlled},
              {"vehicle_dims", {{"length", s.vehicle_dims.length}, {"width", s.vehicle_dims.width}}},
              {"reward_weights",
               {{"w_progress", s.reward_weights.w_progress},
                {"w_goal", s.reward_weights.w_goal},
                {"w_collision", s.reward_weights.w_collision},
                {"w_lane", s.reward_weights.w_lane},
                {"w_action", s.reward_weights.w_action}}},
              {"shaped_cost", s.shaped_cost},
              {"v_max", num(s.v_max)},
              {"action_bounds",
               {{"accel_min", s.action_bounds.accel_min},
                {"accel_max", s.action_bounds.accel_max},
                {"heading_change_max", s.action_bounds.heading_change_max}}},
              {"spawn_jitter_arc", num(s.spawn_jitter_arc)},
              {"spawn_jitter_speed", num(s.spawn_jitter_speed)}};
}

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw Error(field + ": " + what);
}

}  // namespace

RunConfig resolve(RunConfig c) {
  if (c.ablate_mmd) {
    c.hyper.eta1 = 0.0;
    c.hyper.eta2 = kInf;
  }
  if (c.ablate_bonus) c.hyper.bonus_scale = 0.0;
  c.scenario.d_thresh = c.hyper.d_thresh;
  c.scenario.history_frames = c.hyper.history_frames;
  return c;
}

void validate(const RunConfig& c) {
  try {
    c.hyper.validate();
  } catch (const Error& e) {
    throw Error(std::string("hyper: ") + e.what());
  }
  const ScenarioConfig& s = c.scenario;
  if (s.map_kind != "grid_merge") {
    try {
      parse_map_kind(s.map_kind);
    } catch (const Error&) {
      throw Error("scenario.map_kind: unknown map kind '" + s.map_kind + "'");
    }
  }
  check(s.n_agents >= 1, "scenario.n_agents", "must be >= 1");
  check(s.map_kind != "grid_merge" || s.n_agents == 2, "scenario.n_agents", "grid_merge has exactly 2 agents");
  check(s.horizon >= 1, "scenario.horizon", "must be >= 1");
  check(s.dt > 0.0 && std::isfinite(s.dt), "scenario.dt", "must be finite and > 0");
  check(s.v_max > 0.0 && std::isfinite(s.v_max), "scenario.v_max", "must be finite and > 0");
  check(s.spawn.empty() || static_cast<int>(s.spawn.size()) == s.n_agents, "scenario.spawn",
        "needs one entry per agent");
  check(s.goals.empty() || static_cast<int>(s.goals.size()) == s.n_agents, "scenario.goals",
        "needs one entry per agent");
  check(s.controlled.empty() || static_cast<int>(s.controlled.size()) == s.n_agents, "scenario.controlled",
        "needs one entry per agent");
  check(s.vehicle_dims.length > 0.0 && s.vehicle_dims.width > 0.0, "scenario.vehicle_dims", "must be positive");
  check(s.action_bounds.accel_min < s.action_bounds.accel_max, "scenario.action_bounds",
        "accel_min must be below accel_max");
  check(s.action_bounds.heading_change_max > 0.0, "scenario.action_bounds.heading_change_max", "must be > 0");
  check(s.spawn_jitter_arc >= 0.0, "scenario.spawn_jitter_arc", "must be >= 0");
  check(s.spawn_jitter_speed >= 0.0, "scenario.spawn_jitter_speed", "must be >= 0");
  check(c.workers >= 1, "workers", "must be >= 1");
  check(!c.output_dir.empty(), "output_dir", "must not be empty");
  check(c.eval.episodes >= 1, "eval.episodes", "must be >= 1");
  check(c.eval.break_budget >= 0, "eval.break_budget", "must be >= 0");
  check(c.eval.opponent_samples >= 1, "eval.opponent_samples", "must be >= 1");
  check(c.eval.method == "break" || c.eval.method == "restrict", "eval.method", "must be 'break' or 'restrict'");
  for (double d : c.sweep.d_thresh) check(d > 0.0, "sweep.d_thresh", "entries must be > 0");
  for (double a : c.sweep.alpha) check(a > 0.0 && a <= 1.0, "sweep.alpha", "entries must lie in (0, 1]");
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader r(j, "");
  if (r.has("scenario")) {
    Reader s(r.at("scenario"), "scenario");
    read_scenario(s, c.scenario);
  }
  if (r.has("hyper")) {
    Reader h(r.at("hyper"), "hyper");
    read_hyper(h, c.hyper);
  }
  r.get("ablate_mmd", c.ablate_mmd);
  r.get("ablate_bonus", c.ablate_bonus);
  if (r.has("seed")) {
    const json& v = r.at("seed");
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
      throw Error("seed: must be an integer >= 0");
    c.seed = v.get<std::uint64_t>();
  }
  r.get("workers", c.workers);
  r.get("output_dir", c.output_dir);
  if (r.has("sweep")) {
    Reader s(r.at("sweep"), "sweep");
    s.get("enabled", c.sweep.enabled);
    s.get("d_thresh", c.sweep.d_thresh);
    s.get("alpha", c.sweep.alpha);
    s.finish();
  }
  if (r.has("eval")) {
    Reader e(r.at("eval"), "eval");
    e.get("episodes", c.eval.episodes);
    e.get("break_budget", c.eval.break_budget);
    e.get("opponent_samples", c.eval.opponent_samples);
    e.get("method", c.eval.method);
    e.finish();
  }
  r.finish();
  validate(c);
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  const json j{{"scenario", write_scenario(c.scenario)},
               {"hyper", write_hyper(c.hyper)},
               {"ablate_mmd", c.ablate_mmd},
               {"ablate_bonus", c.ablate_bonus},
               {"seed", c.seed},
               {"workers", c.workers},
               {"output_dir", c.output_dir},
               {"sweep", {{"enabled", c.sweep.enabled}, {"d_thresh", c.sweep.d_thresh}, {"alpha", c.sweep.alpha}}},
               {"eval",
                {{"episodes", c.eval.episodes},
                 {"break_budget", c.eval.break_budget},
                 {"opponent_samples", c.eval.opponent_samples},
                 {"method", c.eval.method}}}};
  return j.dump(2) + "\n";
}

}  // namespace tcce
