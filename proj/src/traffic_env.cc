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

#include "tcce/traffic_env.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace tcce {

namespace {

// Two centerlines closer than this are treated as a shared conflict zone.
constexpr double kConflictWidth = 3.0;

struct JunctionShape {
  int arms;
  int lanes;
};

JunctionShape junction_shape(MapKind kind) {
  switch (kind) {
    case MapKind::kDualIntersection:
      return {4, 1};
    case MapKind::kTJunction:
      return {3, 1};
    case MapKind::kDenseIntersection:
      return {4, 2};
    case MapKind::kYJunction:
      return {3, 1};
    default:
      return {0, 0};
  }
}

RouteConflict find_conflict(const Polyline& self, const Polyline& other) {
  RouteConflict c;
  const double len = self.length();
  const double step = 1.0;
  bool inside = false;
  for (double s = 0.0; s <= len; s += step) {
    const Projection p = other.project(self.point_at(s));
    const double d = std::abs(p.lateral);
    if (!inside) {
      if (d < kConflictWidth) {
        inside = true;
        c.exists = true;
        c.arc_self = s;
        c.arc_other = p.arc;
      }
    } else if (d >= kConflictWidth) {
      c.shared_length = s - c.arc_self;
      return c;
    }
  }
  if (inside) c.shared_length = len - c.arc_self;
  return c;
}

}  // namespace

bool EnvState::all_done() const {
  return std::all_of(done.begin(), done.end(), [](bool d) { return d; });
}

std::shared_ptr<const ObsLayout> make_traffic_layout(int history_frames) {
  auto layout = std::make_shared<ObsLayout>();
  layout->frame_size = TrafficEnv::kFrameSize;
  layout->frames = static_cast<std::size_t>(history_frames);
  for (int w = 0; w < history_frames; ++w) {
    const std::string f = "f" + std::to_string(w) + ".";
    auto add = [&](const std::string& name, double scale) {
      layout->names.push_back(f + name);
      layout->scale.push_back(scale);
    };
    layout->ego_slots.push_back(layout->names.size());
    add("ego.speed", 0.1);
    layout->ego_slots.push_back(layout->names.size());
    add("ego.heading_error", 2.0);
    layout->ego_slots.push_back(layout->names.size());
    add("ego.lateral", 0.5);
    layout->ego_slots.push_back(layout->names.size());
    add("ego.goal_distance", 0.02);
    for (int k = 0; k < TrafficEnv::kNeighbors; ++k) {
      const std::string nb = "nb" + std::to_string(k) + ".";
      add(nb + "dx", 0.05);
      add(nb + "dy", 0.05);
      add(nb + "dv", 0.1);
      add(nb + "dh", 1.0);
      add(nb + "present", 1.0);
    }
    for (int k = 0; k < TrafficEnv::kPreviewPoints; ++k) {
      const std::string lp = "lane" + std::to_string(k) + ".";
      add(lp + "x", 0.05);
      add(lp + "y", 0.05);
    }
  }
  return layout;
}

ScenarioConfig with_default_layout(ScenarioConfig config, const RoadMap& map) {
  const int n = config.n_agents;
  if (n < 1) throw Error("scenario: n_agents must be >= 1");
  if (config.spawn.empty() != config.goals.empty())
    throw Error("scenario: spawn and goals must both be given or both omitted");
  if (!config.spawn.empty()) return config;
  const MapKind kind = map.kind;
  for (int i = 0; i < n; ++i) {
    SpawnSpec sp;
    GoalSpec goal;
    if (kind == MapKind::kMerge) {
      const int k = i / 2;
      sp.lane = i % 2;
      sp.arc = std::max(5.0, 70.0 - 20.0 * k);
      sp.speed = 10.0;
      goal.lane = 2;
      goal.arc = 30.0;
    } else if (kind == MapKind::kRoundabout) {
      const int arm = i % 4;
      const int entry = 8 + 2 * arm;
      const int exit = 8 + 2 * ((arm + 2) % 4) + 1;
      sp.lane = entry;
      sp.arc = std::max(5.0, map.lanes[entry].length() - 35.0 - 20.0 * (i / 4));
      sp.speed = 0.8 * map.speed_limit;
      goal.lane = exit;
      goal.arc = 30.0;
    } else {
      const JunctionShape js = junction_shape(kind);
      const int slots = js.arms * js.lanes;
      const int a = i % js.arms;
      const int l = (i / js.arms) % js.lanes;
      const int k = i / slots;
      const int b = js.arms == 4 ? (a + 2) % 4 : (a + 2) % 3;
      const int in_lane = a * 2 * js.lanes + 2 * l;
      const int out_lane = b * 2 * js.lanes + 2 * l + 1;
      sp.lane = in_lane;
      sp.arc = std::max(5.0, map.lanes[in_lane].length() - 30.0 - 20.0 * k - 15.0 * l);
      sp.speed = 0.8 * map.speed_limit;
      goal.lane = out_lane;
      goal.arc = 30.0;
    }
    config.spawn.push_back(sp);
    config.goals.push_back(goal);
  }
  return config;
}

TrafficEnv::TrafficEnv(ScenarioConfig config)
    : TrafficEnv(config, build_map(parse_map_kind(config.map_kind), config.map_seed)) {}

TrafficEnv::TrafficEnv(ScenarioConfig config, RoadMap map) : map_(std::move(map)) {
  map_.validate();
  config_ = with_default_layout(std::move(config), map_);
  init();
}

void TrafficEnv::init() {
  const int n = config_.n_agents;
  if (static_cast<int>(config_.spawn.size()) != n || static_cast<int>(config_.goals.size()) != n)
    throw Error("scenario: spawn/goals must list exactly n_agents entries");
  if (!config_.controlled.empty() && static_cast<int>(config_.controlled.size()) != n)
    throw Error("scenario: controlled must be empty or list n_agents flags");
  if (config_.horizon < 1) throw Error("scenario: horizon must be >= 1");
  if (!(config_.dt > 0.0)) throw Error("scenario: dt must be > 0");
  if (!(config_.d_thresh > 0.0)) throw Error("scenario: d_thresh must be > 0");
  if (config_.vehicle_dims.length <= 0.0 || config_.vehicle_dims.width <= 0.0)
    throw Error("scenario: vehicle_dims must be positive");
  if (config_.history_frames < 1) throw Error("scenario: history_frames must be >= 1");
  routes_.clear();
  for (int i = 0; i < n; ++i) {
    const SpawnSpec& sp = config_.spawn[i];
    const GoalSpec& g = config_.goals[i];
    const int lanes = static_cast<int>(map_.lanes.size());
    if (sp.lane < 0 || sp.lane >= lanes || g.lane < 0 || g.lane >= lanes)
      throw Error("scenario: agent " + std::to_string(i) + " references an unknown lane");
    Route r;
    r.lanes = find_lane_path(map_, sp.lane, g.lane);
    if (r.lanes.empty())
      throw Error("scenario: goal of agent " + std::to_string(i) + " is unreachable from its spawn lane");
    r.line = concat_lanes(map_, r.lanes);
    r.spawn_arc = sp.arc;
    double before_goal = 0.0;
    for (std::size_t k = 0; k + 1 < r.lanes.size(); ++k) before_goal += map_.lanes[r.lanes[k]].length();
    r.goal_arc = before_goal + g.arc;
    if (!(r.goal_arc > r.spawn_arc) || r.goal_arc > r.line.length())
      throw Error("scenario: goal of agent " + std::to_string(i) + " must lie ahead of its spawn on the route");
    routes_.push_back(std::move(r));
  }
  conflicts_.assign(n, std::vector<RouteConflict>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) conflicts_[i][j] = find_conflict(routes_[i].line, routes_[j].line);
  layout_ = make_traffic_layout(config_.history_frames);
}

OrientedBox TrafficEnv::footprint(const VehicleState& v) const {
  return {{v.x, v.y}, v.heading, config_.vehicle_dims.length, config_.vehicle_dims.width};
}

Projection TrafficEnv::project(const EnvState& state, int agent) const {
  const double p = state.progress[agent];
  return routes_[agent].line.project({state.vehicles[agent].x, state.vehicles[agent].y}, p - 2.0, p + 2.0);
}

std::pair<EnvState, std::vector<Observation>> TrafficEnv::reset(std::uint64_t seed) const {
  const int n = config_.n_agents;
  std::mt19937_64 rng(mix_seed(seed, 0x5EEDULL));
  std::uniform_real_distribution<double> unit_dist(-1.0, 1.0);
  EnvState state;
  state.vehicles.resize(n);
  state.progress.resize(n);
  state.done.assign(n, false);
  state.crashed.assign(n, false);
  state.reached_goal.assign(n, false);
  bool feasible = false;
  for (int attempt = 0; attempt < 100 && !feasible; ++attempt) {
    for (int i = 0; i < n; ++i) {
      const Route& r = routes_[i];
      const double arc = std::clamp(r.spawn_arc + config_.spawn_jitter_arc * unit_dist(rng), 0.0,
                                    r.goal_arc - 1.0);
      const double speed = std::clamp(config_.spawn[i].speed + config_.spawn_jitter_speed * unit_dist(rng),
                                      0.0, config_.v_max);
      const Vec2 p = r.line.point_at(arc);
      state.vehicles[i] = {p.x, p.y, wrap_heading(r.line.tangent_at(arc)), speed};
      state.progress[i] = arc;
    }
    feasible = true;
    for (int i = 0; i < n && feasible; ++i)
      for (int j = i + 1; j < n && feasible; ++j)
        if (box_distance(footprint(state.vehicles[i]), footprint(state.vehicles[j])) < config_.d_thresh)
          feasible = false;
  }
  if (!feasible) throw Error("reset: no spawn with all pairwise gaps >= d_thresh after 100 attempts");
  state.history.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::vector<double> frame = frame_features(state, i);
    state.history[i].assign(config_.history_frames, frame);
  }
  std::vector<Observation> obs;
  for (int i = 0; i < n; ++i) obs.push_back(observe(state, i));
  return {std::move(state), std::move(obs)};
}

std::vector<double> TrafficEnv::min_distances(const EnvState& state) const {
  const int n = config_.n_agents;
  std::vector<double> out(n, kInf);
  std::vector<OrientedBox> boxes;
  for (const VehicleState& v : state.vehicles) boxes.push_back(footprint(v));
  for (int i = 0; i < n; ++i) {
    if (state.done[i]) continue;
    for (int j = i + 1; j < n; ++j) {
      if (state.done[j]) continue;
      const double d = box_distance(boxes[i], boxes[j]);
      out[i] = std::min(out[i], d);
      out[j] = std::min(out[j], d);
    }
  }
  return out;
}

std::vector<double> TrafficEnv::costs(const EnvState& state, double d_thresh) const {
  const std::vector<double> dist = min_distances(state);
  std::vector<double> out(dist.size(), 0.0);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (state.done[i] || !std::isfinite(dist[i])) continue;
    if (config_.shaped_cost)
      out[i] = std::max(0.0, d_thresh - dist[i]) / d_thresh;
    else
      out[i] = dist[i] < d_thresh ? 1.0 : 0.0;
  }
  return out;
}

std::vector<double> TrafficEnv::rewards(const EnvState& prev, std::span<const Action> joint, const EnvState& next,
                                        const StepGeometry& geometry) const {
  (void)next;
  const RewardWeights& w = config_.reward_weights;
  std::vector<double> out(config_.n_agents, 0.0);
  for (int i = 0; i < config_.n_agents; ++i) {
    if (prev.done[i]) continue;
    const Action a = config_.action_bounds.clamp(joint[i]);
    double r = w.w_progress * geometry.delta_arc[i];
    if (geometry.goal_reached[i]) r += w.w_goal;
    if (geometry.collided[i]) r -= w.w_collision;
    r -= w.w_lane * std::abs(geometry.lateral[i]);
    r -= w.w_action * (a.accel * a.accel + a.heading_change * a.heading_change);
    out[i] = r;
  }
  return out;
}

TrafficEnv::Transition TrafficEnv::step(const EnvState& state, std::span<const Action> joint) const {
  const int n = config_.n_agents;
  if (state.all_done() || state.t >= config_.horizon) throw Error("step: episode already finished");
  if (static_cast<int>(joint.size()) != n) throw Error("step: expected one action per agent");
  Transition tr;
  EnvState& next = tr.state;
  next = state;
  const double dt = config_.dt;
  for (int i = 0; i < n; ++i) {
    if (state.done[i]) continue;
    const Action a = config_.action_bounds.clamp(joint[i]);
    VehicleState& v = next.vehicles[i];
    v.heading = wrap_heading(v.heading + a.heading_change);
    v.speed = std::clamp(v.speed + a.accel * dt, 0.0, config_.v_max);
    v.x += v.speed * dt * std::cos(v.heading);
    v.y += v.speed * dt * std::sin(v.heading);
  }
  StepGeometry geo;
  geo.collided.assign(n, false);
  geo.goal_reached.assign(n, false);
  geo.lateral.assign(n, 0.0);
  geo.delta_arc.assign(n, 0.0);
  std::vector<OrientedBox> boxes;
  for (const VehicleState& v : next.vehicles) boxes.push_back(footprint(v));
  for (int i = 0; i < n; ++i) {
    if (state.done[i]) continue;
    for (int j = i + 1; j < n; ++j) {
      if (state.done[j]) continue;
      if (check_collision(boxes[i], boxes[j])) geo.collided[i] = geo.collided[j] = true;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (state.done[i]) continue;
    const double p = state.progress[i];
    const Projection proj = routes_[i].line.project({next.vehicles[i].x, next.vehicles[i].y}, p - 2.0,
                                                     p + config_.v_max * dt + 5.0);
    next.progress[i] = proj.arc;
    geo.delta_arc[i] = proj.arc - p;
    geo.lateral[i] = proj.lateral;
    geo.goal_reached[i] = !state.reached_goal[i] && proj.arc >= routes_[i].goal_arc;
  }
  StepOutcome& out = tr.outcome;
  out.min_distances = min_distances(next);
  out.costs = costs(next, config_.d_thresh);
  out.rewards = rewards(state, joint, next, geo);
  out.collided = geo.collided;
  out.speeds.resize(n);
  for (int i = 0; i < n; ++i) out.speeds[i] = next.vehicles[i].speed;
  next.t = state.t + 1;
  for (int i = 0; i < n; ++i) {
    if (state.done[i]) continue;
    if (geo.collided[i]) next.crashed[i] = true;
    if (geo.goal_reached[i]) next.reached_goal[i] = true;
    if (geo.collided[i] || geo.goal_reached[i] || next.t >= config_.horizon) next.done[i] = true;
  }
  out.done = next.done;
  for (int i = 0; i < n; ++i) {
    auto& hist = next.history[i];
    hist.erase(hist.begin());
    hist.push_back(frame_features(next, i));
  }
  for (int i = 0; i < n; ++i) tr.observations.push_back(observe(next, i));
  return tr;
}

std::vector<double> TrafficEnv::frame_features(const EnvState& state, int agent) const {
  std::vector<double> f;
  f.reserve(kFrameSize);
  const VehicleState& ego = state.vehicles[agent];
  const Route& route = routes_[agent];
  const Projection proj = project(state, agent);
  f.push_back(ego.speed);
  f.push_back(wrap_heading(ego.heading - proj.tangent));
  f.push_back(proj.lateral);
  f.push_back(route.goal_arc - state.progress[agent]);

  const Vec2 ego_pos{ego.x, ego.y};
  std::vector<std::pair<double, int>> others;
  for (int j = 0; j < config_.n_agents; ++j) {
    if (j == agent || state.done[j]) continue;
    others.emplace_back((Vec2{state.vehicles[j].x, state.vehicles[j].y} - ego_pos).norm(), j);
  }
  std::sort(others.begin(), others.end());
  for (int k = 0; k < kNeighbors; ++k) {
    if (k < static_cast<int>(others.size())) {
      const VehicleState& o = state.vehicles[others[k].second];
      const Vec2 rel = to_frame(Vec2{o.x, o.y} - ego_pos, ego.heading);
      f.push_back(rel.x);
      f.push_back(rel.y);
      f.push_back(o.speed - ego.speed);
      f.push_back(wrap_heading(o.heading - ego.heading));
      f.push_back(1.0);
    } else {
      for (int s = 0; s < kNeighborFeatures; ++s) f.push_back(0.0);
    }
  }
  for (int k = 1; k <= kPreviewPoints; ++k) {
    const Vec2 p = route.line.point_at(state.progress[agent] + kPreviewSpacing * k);
    const Vec2 rel = to_frame(p - ego_pos, ego.heading);
    f.push_back(rel.x);
    f.push_back(rel.y);
  }
  return f;
}

Observation TrafficEnv::observe(const EnvState& state, int agent) const {
  Observation obs;
  obs.layout = layout_;
  obs.values.reserve(layout_->size());
  for (const auto& frame : state.history[agent]) obs.values.insert(obs.values.end(), frame.begin(), frame.end());
  return obs;
}

}  // namespace tcce
