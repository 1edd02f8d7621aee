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

#ifndef TCCE_TRAFFIC_ENV_H_
#define TCCE_TRAFFIC_ENV_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tcce/core.h"
#include "tcce/geometry.h"
#include "tcce/road_map.h"

namespace tcce {

struct SpawnSpec {
  int lane = 0;
  double arc = 0.0;
  double speed = 0.0;
  bool operator==(const SpawnSpec&) const = default;
};

struct GoalSpec {
  int lane = 0;
  double arc = 0.0;
  bool operator==(const GoalSpec&) const = default;
};

struct RewardWeights {
  double w_progress = 0.1;
  double w_goal = 10.0;
  double w_collision = 10.0;
  double w_lane = 0.1;
  double w_action = 0.01;
  bool operator==(const RewardWeights&) const = default;
};

struct VehicleDims {
  double length = 4.5;
  double width = 2.0;
  bool operator==(const VehicleDims&) const = default;
};

struct ScenarioConfig {
  // One of the six map kinds, or "grid_merge" for the tabular test game.
  std::string map_kind = "merge";
  std::uint64_t map_seed = 0;
  int n_agents = 3;
  int horizon = 100;
  double dt = 0.1;
  // Empty spawn/goal lists are filled with the map kind's default layout.
  std::vector<SpawnSpec> spawn;
  std::vector<GoalSpec> goals;
  std::vector<bool> controlled;  // empty: all agents controlled
  VehicleDims vehicle_dims;
  RewardWeights reward_weights;
  double d_thresh = 4.0;
  bool shaped_cost = false;
  double v_max = 20.0;
  ActionBounds action_bounds;
  int history_frames = 3;
  double spawn_jitter_arc = 2.0;
  double spawn_jitter_speed = 1.0;

  bool operator==(const ScenarioConfig&) const = default;
};

// Fills spawn/goals with the default layout for the map when they are empty.
ScenarioConfig with_default_layout(ScenarioConfig config, const RoadMap& map);

struct Route {
  std::vector<int> lanes;
  Polyline line;
  double spawn_arc = 0.0;
  double goal_arc = 0.0;
};

// Where two routes first come within a vehicle width of each other.
struct RouteConflict {
  bool exists = false;
  double arc_self = 0.0;
  double arc_other = 0.0;
  double shared_length = 0.0;  // length of route `self` spent inside the conflict
};

struct EnvState {
  std::vector<VehicleState> vehicles;
  std::vector<double> progress;  // arc length along each agent's route
  std::vector<bool> done;
  std::vector<bool> crashed;
  std::vector<bool> reached_goal;
  int t = 0;
  // Per agent, the last W per-frame feature vectors, oldest first.
  std::vector<std::vector<std::vector<double>>> history;

  bool operator==(const EnvState&) const = default;
  bool all_done() const;
};

// Per-step geometric facts used by the reward.
struct StepGeometry {
  std::vector<bool> collided;
  std::vector<bool> goal_reached;
  std::vector<double> lateral;
  std::vector<double> delta_arc;
};

// Deterministic kinematic multi-vehicle simulator on a procedural road map.
// All operations are const: the episode state travels in EnvState.
class TrafficEnv {
 public:
  static constexpr int kNeighbors = 4;
  static constexpr int kPreviewPoints = 5;
  static constexpr double kPreviewSpacing = 5.0;
  static constexpr int kEgoFeatures = 4;
  static constexpr int kNeighborFeatures = 5;
  static constexpr int kFrameSize = kEgoFeatures + kNeighbors * kNeighborFeatures + 2 * kPreviewPoints;

  explicit TrafficEnv(ScenarioConfig config);
  TrafficEnv(ScenarioConfig config, RoadMap map);

  const ScenarioConfig& config() const { return config_; }
  const RoadMap& map() const { return map_; }
  const std::vector<Route>& routes() const { return routes_; }
  const RouteConflict& conflict(int self, int other) const { return conflicts_[self][other]; }
  std::shared_ptr<const ObsLayout> layout() const { return layout_; }
  int num_agents() const { return config_.n_agents; }

  // Throws Error if no collision-free jittered spawn is found in 100 draws.
  std::pair<EnvState, std::vector<Observation>> reset(std::uint64_t seed) const;

  struct Transition {
    EnvState state;
    StepOutcome outcome;
    std::vector<Observation> observations;
  };
  // Throws Error when stepping a finished episode.
  Transition step(const EnvState& state, std::span<const Action> joint) const;

  Observation observe(const EnvState& state, int agent) const;
  std::vector<double> frame_features(const EnvState& state, int agent) const;

  std::vector<double> rewards(const EnvState& prev, std::span<const Action> joint, const EnvState& next,
                              const StepGeometry& geometry) const;
  // Indicator (or shaped) proximity cost against all other live agents.
  std::vector<double> costs(const EnvState& state, double d_thresh) const;
  // Nearest rectangle gap to any other live agent (+inf if none).
  std::vector<double> min_distances(const EnvState& state) const;

  OrientedBox footprint(const VehicleState& v) const;
  Projection project(const EnvState& state, int agent) const;

 private:
  void init();

  ScenarioConfig config_;
  RoadMap map_;
  std::vector<Route> routes_;
  std::vector<std::vector<RouteConflict>> conflicts_;
  std::shared_ptr<const ObsLayout> layout_;
};

std::shared_ptr<const ObsLayout> make_traffic_layout(int history_frames);

}  // namespace tcce

#endif  // TCCE_TRAFFIC_ENV_H_
