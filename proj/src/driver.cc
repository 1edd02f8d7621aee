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

#include "tcce/driver.h"

#include <algorithm>
#include <cmath>

namespace tcce {

namespace {

// Ignore conflicts further than this behind the conflict entry.
constexpr double kForgetBehind = -40.0;

}  // namespace

double idm_accel(double speed, double desired_speed, const LeaderInfo& leader, const DriverParams& p) {
  const double v0 = std::max(desired_speed, 0.1);
  double a = p.max_accel * (1.0 - std::pow(speed / v0, p.exponent));
  if (leader.present) {
    const double dv = speed - leader.speed;
    const double s_star =
        p.min_gap + std::max(0.0, speed * p.time_headway + speed * dv / (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
    const double gap = std::max(leader.gap, 0.1);
    a -= p.max_accel * (s_star / gap) * (s_star / gap);
  }
  return a;
}

LeaderInfo find_leader(const TrafficEnv& env, const EnvState& state, int agent, const DriverParams& p) {
  const double length = env.config().vehicle_dims.length;
  LeaderInfo best;
  for (int j = 0; j < env.num_agents(); ++j) {
    if (j == agent || state.done[j]) continue;
    const RouteConflict& ci = env.conflict(agent, j);
    const RouteConflict& cj = env.conflict(j, agent);
    if (!ci.exists || !cj.exists) continue;
    const double ei = state.progress[agent] - ci.arc_self;
    const double ej = state.progress[j] - cj.arc_self;
    if (ei > ci.shared_length) continue;
    if (ej > cj.shared_length + length + p.min_gap) continue;
    if (ei < kForgetBehind || ej < kForgetBehind) continue;
    const bool ahead = ej > ei || (ej == ei && j < agent);
    if (!ahead) continue;
    const double gap = ej - ei - length;
    if (!best.present || gap < best.gap) {
      best.present = true;
      best.gap = gap;
      best.speed = state.vehicles[j].speed;
    }
  }
  return best;
}

Action rule_based_driver(const TrafficEnv& env, const EnvState& state, int agent, const DriverParams& p) {
  const VehicleState& v = state.vehicles[agent];
  const Route& route = env.routes()[agent];
  const ActionBounds& bounds = env.config().action_bounds;
  Action a;
  a.accel = idm_accel(v.speed, env.map().speed_limit, find_leader(env, state, agent, p), p);
  const double lookahead = std::max(p.min_lookahead, p.lookahead_gain * v.speed);
  const Vec2 target = route.line.point_at(state.progress[agent] + lookahead);
  const Vec2 rel = to_frame(target - Vec2{v.x, v.y}, v.heading);
  const double alpha = std::atan2(rel.y, rel.x);
  const double curvature = 2.0 * std::sin(alpha) / lookahead;
  a.heading_change = curvature * std::max(v.speed, 0.5) * env.config().dt;
  return bounds.clamp(a);
}

}  // namespace tcce
