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

#ifndef TCCE_DRIVER_H_
#define TCCE_DRIVER_H_

#include "tcce/core.h"
#include "tcce/traffic_env.h"

namespace tcce {

struct DriverParams {
  double time_headway = 1.5;
  double min_gap = 2.0;
  double max_accel = 1.5;
  double comfort_decel = 2.0;
  double exponent = 4.0;
  double min_lookahead = 6.0;
  double lookahead_gain = 0.8;
};

// Intelligent-driver longitudinal control with pure-pursuit steering. Agents
// approaching a shared conflict zone yield to whoever is closer to it.
Action rule_based_driver(const TrafficEnv& env, const EnvState& state, int agent,
                         const DriverParams& params = {});

// Gap and speed of the vehicle the driver treats as its leader, if any.
struct LeaderInfo {
  bool present = false;
  double gap = 0.0;
  double speed = 0.0;
};
LeaderInfo find_leader(const TrafficEnv& env, const EnvState& state, int agent, const DriverParams& params = {});

double idm_accel(double speed, double desired_speed, const LeaderInfo& leader, const DriverParams& params);

}  // namespace tcce

#endif  // TCCE_DRIVER_H_
