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

#ifndef TCCE_CORE_H_
#define TCCE_CORE_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcce {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// All library failures surface as this type (or a subclass).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wraps an angle into [-pi, pi).
double wrap_heading(double theta);

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, always wrapped
  double speed = 0.0;    // m/s, in [0, v_max]

  bool operator==(const VehicleState&) const = default;
};

// Physical control: longitudinal acceleration and per-step heading change.
struct Action {
  double accel = 0.0;
  double heading_change = 0.0;

  bool operator==(const Action&) const = default;
};

// Box bounds of the action space. Policies act in normalized coordinates
// u in [-1, 1]^2 which map affinely onto these bounds.
struct ActionBounds {
  double accel_min = -4.0;
  double accel_max = 3.0;
  double heading_change_max = 0.1;

  Action clamp(const Action& a) const;
  Action from_normalized(double u0, double u1) const;
  std::array<double, 2> to_normalized(const Action& a) const;
  bool contains(const Action& a) const;
  bool operator==(const ActionBounds&) const = default;
};

// Describes every slot of an observation vector. Shared by all agents of
// a scenario.
struct ObsLayout {
  std::vector<std::string> names;
  // Multiplicative scale mapping raw features to network inputs.
  std::vector<double> scale;
  // Slots used by the visitation-density estimator.
  std::vector<std::size_t> ego_slots;
  std::size_t frame_size = 0;
  std::size_t frames = 1;

  std::size_t size() const { return names.size(); }
};

struct Observation {
  std::vector<double> values;
  std::shared_ptr<const ObsLayout> layout;

  // values * layout->scale, the representation fed to networks.
  std::vector<double> normalized() const;
  bool finite() const;
};

struct StepOutcome {
  std::vector<double> rewards;
  std::vector<double> costs;
  std::vector<bool> collided;
  std::vector<bool> done;
  std::vector<double> min_distances;  // +inf when no other live agent
  std::vector<double> speeds;         // post-move speed, m/s
};

struct TrajectoryStep {
  std::vector<double> observation;  // network-ready (normalized) values
  Action action;                     // executed, clamped physical action
  std::array<double, 2> raw_action{};  // policy-space sample before clamping
  double log_prob = 0.0;
  double reward = 0.0;
  double cost = 0.0;
  double speed = 0.0;
  double min_distance = kInf;
  bool collided = false;
};

struct Trajectory {
  int agent = 0;
  int episode = 0;
  std::vector<TrajectoryStep> steps;

  std::size_t length() const { return steps.size(); }
};

enum class Channel { kReward, kCost };

struct Hyperparams {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double eta1 = 0.1;
  double eta2 = 10.0;  // +inf disables the proximal term
  double bonus_scale = 1e-4;
  double alpha = 1.0;
  double epsilon_cost = 0.5;
  double kappa = 1.0;
  int n_quantiles = 32;
  int mixture_components = 4;
  int candidate_actions = 4;
  int rollout_rounds = 16;
  int update_rounds = 10;
  int minibatch = 256;
  double value_coef = 0.5;     // lambda_1
  double entropy_coef = 0.01;  // lambda_2
  double lr_policy = 3e-4;
  double lr_critic = 1e-3;
  double lr_lagrange = 0.01;
  double lambda_init = 0.0;
  double fidelity_threshold = 0.5;
  double d_thresh = 4.0;
  double beta_max = 10.0;
  double rho_min = 1e-3;
  double density_tile = 0.5;
  int history_frames = 3;
  std::vector<int> hidden = {64, 64};
  int iterations = 100;
  double init_log_std = -1.0;
  double max_grad_norm = 0.5;
  int anchor_epochs = 30;
  int demo_episodes = 50;

  // Coefficient of the policy entropy implied by the two KL terms:
  // (1 + eta1 * eta2) / eta2, written so that eta2 = inf is well defined.
  double entropy_eta() const { return eta1 + 1.0 / eta2; }

  // Throws Error naming the first out-of-range field.
  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

// Sum_t gamma^t r_t. Empty input returns 0.
double discounted_return(std::span<const double> rewards, double gamma);

// Mean discounted return over a set of trajectories on one channel.
double mc_value_estimate(std::span<const Trajectory> trajectories, double gamma,
                         Channel channel);

// Scalarized value with the cost treated as a penalty.
inline double penalized_value(double v_reward, double v_cost, double lambda) {
  return v_reward - lambda * v_cost;
}

// splitmix64 finalizer, used to derive independent RNG streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace tcce

#endif  // TCCE_CORE_H_
