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

#include "tcce/core.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tcce {

double wrap_heading(double theta) {
  double r = std::fmod(theta + kPi, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  double out = r - kPi;
  // fmod rounding can land exactly on +pi.
  if (out >= kPi) out -= 2.0 * kPi;
  return out;
}

Action ActionBounds::clamp(const Action& a) const {
  return {std::clamp(a.accel, accel_min, accel_max),
          std::clamp(a.heading_change, -heading_change_max, heading_change_max)};
}

Action ActionBounds::from_normalized(double u0, double u1) const {
  const double mid = 0.5 * (accel_max + accel_min);
  const double half = 0.5 * (accel_max - accel_min);
  return clamp({mid + half * u0, heading_change_max * u1});
}

std::array<double, 2> ActionBounds::to_normalized(const Action& a) const {
  const double mid = 0.5 * (accel_max + accel_min);
  const double half = 0.5 * (accel_max - accel_min);
  return {std::clamp((a.accel - mid) / half, -1.0, 1.0),
          std::clamp(a.heading_change / heading_change_max, -1.0, 1.0)};
}

bool ActionBounds::contains(const Action& a) const {
  return a.accel >= accel_min && a.accel <= accel_max &&
         std::abs(a.heading_change) <= heading_change_max;
}

std::vector<double> Observation::normalized() const {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * layout->scale[i];
  return out;
}

bool Observation::finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {

void require(bool ok, const char* field, const std::string& why) {
  if (!ok) throw Error(std::string("invalid hyperparameter '") + field + "': " + why);
}

}  // namespace

void Hyperparams::validate() const {
  require(gamma > 0.0 && gamma <= 1.0, "gamma", "must lie in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda", "must lie in [0, 1]");
  require(clip > 0.0, "clip", "must be > 0");
  require(eta1 >= 0.0 && std::isfinite(eta1), "eta1", "must be finite and >= 0");
  require(eta2 > 0.0, "eta2", "must be > 0");
  require(bonus_scale >= 0.0, "bonus_scale", "must be >= 0");
  require(alpha > 0.0 && alpha <= 1.0, "alpha", "must lie in (0, 1]");
  require(epsilon_cost >= 0.0, "epsilon_cost", "must be >= 0");
  require(kappa > 0.0, "kappa", "must be > 0");
  require(n_quantiles >= 1, "n_quantiles", "must be >= 1");
  require(mixture_components >= 1, "mixture_components", "must be >= 1");
  require(candidate_actions >= 1, "candidate_actions", "must be >= 1");
  require(rollout_rounds >= 1, "rollout_rounds", "must be >= 1");
  require(update_rounds >= 1, "update_rounds", "must be >= 1");
  require(minibatch >= 1, "minibatch", "must be >= 1");
  require(value_coef >= 0.0, "value_coef", "must be >= 0");
  require(entropy_coef >= 0.0, "entropy_coef", "must be >= 0");
  require(lr_policy > 0.0, "lr_policy", "must be > 0");
  require(lr_critic > 0.0, "lr_critic", "must be > 0");
  require(lr_lagrange >= 0.0, "lr_lagrange", "must be >= 0");
  require(lambda_init >= 0.0, "lambda_init", "must be >= 0");
  require(fidelity_threshold >= 0.0, "fidelity_threshold", "must be >= 0");
  require(d_thresh > 0.0, "d_thresh", "must be > 0");
  require(beta_max >= 0.0, "beta_max", "must be >= 0");
  require(rho_min > 0.0 && rho_min <= 1.0, "rho_min", "must lie in (0, 1]");
  require(density_tile > 0.0, "density_tile", "must be > 0");
  require(history_frames >= 1, "history_frames", "must be >= 1");
  require(!hidden.empty() && std::all_of(hidden.begin(), hidden.end(),
                                         [](int h) { return h >= 1; }),
          "hidden", "needs at least one layer, all widths >= 1");
  require(iterations >= 0, "iterations", "must be >= 0");
  require(init_log_std >= -4.0 && init_log_std <= 1.0, "init_log_std",
          "must lie in [-4, 1]");
  require(max_grad_norm > 0.0, "max_grad_norm", "must be > 0");
  require(anchor_epochs >= 1, "anchor_epochs", "must be >= 1");
  require(demo_episodes >= 1, "demo_episodes", "must be >= 1");
}

double discounted_return(std::span<const double> rewards, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (double r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

double mc_value_estimate(std::span<const Trajectory> trajectories, double gamma,
                         Channel channel) {
  if (trajectories.empty()) throw Error("mc_value_estimate: empty trajectory set");
  double sum = 0.0;
  std::vector<double> values;
  for (const Trajectory& traj : trajectories) {
    values.clear();
    for (const TrajectoryStep& s : traj.steps) {
      const double v = channel == Channel::kReward ? s.reward : s.cost;
      if (std::isnan(v)) {
        std::ostringstream msg;
        msg << "mc_value_estimate: NaN " << (channel == Channel::kReward ? "reward" : "cost")
            << " in trajectory of agent " << traj.agent << ", episode " << traj.episode;
        throw Error(msg.str());
      }
      values.push_back(v);
    }
    sum += discounted_return(values, gamma);
  }
  return sum / static_cast<double>(trajectories.size());
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace tcce
