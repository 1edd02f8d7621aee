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

#ifndef TCCE_CONFIG_H_
#define TCCE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tcce/core.h"
#include "tcce/traffic_env.h"

namespace tcce {

// The 3 x 3 grid of constraint distances and CVaR levels run by --sweep.
struct SweepSpec {
  bool enabled = false;
  std::vector<double> d_thresh = {2.0, 4.0, 6.0};
  std::vector<double> alpha = {0.2, 0.5, 1.0};
  bool operator==(const SweepSpec&) const = default;
};

struct EvalSpec {
  int episodes = 100;        // evaluation episodes for gaps, fidelity and sweeps
  int break_budget = 30;     // deviator iterations of the break estimator
  int opponent_samples = 8;  // lookahead samples of the restricted estimator
  std::string method = "break";
  bool operator==(const EvalSpec&) const = default;
};

struct RunConfig {
  ScenarioConfig scenario;
  Hyperparams hyper;
  bool ablate_mmd = false;    // eta1 = 0 and 1/eta2 = 0
  bool ablate_bonus = false;  // bonus_scale = 0
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_dir = "run";
  SweepSpec sweep;
  EvalSpec eval;

  bool operator==(const RunConfig&) const = default;
};

// Applies the ablation overrides and copies the shared constraint distance
// and history length from the hyperparameters into the scenario.
RunConfig resolve(RunConfig config);

// Throws Error naming the offending field.
void validate(const RunConfig& config);

// Parses JSON text. Unknown keys are rejected; absent keys keep defaults.
// eta2 accepts the string "inf".
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

// Pretty-printed JSON listing every field.
std::string serialize_config(const RunConfig& config);

}  // namespace tcce

#endif  // TCCE_CONFIG_H_
