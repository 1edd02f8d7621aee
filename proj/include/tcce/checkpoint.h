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

#ifndef TCCE_CHECKPOINT_H_
#define TCCE_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tcce/mlp.h"
#include "tcce/multi_agent_env.h"
#include "tcce/policy.h"
#include "tcce/solver.h"

namespace tcce {

inline constexpr int kCheckpointVersion = 1;

// One parameter blob: a versioned text header naming the model kind, its
// layer dims, seed and iteration, followed by the parameters as a flat
// little-endian float32 array.
struct ParamBlob {
  std::string kind;
  std::vector<int> shape;
  Vec params;
  std::uint64_t seed = 0;
  int iteration = 0;
};

void save_blob(const std::filesystem::path& path, const ParamBlob& blob);
// Throws Error when the file is missing, truncated, of another version, or
// of a different kind or shape than expected.
ParamBlob load_blob(const std::filesystem::path& path, const std::string& kind, const std::vector<int>& shape);

void save_anchor(const std::filesystem::path& path, const LaplaceMixturePolicy& anchor, std::uint64_t seed = 0);
LaplaceMixturePolicy load_anchor(const std::filesystem::path& path, int input_dim, const std::vector<int>& hidden,
                                 int components);

// Writes policy, value and cost networks of every controlled agent, the
// multipliers (lagrange.csv), the anchor and the iteration counter.
void save_checkpoint(const std::filesystem::path& dir, const SolverState& state);

// Rebuilds a solver state for `prototype` and `hyper` from a checkpoint
// directory. Optimizer moments and visitation counts start fresh.
SolverState load_checkpoint(const std::filesystem::path& dir, const MultiAgentEnv& prototype, const Hyperparams& hyper);

}  // namespace tcce

#endif  // TCCE_CHECKPOINT_H_
