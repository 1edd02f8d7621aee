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

#ifndef TCCE_MATRIX_GAME_H_
#define TCCE_MATRIX_GAME_H_

#include <cstdint>
#include <vector>

#include "tcce/core.h"

namespace tcce {

// Normal-form game. Joint profiles are flattened row-major with player 0 as
// the most significant digit.
struct MatrixGame {
  std::vector<int> action_counts;
  // payoffs[i][joint_index]
  std::vector<std::vector<double>> payoffs;

  int n_players() const { return static_cast<int>(action_counts.size()); }
  std::size_t n_profiles() const;
  std::size_t index(const std::vector<int>& profile) const;
  std::vector<int> profile(std::size_t index) const;
  // Throws Error on inconsistent shapes or non-finite payoffs.
  void validate() const;
};

using JointDistribution = std::vector<double>;
using MixedStrategy = std::vector<double>;

MatrixGame prisoners_dilemma(double reward = 3.0, double sucker = 0.0, double temptation = 5.0,
                             double punishment = 1.0);
MatrixGame coordination_game();

JointDistribution product_distribution(const MatrixGame& game, const std::vector<MixedStrategy>& strategies);

// Per-player CCE gap: max_a' E_sigma[u_i(a', a_-i)] - E_sigma[u_i(a)].
std::vector<double> exact_cce_gap(const MatrixGame& game, const JointDistribution& sigma);
// Index of the maximizing fixed deviation for each player.
std::vector<int> best_deviation(const MatrixGame& game, const JointDistribution& sigma);

struct MmdOptions {
  double eta1 = 0.0;
  double eta2 = 10.0;  // +inf disables the proximal term
  int iters = 50000;
  int inner_steps = 5;
  double lr = 0.1;
  std::uint64_t seed = 0;
  // Stop early once every player's gap is at or below this value (< 0: never).
  double stop_gap = -1.0;
};

struct MmdResult {
  std::vector<MixedStrategy> strategies;
  std::vector<std::vector<double>> gap_trace;  // per iteration, per player
  int iterations = 0;
};

// Softmax-parameterized gradient ascent on, per player,
// <pi, q> - eta1 KL(pi || uniform) - (1/eta2) KL(pi || pi_prev), with exact
// expectations against the other players' current strategies. Starts from
// the uniform anchor, so the update is deterministic and ignores the seed.
MmdResult solve_matrix_game_mmd(const MatrixGame& game, const MmdOptions& options);

}  // namespace tcce

#endif  // TCCE_MATRIX_GAME_H_
