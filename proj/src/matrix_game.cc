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

#include "tcce/matrix_game.h"

#include <algorithm>
#include <cmath>
#include <random>

namespace tcce {

std::size_t MatrixGame::n_profiles() const {
  std::size_t n = 1;
  for (int c : action_counts) n *= static_cast<std::size_t>(c);
  return n;
}

std::size_t MatrixGame::index(const std::vector<int>& profile) const {
  std::size_t idx = 0;
  for (int i = 0; i < n_players(); ++i) idx = idx * action_counts[i] + profile[i];
  return idx;
}

std::vector<int> MatrixGame::profile(std::size_t index) const {
  std::vector<int> p(action_counts.size());
  for (int i = n_players() - 1; i >= 0; --i) {
    p[i] = static_cast<int>(index % action_counts[i]);
    index /= action_counts[i];
  }
  return p;
}

void MatrixGame::validate() const {
  if (action_counts.empty()) throw Error("matrix game: no players");
  for (int c : action_counts)
    if (c < 1) throw Error("matrix game: every player needs at least one action");
  if (payoffs.size() != action_counts.size()) throw Error("matrix game: one payoff table per player required");
  for (const auto& p : payoffs) {
    if (p.size() != n_profiles()) throw Error("matrix game: payoff table size does not match the action counts");
    for (double v : p)
      if (!std::isfinite(v)) throw Error("matrix game: non-finite payoff");
  }
}

MatrixGame prisoners_dilemma(double reward, double sucker, double temptation, double punishment) {
  // Action 0 = cooperate, 1 = defect.
  MatrixGame g;
  g.action_counts = {2, 2};
  g.payoffs = {{reward, sucker, temptation, punishment}, {reward, temptation, sucker, punishment}};
  return g;
}

MatrixGame coordination_game() {
  MatrixGame g;
  g.action_counts = {2, 2};
  g.payoffs = {{1.0, 0.0, 0.0, 1.0}, {1.0, 0.0, 0.0, 1.0}};
  return g;
}

JointDistribution product_distribution(const MatrixGame& game, const std::vector<MixedStrategy>& strategies) {
  if (strategies.size() != game.action_counts.size()) throw Error("product_distribution: one strategy per player");
  JointDistribution sigma(game.n_profiles(), 1.0);
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    const std::vector<int> p = game.profile(k);
    for (int i = 0; i < game.n_players(); ++i) {
      if (static_cast<int>(strategies[i].size()) != game.action_counts[i])
        throw Error("product_distribution: strategy length mismatch");
      sigma[k] *= strategies[i][p[i]];
    }
  }
  return sigma;
}

namespace {

// deviation_values[i][a'] = E_sigma[u_i(a', a_-i)].
std::vector<std::vector<double>> deviation_values(const MatrixGame& game, const JointDistribution& sigma) {
  game.validate();
  if (sigma.size() != game.n_profiles()) throw Error("exact_cce_gap: distribution size does not match the game");
  std::vector<std::vector<double>> dev(game.n_players());
  for (int i = 0; i < game.n_players(); ++i) dev[i].assign(game.action_counts[i], 0.0);
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    if (sigma[k] == 0.0) continue;
    std::vector<int> p = game.profile(k);
    for (int i = 0; i < game.n_players(); ++i) {
      const int own = p[i];
      for (int a = 0; a < game.action_counts[i]; ++a) {
        p[i] = a;
        dev[i][a] += sigma[k] * game.payoffs[i][game.index(p)];
      }
      p[i] = own;
    }
  }
  return dev;
}

}  // namespace

std::vector<double> exact_cce_gap(const MatrixGame& game, const JointDistribution& sigma) {
  const auto dev = deviation_values(game, sigma);
  std::vector<double> gap(game.n_players());
  for (int i = 0; i < game.n_players(); ++i) {
    double current = 0.0;
    for (std::size_t k = 0; k < sigma.size(); ++k) current += sigma[k] * game.payoffs[i][k];
    gap[i] = std::max(0.0, *std::max_element(dev[i].begin(), dev[i].end()) - current);
  }
  return gap;
}

std::vector<int> best_deviation(const MatrixGame& game, const JointDistribution& sigma) {
  const auto dev = deviation_values(game, sigma);
  std::vector<int> out(game.n_players());
  for (int i = 0; i < game.n_players(); ++i)
    out[i] = static_cast<int>(std::max_element(dev[i].begin(), dev[i].end()) - dev[i].begin());
  return out;
}

namespace {

MixedStrategy softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  MixedStrategy p(logits.size());
  double z = 0.0;
  for (std::size_t a = 0; a < logits.size(); ++a) z += (p[a] = std::exp(logits[a] - m));
  for (double& v : p) v /= z;
  return p;
}

}  // namespace

MmdResult solve_matrix_game_mmd(const MatrixGame& game, const MmdOptions& opt) {
  game.validate();
  if (opt.iters < 1) throw Error("solve_matrix_game_mmd: iters must be >= 1");
  const int n = game.n_players();
  // Logits start at the uniform anchor (all zero).
  std::vector<std::vector<double>> logits(n);
  for (int i = 0; i < n; ++i) logits[i].assign(game.action_counts[i], 0.0);
  const double prox = std::isinf(opt.eta2) ? 0.0 : 1.0 / opt.eta2;
  MmdResult result;
  for (int it = 0; it < opt.iters; ++it) {
    const std::vector<std::vector<double>> prev = logits;
    for (int step = 0; step < std::max(1, opt.inner_steps); ++step) {
      std::vector<MixedStrategy> pi(n);
      for (int i = 0; i < n; ++i) pi[i] = softmax(logits[i]);
      const auto dev = deviation_values(game, product_distribution(game, pi));
      // Natural-gradient step in logit space with the two KL terms taken
      // implicitly, so large eta1 or 1/eta2 stay stable.
      const double shrink = 1.0 + opt.lr * (opt.eta1 + prox);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < game.action_counts[i]; ++a)
          logits[i][a] = (logits[i][a] + opt.lr * (dev[i][a] + prox * prev[i][a])) / shrink;
    }
    std::vector<MixedStrategy> pi(n);
    for (int i = 0; i < n; ++i) pi[i] = softmax(logits[i]);
    result.gap_trace.push_back(exact_cce_gap(game, product_distribution(game, pi)));
    result.iterations = it + 1;
    if (opt.stop_gap >= 0.0 &&
        std::all_of(result.gap_trace.back().begin(), result.gap_trace.back().end(),
                    [&](double g) { return g <= opt.stop_gap; }))
      break;
  }
  result.strategies.resize(n);
  for (int i = 0; i < n; ++i) result.strategies[i] = softmax(logits[i]);
  return result;
}

}  // namespace tcce
