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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.h"
#include "oracles.h"
#include "tcce/exploitability.h"
#include "tcce/markov_game.h"
#include "tcce/matrix_game.h"

namespace tcce {
namespace {

std::vector<double> brute_gap(const MatrixGame& g, const JointDistribution& sigma) {
  return oracle::brute_force_cce_gap(
      g.action_counts, [&](int i, const std::vector<int>& p) { return g.payoffs[i][g.index(p)]; },
      [&](const std::vector<int>& p) { return sigma[g.index(p)]; });
}

JointDistribution point_mass(const MatrixGame& g, const std::vector<int>& profile) {
  JointDistribution s(g.n_profiles(), 0.0);
  s[g.index(profile)] = 1.0;
  return s;
}

TEST(ExactCceGap, PrisonersDilemmaExamples) {
  const MatrixGame pd = prisoners_dilemma();
  // Action 0 cooperates, action 1 defects.
  const auto dd = exact_cce_gap(pd, point_mass(pd, {1, 1}));
  const auto cc = exact_cce_gap(pd, point_mass(pd, {0, 0}));
  const auto uni = exact_cce_gap(pd, JointDistribution(4, 0.25));
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(dd[i], 0.0, 1e-9);
    EXPECT_NEAR(cc[i], 2.0, 1e-9);
    EXPECT_NEAR(uni[i], 0.75, 1e-9);
  }
  EXPECT_NEAR(brute_gap(pd, JointDistribution(4, 0.25))[0], 0.75, 1e-12);
}

TEST(ExactCceGap, MatchesBruteForceOnRandomGames) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    MatrixGame game;
    game.action_counts = {2 + trial % 3, 3, 2};
    game.payoffs.assign(3, std::vector<double>(game.n_profiles()));
    for (auto& p : game.payoffs)
      for (double& x : p) x = g(rng);
    JointDistribution s(game.n_profiles());
    double z = 0.0;
    for (double& x : s) z += (x = u(rng));
    for (double& x : s) x /= z;
    const auto a = exact_cce_gap(game, s), b = brute_gap(game, s);
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(a[i], std::max(0.0, b[i]), 1e-12);
      EXPECT_GE(a[i], -1e-12);
    }
  }
}

TEST(ExactCceGap, ShapeMismatchThrows) {
  EXPECT_THROW(exact_cce_gap(prisoners_dilemma(), JointDistribution(3, 1.0 / 3.0)), Error);
}

TEST(ExactCceGap, ArgmaxDeviationInvariantUnderAffineTransform) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    MatrixGame game;
    game.action_counts = {3, 4};
    game.payoffs.assign(2, std::vector<double>(12));
    for (auto& p : game.payoffs)
      for (double& x : p) x = g(rng);
    JointDistribution s(12);
    double z = 0.0;
    for (double& x : s) z += (x = u(rng));
    for (double& x : s) x /= z;
    MatrixGame scaled = game;
    const double a = 0.5 + 3.0 * u(rng), b = 5.0 * g(rng);
    for (auto& p : scaled.payoffs)
      for (double& x : p) x = a * x + b;
    EXPECT_EQ(best_deviation(game, s), best_deviation(scaled, s));
  }
}

TEST(ExactCceGap, ProductOfNashIsZero) {
  const MatrixGame coord = coordination_game();
  for (const auto& s : {std::vector<MixedStrategy>{{1, 0}, {1, 0}}, std::vector<MixedStrategy>{{0.5, 0.5}, {0.5, 0.5}}})
    for (double gap : exact_cce_gap(coord, product_distribution(coord, s))) EXPECT_NEAR(gap, 0.0, 1e-12);
}

TEST(Mmd, ZeroGameStaysUniform) {
  MatrixGame zero;
  zero.action_counts = {3, 2};
  zero.payoffs.assign(2, std::vector<double>(6, 0.0));
  MmdOptions opt;
  opt.iters = 200;
  const MmdResult r = solve_matrix_game_mmd(zero, opt);
  for (const auto& trace : r.gap_trace)
    for (double g : trace) EXPECT_NEAR(g, 0.0, 1e-12);
  for (double p : r.strategies[0]) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
  for (double p : r.strategies[1]) EXPECT_NEAR(p, 0.5, 1e-12);
}

TEST(Mmd, ConvergesOnPrisonersDilemmaAndCoordination) {
  for (const MatrixGame& game : {prisoners_dilemma(), coordination_game()}) {
    const MmdResult r = solve_matrix_game_mmd(game, MmdOptions{});
    const auto gap = exact_cce_gap(game, product_distribution(game, r.strategies));
    for (double g : gap) EXPECT_LE(g, 0.05);
  }
  const MmdResult pd = solve_matrix_game_mmd(prisoners_dilemma(), MmdOptions{});
  EXPECT_GT(pd.strategies[0][1], 0.9);
}

TEST(Mmd, StrongAnchorKeepsUniform) {
  MmdOptions opt;
  opt.eta1 = 1e4;
  opt.iters = 2000;
  const MmdResult r = solve_matrix_game_mmd(prisoners_dilemma(), opt);
  for (const auto& s : r.strategies) {
    double tv = 0.0;
    for (double p : s) tv += 0.5 * std::abs(p - 0.5);
    EXPECT_LE(tv, 0.01);
  }
}

// Independent simulation of the gridworld rules.
struct GridStep {
  int p0, p1;
  double r0;
};

GridStep grid_rules(int p0, int p1, int a0, int a1) {
  auto done = [](int p) { return p == 6 || p == 7; };
  int q0 = (!done(p0) && a0) ? p0 + 1 : p0;
  int q1 = (!done(p1) && a1) ? p1 + 1 : p1;
  if (q0 == 5 && q1 == 5) return {7, 7, -10.0};
  return {q0, q1, (p0 == 5 && q0 == 6) ? 10.0 : 0.0};
}

TEST(MarkovBestResponse, AllZeroRewardsGiveZero) {
  TabularMarkovGame g = build_grid_merge_game();
  for (auto& r : g.rewards)
    for (auto& row : r) std::fill(row.begin(), row.end(), 0.0);
  const TabularPolicy half(g.horizon, std::vector<std::vector<double>>(g.n_states, {0.5, 0.5}));
  EXPECT_EQ(exact_markov_best_response(g, {half, half}, 0, 0.99).value, 0.0);
}

TEST(MarkovBestResponse, SingleStepReducesToMatrixGame) {
  const MatrixGame pd = prisoners_dilemma();
  TabularMarkovGame g;
  g.n_states = 1;
  g.action_counts = {2, 2};
  g.horizon = 1;
  g.initial = {1.0};
  g.transitions.assign(1, std::vector<std::vector<std::pair<int, double>>>(4, {{0, 1.0}}));
  g.rewards.assign(2, std::vector<std::vector<double>>(1, std::vector<double>(4)));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 4; ++j) g.rewards[i][0][j] = pd.payoffs[i][j];
  g.costs = g.rewards;
  for (auto& c : g.costs) std::fill(c[0].begin(), c[0].end(), 0.0);
  const double q = 0.3;  // opponent cooperates with probability q
  const TabularPolicy other{{{q, 1.0 - q}}};
  const auto br = exact_markov_best_response(g, {other, other}, 0, 0.9);
  const double coop = q * 3.0 + (1 - q) * 0.0, defect = q * 5.0 + (1 - q) * 1.0;
  EXPECT_NEAR(br.value, std::max(coop, defect), 1e-12);
  EXPECT_EQ(br.policy[0][0], 1);
}

TEST(MarkovBestResponse, GridMergeMatchesExhaustiveEnumeration) {
  const TabularMarkovGame g = build_grid_merge_game();
  const double gamma = 0.99;
  // Deterministic opponents: always advance, and advance only on even steps.
  for (int variant = 0; variant < 2; ++variant) {
    TabularPolicy opp(g.horizon, std::vector<std::vector<double>>(g.n_states));
    auto opp_action = [&](int t) { return variant == 0 ? 1 : (t % 2 == 0 ? 1 : 0); };
    for (int t = 0; t < g.horizon; ++t)
      for (auto& row : opp[t]) row = opp_action(t) ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
    double best = -1e300;
    for (int mask = 0; mask < (1 << g.horizon); ++mask) {
      int p0 = 0, p1 = 0;
      double v = 0.0;
      for (int t = 0; t < g.horizon; ++t) {
        const GridStep s = grid_rules(p0, p1, (mask >> t) & 1, opp_action(t));
        v += std::pow(gamma, t) * s.r0;
        p0 = s.p0;
        p1 = s.p1;
      }
      best = std::max(best, v);
    }
    EXPECT_NEAR(exact_markov_best_response(g, {opp, opp}, 0, gamma).value, best, 1e-9) << "variant " << variant;
  }
}

TEST(MarkovGap, NonNegative) {
  const TabularMarkovGame g = build_grid_merge_game();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<TabularPolicy> pols(2, TabularPolicy(g.horizon, std::vector<std::vector<double>>(g.n_states)));
    for (auto& p : pols)
      for (auto& t : p)
        for (auto& row : t) {
          const double a = u(rng);
          row = {a, 1.0 - a};
        }
    for (int i = 0; i < 2; ++i) EXPECT_GE(exact_markov_gap(g, pols, i, 0.99, 0.5), -1e-12);
  }
}

class GridFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { setup_ = new fixture::TabularSetup(fixture::make_tabular(5)); }
  static void TearDownTestSuite() { delete setup_; }
  static fixture::TabularSetup* setup_;
};
fixture::TabularSetup* GridFixture::setup_ = nullptr;

TEST(GridMergeEnv, BothAdvancingCrashAtMerge) {
  GridMergeEnv env;
  env.reset(0);
  EXPECT_EQ(env.state(), GridMerge::state(0, 0));
  std::vector<Action> adv{GridMergeEnv::action_for(1), GridMergeEnv::action_for(1)};
  for (int k = 0; k < 5; ++k) env.step(adv);
  EXPECT_EQ(env.state(), GridMerge::state(GridMerge::kCrash, GridMerge::kCrash));
  EXPECT_TRUE(env.episode_over());
}

TEST_F(GridFixture, BreakWithZeroBudgetIsZeroWithinNoise) {
  GapOptions go;
  go.eval_episodes = 100;
  for (int i = 0; i < 2; ++i) {
    const GapReport r = br_break_equilibrium(setup_->env, setup_->state, i, 0, 11, go);
    EXPECT_EQ(r.episodes, 100);
    EXPECT_EQ(r.method, "break");
    EXPECT_LE(std::abs(r.gap), 3.0 * r.se + 1e-12);
  }
}

TEST_F(GridFixture, RestrictWithFullCandidatesMatchesExactGap) {
  const auto& game = setup_->env.game();
  const double gamma = setup_->state.hyper.gamma;
  const auto pols = fixture::tabular_policies(setup_->state, game.horizon);
  GapOptions go;
  go.eval_episodes = 200;
  for (int i = 0; i < 2; ++i) {
    const double lambda = setup_->state.agents[i].lagrange.lambda;
    const BestResponse best = exact_markov_best_response(game, pols, i, gamma, lambda);
    const double exact = best.value - policy_value(game, pols, i, gamma, lambda);
    const GapReport r =
        br_restricted_actions(setup_->env, setup_->state, setup_->anchor, i, 77, fixture::exact_restrict_options(best), go);
    EXPECT_EQ(r.method, "restrict");
    EXPECT_EQ(r.episodes, 200);
    EXPECT_LE(std::abs(r.gap - exact), 2.0 * r.se) << "agent " << i << " exact " << exact << " estimate " << r.gap;
  }
}

TEST_F(GridFixture, TooManyCandidatesThrows) {
  RestrictOptions ro;
  ro.k_cand = setup_->anchor->components() + 1;
  EXPECT_THROW(br_restricted_actions(setup_->env, setup_->state, setup_->anchor, 0, 1, ro), Error);
}

TEST(Restrict, SingleCandidateAtPolicyModeIsNoDeviation) {
  TrafficGame game(fixture::small_merge(2, 30));
  Hyperparams h = fixture::small_hyper();
  h.init_log_std = GaussianPolicy::kMinLogStd;
  auto setup = fixture::make_solver(game, h, 12);
  for (auto& a : setup.state.agents) a.policy.set_log_std({GaussianPolicy::kMinLogStd, GaussianPolicy::kMinLogStd});
  const SolverState& st = setup.state;
  RestrictOptions ro;
  ro.k_cand = 1;
  ro.opponent_samples = 2;
  ro.candidates = [&](const Observation& o) {
    const auto d = st.agents[0].policy.dist(o.normalized());
    return std::vector<NormAction>{d.mean};
  };
  GapOptions go;
  go.eval_episodes = 40;
  const GapReport r = br_restricted_actions(game, st, setup.anchor, 0, 3, ro, go);
  EXPECT_LE(std::abs(r.gap), std::max(3.0 * r.se, 0.02 * std::abs(r.value_policy)));
}

TEST(AnchorCandidates, RankedLocations) {
  auto anchor = std::make_shared<LaplaceMixturePolicy>(3, std::vector<int>{8}, 4, 1);
  const CandidateFn f = anchor_candidates(anchor, 2);
  Observation o;
  o.values = {0.1, 0.2, 0.3};
  auto layout = std::make_shared<ObsLayout>();
  layout->names = {"a", "b", "c"};
  layout->scale = {1.0, 1.0, 1.0};
  o.layout = layout;
  const auto c = f(o);
  ASSERT_EQ(c.size(), 2u);
  const auto d = anchor->dist(o.normalized());
  const auto rank = d.ranked_components();
  EXPECT_EQ(c[0], d.loc[rank[0]]);
  EXPECT_EQ(c[1], d.loc[rank[1]]);
  EXPECT_THROW(anchor_candidates(anchor, 5), Error);
}

TEST(PairedGap, Accounting) {
  TrafficGame game(fixture::small_merge(2, 20));
  auto setup = fixture::make_solver(game, fixture::small_hyper(), 13);
  const auto a = collect_rollouts(game, setup.state, 5, 1);
  const GapReport r = paired_gap(a, a, 1, 0.99, 0.0, true, "break");
  EXPECT_EQ(r.gap, 0.0);
  EXPECT_EQ(r.se, 0.0);
  EXPECT_EQ(r.episodes, 5);
  EXPECT_EQ(r.agent, 1);
  const auto v = evaluate_agent(a, 1, 0.99, 0.0);
  EXPECT_EQ(v.per_episode.size(), 5u);
  EXPECT_NEAR(r.value_policy, v.mean, 1e-12);
}

}  // namespace
}  // namespace tcce
