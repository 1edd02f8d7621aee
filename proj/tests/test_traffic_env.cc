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
#include <set>
#include <sstream>

#include "tcce/driver.h"
#include "tcce/geometry.h"
#include "tcce/road_map.h"
#include "tcce/traffic_env.h"
#include "tcce/traffic_game.h"

namespace tcce {
namespace {

const std::vector<std::string> kMaps = {"merge",      "dual_intersection", "t_junction",
                                        "dense_intersection", "roundabout", "y_junction"};

ScenarioConfig config_for(const std::string& map, int n) {
  ScenarioConfig c;
  c.map_kind = map;
  c.n_agents = n;
  return c;
}

// Places agent i exactly on its route centerline at arc s, aligned with it.
void place_on_route(const TrafficEnv& env, EnvState& st, int i, double s, double speed) {
  const Route& r = env.routes()[i];
  const Vec2 p = r.line.point_at(s);
  st.vehicles[i] = {p.x, p.y, wrap_heading(r.line.tangent_at(s)), speed};
  st.progress[i] = s;
}

TEST(RoadMap, MergeHasOneJoinNode) {
  const RoadMap m = build_map(MapKind::kMerge, 0);
  EXPECT_NO_THROW(m.validate());
  std::vector<int> preds(m.lanes.size(), 0);
  for (const auto& succ : m.successors)
    for (int s : succ) preds[s]++;
  int joins = 0;
  for (int p : preds) joins += p >= 2 ? 1 : 0;
  EXPECT_EQ(joins, 1);
  int sources = 0;
  for (int p : preds) sources += p == 0 ? 1 : 0;
  EXPECT_EQ(sources, 2);
}

TEST(RoadMap, RoundaboutLoopIsClosed) {
  const RoadMap m = build_map(MapKind::kRoundabout, 0);
  ASSERT_GE(m.ring.size(), 3u);
  for (std::size_t k = 0; k < m.ring.size(); ++k) {
    const Polyline& a = m.lanes[m.ring[k]];
    const Polyline& b = m.lanes[m.ring[(k + 1) % m.ring.size()]];
    EXPECT_LT((a.points().back() - b.points().front()).norm(), 1e-6);
  }
  const std::set<int> ring(m.ring.begin(), m.ring.end());
  EXPECT_GE(static_cast<int>(m.lanes.size()) - static_cast<int>(ring.size()), 3);
}

TEST(RoadMap, DeterministicPerSeedAndRejectsUnknownKind) {
  const RoadMap a = build_map(MapKind::kTJunction, 7);
  const RoadMap b = build_map(MapKind::kTJunction, 7);
  ASSERT_EQ(a.lanes.size(), b.lanes.size());
  for (std::size_t i = 0; i < a.lanes.size(); ++i) {
    EXPECT_EQ(a.lanes[i].points(), b.lanes[i].points());
    EXPECT_EQ(a.lanes[i].length(), b.lanes[i].length());
  }
  EXPECT_EQ(a.successors, b.successors);
  EXPECT_THROW(parse_map_kind("highway"), Error);
}

TEST(RoadMap, AllKindsValidate) {
  for (const auto& name : kMaps) {
    const RoadMap m = build_map(parse_map_kind(name), 3);
    EXPECT_NO_THROW(m.validate()) << name;
    EXPECT_EQ(to_string(m.kind), name);
  }
}

TEST(RoadMap, CsvExportHeader) {
  std::ostringstream os;
  export_map_csv(build_map(MapKind::kMerge, 0), os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "lane_id,point_index,x,y");
}

TEST(Reset, DeterministicAndSpawnsRespectDistance) {
  for (const auto& name : kMaps) {
    TrafficEnv env(config_for(name, 4));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto [s1, o1] = env.reset(seed);
      const auto [s2, o2] = env.reset(seed);
      EXPECT_TRUE(s1 == s2) << name;
      for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(o1[i].values, o2[i].values);
        EXPECT_EQ(o1[i].values, env.observe(s1, i).values);
        EXPECT_TRUE(o1[i].finite());
        for (int j = i + 1; j < 4; ++j)
          EXPECT_GE(box_distance(env.footprint(s1.vehicles[i]), env.footprint(s1.vehicles[j])),
                    env.config().d_thresh)
              << name << " seed " << seed;
      }
    }
  }
}

TEST(Reset, SoloAgentHasEmptyNeighborSlots) {
  TrafficEnv env(config_for("merge", 1));
  const auto [st, obs] = env.reset(0);
  const auto frame = env.frame_features(st, 0);
  for (int k = 0; k < TrafficEnv::kNeighbors * TrafficEnv::kNeighborFeatures; ++k)
    EXPECT_EQ(frame[TrafficEnv::kEgoFeatures + k], 0.0);
  EXPECT_EQ(obs[0].values.size(), env.layout()->size());
}

TEST(Reset, InfeasibleSpawnThrows) {
  ScenarioConfig c = config_for("merge", 2);
  c.spawn = {{0, 50.0, 10.0}, {0, 51.0, 10.0}};
  c.goals = {{2, 30.0}, {2, 30.0}};
  c.spawn_jitter_arc = 0.0;
  TrafficEnv env(c);
  EXPECT_THROW(env.reset(0), Error);
}

TEST(Step, UniformMotion) {
  TrafficEnv env(config_for("merge", 1));
  auto [st, obs] = env.reset(0);
  st.vehicles[0] = {0.0, 0.0, 0.0, 10.0};
  const std::vector<Action> a{{0.0, 0.0}};
  const auto tr = env.step(st, a);
  EXPECT_NEAR(tr.state.vehicles[0].x, 1.0, 1e-12);
  EXPECT_NEAR(tr.state.vehicles[0].y, 0.0, 1e-12);
  EXPECT_EQ(tr.state.vehicles[0].speed, 10.0);
}

TEST(Step, SpeedClampsAtZero) {
  TrafficEnv env(config_for("merge", 1));
  auto [st, obs] = env.reset(0);
  st.vehicles[0].speed = 0.0;
  const std::vector<Action> a{{-5.0, 0.0}};
  EXPECT_EQ(env.step(st, a).state.vehicles[0].speed, 0.0);
}

TEST(Step, HandKinematics) {
  TrafficEnv env(config_for("merge", 1));
  auto [st, obs] = env.reset(0);
  st.vehicles[0] = {0.0, 0.0, 0.0, 10.0};
  const std::vector<Action> a{{2.0, 0.05}};
  const auto v = env.step(st, a).state.vehicles[0];
  EXPECT_NEAR(v.speed, 10.2, 1e-12);
  EXPECT_NEAR(v.heading, 0.05, 1e-12);
  EXPECT_NEAR(v.x, 10.2 * 0.1 * std::cos(0.05), 1e-12);
  EXPECT_NEAR(v.y, 10.2 * 0.1 * std::sin(0.05), 1e-12);
}

TEST(Step, FinishedEpisodeThrows) {
  ScenarioConfig c = config_for("merge", 1);
  c.horizon = 2;
  TrafficEnv env(c);
  auto [st, obs] = env.reset(0);
  const std::vector<Action> a{{0.0, 0.0}};
  st = env.step(st, a).state;
  st = env.step(st, a).state;
  EXPECT_THROW(env.step(st, a), Error);
}

TEST(Step, InvariantsUnderRandomActions) {
  for (const auto& name : kMaps) {
    TrafficEnv env(config_for(name, 4));
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ua(-6.0, 5.0), uh(-0.2, 0.2);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto [st, obs] = env.reset(seed);
      while (!st.all_done() && st.t < env.config().horizon) {
        std::vector<Action> a(4);
        for (auto& x : a) x = {ua(rng), uh(rng)};
        const auto tr = env.step(st, a);
        for (int i = 0; i < 4; ++i) {
          const VehicleState &p = st.vehicles[i], &q = tr.state.vehicles[i];
          EXPECT_LE(std::hypot(q.x - p.x, q.y - p.y), env.config().v_max * env.config().dt + 1e-12);
          EXPECT_GE(q.heading, -kPi);
          EXPECT_LT(q.heading, kPi);
          EXPECT_GE(q.speed, 0.0);
          EXPECT_LE(q.speed, env.config().v_max);
          if (st.done[i]) EXPECT_TRUE(p == q) << "done agents must stay frozen";
          if (!st.done[i])
            EXPECT_EQ(tr.outcome.costs[i] == 1.0, tr.outcome.min_distances[i] < env.config().d_thresh);
          EXPECT_TRUE(std::isfinite(tr.outcome.rewards[i]));
          EXPECT_TRUE(tr.observations[i].finite());
        }
        st = tr.state;
      }
    }
  }
}

TEST(Step, DeterministicGivenActions) {
  TrafficEnv env(config_for("dense_intersection", 4));
  auto run = [&] {
    auto [st, obs] = env.reset(5);
    std::vector<EnvState> states;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    while (!st.all_done() && st.t < env.config().horizon) {
      std::vector<Action> a(4);
      for (auto& x : a) x = {g(rng), 0.05 * g(rng)};
      st = env.step(st, a).state;
      states.push_back(st);
    }
    return states;
  };
  EXPECT_TRUE(run() == run());
}

TEST(Observe, CenterlineAlignedHasZeroErrors) {
  TrafficEnv env(config_for("merge", 1));
  auto [st, obs] = env.reset(0);
  place_on_route(env, st, 0, 40.0, 8.0);
  const auto f = env.frame_features(st, 0);
  EXPECT_NEAR(f[1], 0.0, 1e-9);
  EXPECT_NEAR(f[2], 0.0, 1e-9);
  EXPECT_EQ(f[0], 8.0);
}

TEST(Observe, NeighborDirectlyAhead) {
  ScenarioConfig c = config_for("merge", 2);
  c.spawn = {{0, 20.0, 10.0}, {0, 60.0, 10.0}};
  c.goals = {{2, 30.0}, {2, 30.0}};
  TrafficEnv env(c);
  auto [st, obs] = env.reset(0);
  st.vehicles[0] = {0.0, 0.0, 0.3, 10.0};
  const Vec2 ahead = unit(0.3) * 3.0;
  st.vehicles[1] = {ahead.x, ahead.y, 0.3, 7.0};
  const auto f = env.frame_features(st, 0);
  const int b = TrafficEnv::kEgoFeatures;
  EXPECT_NEAR(f[b + 0], 3.0, 1e-12);
  EXPECT_NEAR(f[b + 1], 0.0, 1e-12);
  EXPECT_NEAR(f[b + 2], -3.0, 1e-12);
  EXPECT_NEAR(f[b + 3], 0.0, 1e-12);
  EXPECT_EQ(f[b + 4], 1.0);
}

TEST(Observe, InvariantToRigidTransformOfScene) {
  for (const auto& name : {std::string("merge"), std::string("roundabout"), std::string("t_junction")}) {
    const ScenarioConfig c = config_for(name, 3);
    const RoadMap map = build_map(parse_map_kind(name), 0);
    TrafficEnv a(c, map);
    TrafficEnv b(c, transform_map(map, kPi / 2.0, {10.0, -5.0}));
    auto [sa, oa] = a.reset(1);
    auto [sb, ob] = b.reset(1);
    for (int step = 0; step < 30; ++step) {
      for (int i = 0; i < 3; ++i) {
        ASSERT_EQ(oa[i].values.size(), ob[i].values.size());
        for (std::size_t k = 0; k < oa[i].values.size(); ++k)
          EXPECT_NEAR(oa[i].values[k], ob[i].values[k], 1e-9) << name << " slot " << oa[i].layout->names[k];
      }
      if (sa.all_done()) break;
      const std::vector<Action> act{{1.0, 0.01}, {-0.5, -0.02}, {0.3, 0.0}};
      auto ta = a.step(sa, act);
      auto tb = b.step(sb, act);
      sa = ta.state;
      sb = tb.state;
      oa = ta.observations;
      ob = tb.observations;
    }
  }
}

TEST(Reward, Examples) {
  TrafficEnv env(config_for("merge", 1));
  auto [st, obs] = env.reset(0);
  StepGeometry g;
  g.collided = {false};
  g.goal_reached = {false};
  g.lateral = {0.0};
  g.delta_arc = {0.0};
  const std::vector<Action> zero{{0.0, 0.0}};
  EXPECT_EQ(env.rewards(st, zero, st, g)[0], 0.0);
  g.delta_arc = {2.0};
  EXPECT_NEAR(env.rewards(st, zero, st, g)[0], 0.2, 1e-12);
  g.collided = {true};
  EXPECT_NEAR(env.rewards(st, zero, st, g)[0], 0.2 - 10.0, 1e-12);
  g.collided = {false};
  g.goal_reached = {true};
  g.lateral = {-1.0};
  const std::vector<Action> act{{1.0, 0.1}};
  EXPECT_NEAR(env.rewards(st, act, st, g)[0], 0.2 + 10.0 - 0.1 - 0.01 * (1.0 + 0.01), 1e-12);
}

TEST(Cost, Examples) {
  TrafficEnv solo(config_for("merge", 1));
  auto [s1, o1] = solo.reset(0);
  EXPECT_EQ(solo.costs(s1, 4.0)[0], 0.0);

  TrafficEnv env(config_for("merge", 2));
  auto [st, obs] = env.reset(0);
  st.vehicles[0] = {0.0, 0.0, 0.0, 5.0};
  st.vehicles[1] = {100.0, 0.0, 0.0, 5.0};
  EXPECT_EQ(env.costs(st, 4.0), (std::vector<double>{0.0, 0.0}));
  // Axis-aligned, bumper-to-bumper gap of 1.0 m.
  st.vehicles[1] = {4.5 + 1.0, 0.0, 0.0, 5.0};
  EXPECT_NEAR(env.min_distances(st)[0], 1.0, 1e-12);
  EXPECT_EQ(env.costs(st, 2.0), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(env.costs(st, 0.5), (std::vector<double>{0.0, 0.0}));
}

TEST(Collision, Examples) {
  const OrientedBox a{{0, 0}, 0.0, 4.5, 2.0};
  EXPECT_TRUE(check_collision(a, a));
  EXPECT_FALSE(check_collision(a, {{100, 0}, 0.0, 4.5, 2.0}));
  EXPECT_FALSE(check_collision(a, {{4.6, 0}, 0.0, 4.5, 2.0}));
  EXPECT_TRUE(check_collision(a, {{4.4, 0}, 0.0, 4.5, 2.0}));
  EXPECT_TRUE(check_collision(a, {{4.5, 0}, 0.0, 4.5, 2.0}));  // touching
}

TEST(Collision, Symmetric) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-6.0, 6.0), h(-kPi, kPi);
  for (int k = 0; k < 2000; ++k) {
    const OrientedBox a{{u(rng), u(rng)}, h(rng), 4.5, 2.0};
    const OrientedBox b{{u(rng), u(rng)}, h(rng), 4.5, 2.0};
    EXPECT_EQ(check_collision(a, b), check_collision(b, a));
    EXPECT_NEAR(box_distance(a, b), box_distance(b, a), 1e-12);
    if (check_collision(a, b)) EXPECT_EQ(box_distance(a, b), 0.0);
  }
}

TEST(Driver, EquilibriumOnEmptyRoad) {
  TrafficEnv env(config_for("merge", 1));
  auto [st, obs] = env.reset(0);
  place_on_route(env, st, 0, 30.0, env.map().speed_limit);
  const Action a = rule_based_driver(env, st, 0);
  EXPECT_LT(std::abs(a.accel), 0.05);
  EXPECT_LT(std::abs(a.heading_change), 1e-3);
}

TEST(Driver, BrakesForStoppedLeader) {
  ScenarioConfig c = config_for("merge", 2);
  c.spawn = {{0, 20.0, 10.0}, {0, 60.0, 10.0}};
  c.goals = {{2, 30.0}, {2, 30.0}};
  TrafficEnv env(c);
  auto [st, obs] = env.reset(0);
  place_on_route(env, st, 0, 40.0, 10.0);
  place_on_route(env, st, 1, 40.0 + c.vehicle_dims.length + 5.0, 0.0);
  const LeaderInfo l = find_leader(env, st, 0);
  ASSERT_TRUE(l.present);
  EXPECT_NEAR(l.gap, 5.0, 1e-9);
  EXPECT_LT(rule_based_driver(env, st, 0).accel, 0.0);
}

TEST(Driver, SteersTowardLookahead) {
  TrafficEnv env(config_for("merge", 1));
  auto [st, obs] = env.reset(0);
  place_on_route(env, st, 0, 30.0, 8.0);
  st.vehicles[0].heading = wrap_heading(st.vehicles[0].heading - 10.0 * kPi / 180.0);
  EXPECT_GT(rule_based_driver(env, st, 0).heading_change, 0.0);
  st.vehicles[0].heading = wrap_heading(st.vehicles[0].heading + 20.0 * kPi / 180.0);
  EXPECT_LT(rule_based_driver(env, st, 0).heading_change, 0.0);
}

TEST(Demonstrations, DeterministicAndWithinBounds) {
  TrafficGame game(config_for("merge", 3));
  const auto a = generate_demonstrations(game, 1, 42);
  const auto b = generate_demonstrations(game, 1, 42);
  ASSERT_EQ(a.size(), b.size());
  const ActionBounds bounds = game.action_bounds();
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a[k].steps.size(), b[k].steps.size());
    for (std::size_t t = 0; t < a[k].steps.size(); ++t) {
      EXPECT_EQ(a[k].steps[t].observation, b[k].steps[t].observation);
      EXPECT_TRUE(a[k].steps[t].action == b[k].steps[t].action);
      EXPECT_TRUE(bounds.contains(a[k].steps[t].action));
    }
  }
  EXPECT_THROW(generate_demonstrations(game, 0, 1), Error);
}

TEST(Demonstrations, MergeCrashRateIsLow) {
  TrafficGame game(config_for("merge", 3));
  const auto demos = generate_demonstrations(game, 50, 7);
  std::set<int> crashed;
  for (const auto& t : demos)
    for (const auto& s : t.steps)
      if (s.collided) crashed.insert(t.episode);
  EXPECT_LE(crashed.size() / 50.0, 0.05);
}

}  // namespace
}  // namespace tcce
