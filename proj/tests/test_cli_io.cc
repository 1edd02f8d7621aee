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
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tcce/checkpoint.h"
#include "tcce/commands.h"
#include "tcce/config.h"
#include "tcce/fidelity.h"
#include "tcce/traffic_game.h"
#include "tcce/traffic_env.h"

namespace tcce {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("tcce_cli_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig tiny_config(const fs::path& out, std::uint64_t seed = 0) {
  RunConfig c = parse_config_text(R"({
    "scenario": {"map_kind": "merge", "n_agents": 2, "horizon": 30},
    "hyper": {"hidden": [16], "n_quantiles": 8, "rollout_rounds": 2, "update_rounds": 1,
              "iterations": 2, "demo_episodes": 3, "anchor_epochs": 2, "minibatch": 64},
    "eval": {"episodes": 4, "break_budget": 1, "opponent_samples": 2}
  })");
  c.output_dir = out.string();
  c.seed = seed;
  return c;
}

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Config, MinimalFileFillsDefaults) {
  const RunConfig c = parse_config_text("{}");
  EXPECT_TRUE(c == RunConfig{});
  const RunConfig d = parse_config_text(R"({"scenario": {"map_kind": "roundabout"}})");
  EXPECT_EQ(d.scenario.map_kind, "roundabout");
  EXPECT_TRUE(d.hyper == Hyperparams{});
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(error_of(R"({"hyper": {"gamma": -0.5}})").find("gamma"), std::string::npos);
  EXPECT_NE(error_of(R"({"hyper": {"gamm": 0.5}})").find("gamm"), std::string::npos);
  EXPECT_NE(error_of(R"({"scenario": {"map_kind": "highway"}})").find("map_kind"), std::string::npos);
  EXPECT_NE(error_of(R"({"seed": -3})").find("seed"), std::string::npos);
  EXPECT_NE(error_of(R"({"workers": 0})").find("workers"), std::string::npos);
  EXPECT_NE(error_of(R"({"hyper": {"alpha": "high"}})").find("alpha"), std::string::npos);
  EXPECT_NE(error_of("{not json").find("JSON"), std::string::npos);
  EXPECT_THROW(parse_config("/nonexistent/config.json"), Error);
}

TEST(Config, RoundTrip) {
  RunConfig c;
  c.scenario.map_kind = "t_junction";
  c.scenario.n_agents = 4;
  c.scenario.spawn = {{0, 10.0, 5.0}, {1, 12.0, 5.0}, {2, 8.0, 4.0}, {3, 3.0, 6.0}};
  c.hyper.eta2 = kInf;
  c.hyper.hidden = {7, 9};
  c.hyper.gamma = 0.123456789012345;
  c.seed = 18446744073709551615ULL;
  c.sweep.enabled = true;
  c.sweep.alpha = {0.3};
  c.eval.method = "restrict";
  c.ablate_bonus = true;
  const std::string text = serialize_config(c);
  EXPECT_TRUE(parse_config_text(text) == c);
  EXPECT_EQ(serialize_config(parse_config_text(text)), text);
  EXPECT_NE(text.find("\"inf\""), std::string::npos);
}

TEST(Config, InfinityAcceptedForEta2) {
  EXPECT_TRUE(std::isinf(parse_config_text(R"({"hyper": {"eta2": "inf"}})").hyper.eta2));
}

TEST(Config, ResolveAppliesAblations) {
  RunConfig c;
  c.ablate_mmd = true;
  c.ablate_bonus = true;
  c.hyper.d_thresh = 6.0;
  const RunConfig r = resolve(c);
  EXPECT_EQ(r.hyper.eta1, 0.0);
  EXPECT_TRUE(std::isinf(r.hyper.eta2));
  EXPECT_EQ(r.hyper.bonus_scale, 0.0);
  EXPECT_EQ(r.scenario.d_thresh, 6.0);
}

class TrainedRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch("trained"));
    ASSERT_EQ(cmd_train(tiny_config(*dir_, 4)), 0);
  }
  static void TearDownTestSuite() { delete dir_; }
  static fs::path* dir_;
};
fs::path* TrainedRun::dir_ = nullptr;

TEST_F(TrainedRun, WritesAllDeclaredFiles) {
  for (const char* f : {"resolved_config.json", "demos.csv", "anchor.ckpt", "metrics.csv", "lambda.csv",
                        "checkpoint/solver.txt", "checkpoint/lagrange.csv", "checkpoint/agent0_policy.ckpt",
                        "checkpoint/agent1_value.ckpt", "checkpoint/agent1_cost.ckpt", "checkpoint/anchor.ckpt"})
    EXPECT_TRUE(fs::exists(*dir_ / f)) << f;
  const auto metrics = read_csv(*dir_ / "metrics.csv");
  ASSERT_EQ(metrics.size(), 1u + 2u * 2u);
  EXPECT_EQ(metrics[0], (std::vector<std::string>{"iteration", "agent_id", "mean_reward", "mean_disc_cost", "kl_anchor",
                                                  "entropy", "lambda", "cce_gap", "kl_prev", "crash_rate"}));
  const auto lambda = read_csv(*dir_ / "lambda.csv");
  ASSERT_EQ(lambda.size(), 3u);
  EXPECT_EQ(lambda[0], (std::vector<std::string>{"iteration", "lambda_0", "lambda_1"}));
}

TEST_F(TrainedRun, AblationOverridesAppearInResolvedConfig) {
  const fs::path d = scratch("ablate");
  RunConfig c = tiny_config(d);
  c.hyper.iterations = 1;
  c.ablate_mmd = true;
  c.ablate_bonus = true;
  ASSERT_EQ(cmd_train(c), 0);
  const RunConfig r = parse_config(d / "resolved_config.json");
  EXPECT_EQ(r.hyper.eta1, 0.0);
  EXPECT_TRUE(std::isinf(r.hyper.eta2));
  EXPECT_EQ(r.hyper.bonus_scale, 0.0);
}

TEST_F(TrainedRun, CheckpointRoundTrip) {
  const RunConfig c = resolve(tiny_config(*dir_, 4));
  const auto env = make_env(c.scenario);
  const TrainOutcome again = train_run(c, scratch("roundtrip"));
  const SolverState loaded = load_checkpoint(*dir_ / "checkpoint", *env, c.hyper);
  EXPECT_EQ(loaded.iteration, again.state.iteration);
  for (int i = 0; i < 2; ++i) {
    const auto& a = again.state.agents[i];
    const auto& b = loaded.agents[i];
    EXPECT_EQ(a.lagrange.lambda, b.lagrange.lambda);
    EXPECT_LE((a.policy.params() - b.policy.params()).lpNorm<Eigen::Infinity>(), 1e-6);
    const std::vector<double> obs(env->layout()->size(), 0.1);
    EXPECT_NEAR(a.value.predict(obs), b.value.predict(obs), 1e-4);
    const auto qa = a.cost.predict(obs), qb = b.cost.predict(obs);
    for (std::size_t q = 0; q < qa.size(); ++q) EXPECT_NEAR(qa[q], qb[q], 1e-4);
  }
  EXPECT_THROW(load_checkpoint(scratch("missing"), *env, c.hyper), Error);
  Hyperparams wrong = c.hyper;
  wrong.hidden = {8};
  EXPECT_THROW(load_checkpoint(*dir_ / "checkpoint", *env, wrong), Error);
}

TEST_F(TrainedRun, DeterministicMetrics) {
  const fs::path d = scratch("repeat");
  ASSERT_EQ(cmd_train(tiny_config(d, 4)), 0);
  EXPECT_EQ(read_file(d / "metrics.csv"), read_file(*dir_ / "metrics.csv"));
  EXPECT_EQ(read_file(d / "lambda.csv"), read_file(*dir_ / "lambda.csv"));
}

TEST_F(TrainedRun, GapRowsPerAgent) {
  for (const std::string method : {"break", "restrict"}) {
    const fs::path d = scratch("gap_" + method);
    ASSERT_EQ(cmd_gap(tiny_config(d, 4), *dir_ / "checkpoint", method), 0);
    const auto rows = read_csv(d / "gaps.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"scenario", "agent", "method", "gap", "se", "episodes", "seed",
                                                 "value_deviation", "value_policy"}));
    EXPECT_EQ(rows[1][2], method);
    EXPECT_EQ(rows[2][5], "4");
  }
  EXPECT_NE(cmd_gap(tiny_config(scratch("gap_missing")), scratch("nothing"), "break"), 0);
  EXPECT_NE(cmd_gap(tiny_config(scratch("gap_bad")), *dir_ / "checkpoint", "oracle"), 0);
}

TEST_F(TrainedRun, FidelityCsvShape) {
  const fs::path d = scratch("fidelity");
  ASSERT_EQ(cmd_fidelity(tiny_config(d, 4), *dir_ / "checkpoint", *dir_ / "demos.csv"), 0);
  const auto rows = read_csv(d / "fidelity.csv");
  ASSERT_EQ(rows.size(), 1u + 7u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"feature", "metric", "value", "n_samples", "bins"}));
  std::map<std::string, int> features;
  for (std::size_t k = 1; k < rows.size(); ++k) features[rows[k][0]]++;
  EXPECT_EQ(features["speed"], 3);
  EXPECT_EQ(features["min_distance"], 3);
  EXPECT_EQ(features["episode"], 1);
  EXPECT_NE(cmd_fidelity(tiny_config(d), *dir_ / "checkpoint", d / "absent.csv"), 0);
}

TEST_F(TrainedRun, DemosAgainstThemselvesHaveZeroDivergence) {
  const auto demos = load_demos(*dir_ / "demos.csv");
  for (Feature f : {Feature::kSpeed, Feature::kMinDistance}) {
    const auto s = feature_samples(demos, f);
    for (Metric m : {Metric::kKl, Metric::kHellinger, Metric::kWasserstein1}) {
      const GateResult r = fidelity_gate(s, s, default_edges(f), m, 1e-6);
      EXPECT_TRUE(r.pass);
      EXPECT_LE(r.value, 1e-6);
      if (m == Metric::kWasserstein1) EXPECT_EQ(r.value, 0.0);
    }
  }
}

TEST_F(TrainedRun, DemoCsvRoundTrip) {
  const RunConfig c = resolve(tiny_config(*dir_, 4));
  const auto env = make_env(c.scenario);
  const auto original = generate_demonstrations(*env, c.hyper.demo_episodes, mix_seed(c.seed, 1));
  const auto loaded = load_demos(*dir_ / "demos.csv");
  ASSERT_EQ(original.size(), loaded.size());
  for (std::size_t k = 0; k < original.size(); ++k) {
    ASSERT_EQ(original[k].steps.size(), loaded[k].steps.size());
    for (std::size_t t = 0; t < original[k].steps.size(); ++t) {
      EXPECT_EQ(original[k].steps[t].observation, loaded[k].steps[t].observation);
      EXPECT_EQ(original[k].steps[t].action, loaded[k].steps[t].action);
      EXPECT_EQ(original[k].steps[t].speed, loaded[k].steps[t].speed);
    }
  }
}

TEST_F(TrainedRun, ExportSchemaBoundsAndReplay) {
  const fs::path d = scratch("export");
  const RunConfig c = resolve(tiny_config(d, 4));
  ASSERT_EQ(cmd_rollout_export(c, *dir_ / "checkpoint", 2), 0);
  const auto index = read_csv(d / "export" / "episodes.csv");
  ASSERT_EQ(index.size(), 3u);
  int files = 0;
  for (const auto& e : fs::directory_iterator(d / "export"))
    if (e.path().filename().string().rfind("episode_", 0) == 0) ++files;
  EXPECT_EQ(files, 2);

  const TrafficEnv env(c.scenario);
  const auto [lo, hi] = env.map().bounds();
  for (std::size_t ep = 1; ep < index.size(); ++ep) {
    const auto rows = read_csv(d / "export" / index[ep][2]);
    ASSERT_GT(rows.size(), 1u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "agent_id", "x", "y", "heading", "speed", "accel",
                                                 "heading_change", "reward", "cost", "collided"}));
    // Rows grouped by step: state before the step and the joint action.
    std::map<int, std::map<int, std::vector<double>>> by_t;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      std::vector<double> v;
      for (std::size_t k = 2; k < 8; ++k) v.push_back(std::stod(rows[r][k]));
      by_t[std::stoi(rows[r][0])][std::stoi(rows[r][1])] = v;
      EXPECT_GE(v[0], lo.x - 50.0);
      EXPECT_LE(v[0], hi.x + 50.0);
      EXPECT_GE(v[1], lo.y - 50.0);
      EXPECT_LE(v[1], hi.y + 50.0);
    }
    auto [state, obs] = env.reset(std::stoull(index[ep][1]));
    double worst = 0.0;
    for (const auto& [t, agents] : by_t) {
      std::vector<Action> joint(env.num_agents());
      for (const auto& [i, v] : agents) {
        const VehicleState& s = state.vehicles[i];
        worst = std::max({worst, std::abs(s.x - v[0]), std::abs(s.y - v[1]), std::abs(s.heading - v[2]),
                          std::abs(s.speed - v[3])});
        joint[i] = {v[4], v[5]};
      }
      state = env.step(state, joint).state;
    }
    EXPECT_LE(worst, 1e-6);
  }
  EXPECT_NE(cmd_rollout_export(c, scratch("no_ckpt"), 1), 0);
}

TEST(Checkpoint, BlobValidation) {
  const fs::path d = scratch("blob");
  fs::create_directories(d);
  ParamBlob b{"policy", {3, 4, 2}, Vec::LinSpaced(5, -1.0, 1.0), 7, 3};
  save_blob(d / "b.ckpt", b);
  const ParamBlob r = load_blob(d / "b.ckpt", "policy", {3, 4, 2});
  EXPECT_EQ(r.seed, 7u);
  EXPECT_EQ(r.iteration, 3);
  EXPECT_EQ(r.params, b.params);
  EXPECT_THROW(load_blob(d / "b.ckpt", "value", {3, 4, 2}), Error);
  EXPECT_THROW(load_blob(d / "b.ckpt", "policy", {3, 5, 2}), Error);
  const std::string text = read_file(d / "b.ckpt");
  std::ofstream(d / "short.ckpt", std::ios::binary) << text.substr(0, text.size() - 3);
  EXPECT_THROW(load_blob(d / "short.ckpt", "policy", {3, 4, 2}), Error);
}

}  // namespace
}  // namespace tcce
