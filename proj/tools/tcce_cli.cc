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

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tcce/commands.h"
#include "tcce/config.h"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed (overrides config and TCCE_SEED)");
  cmd->add_option("--workers", c.workers, "rollout worker threads");
  cmd->add_option("--out", c.out, "output directory (overrides config and TCCE_OUT)");
}

// Precedence: flag, then environment variable, then config file.
tcce::RunConfig load(const Common& c) {
  tcce::RunConfig rc = c.config.empty() ? tcce::RunConfig{} : tcce::parse_config(c.config);
  if (const char* s = std::getenv("TCCE_SEED")) {
    const std::string v = s;
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
      throw tcce::Error("TCCE_SEED: must be an integer >= 0");
    rc.seed = std::stoull(v);
  }
  if (const char* o = std::getenv("TCCE_OUT")) rc.output_dir = o;
  if (c.seed) rc.seed = *c.seed;
  if (c.workers > 0) rc.workers = c.workers;
  if (!c.out.empty()) rc.output_dir = c.out;
  tcce::validate(rc);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained multi-agent equilibrium solver for traffic scenarios"};
  app.require_subcommand(1);

  Common train_opts;
  bool sweep = false;
  auto* train = app.add_subcommand("train", "train policies and write metrics and checkpoints");
  add_common(train, train_opts);
  train->add_flag("--sweep", sweep, "run the d_thresh x alpha grid");

  Common gap_opts;
  std::string method;
  std::string gap_ckpt;
  int gap_episodes = 0;
  auto* gap = app.add_subcommand("gap", "estimate per-agent equilibrium gaps");
  add_common(gap, gap_opts);
  gap->add_option("--method", method, "break or restrict")->check(CLI::IsMember({"break", "restrict"}));
  gap->add_option("--checkpoint", gap_ckpt, "checkpoint directory")->required();
  gap->add_option("--episodes", gap_episodes, "evaluation episodes");

  Common fid_opts;
  std::string fid_ckpt, demos;
  int fid_episodes = 0;
  auto* fid = app.add_subcommand("fidelity", "compare rollouts with demonstrations");
  add_common(fid, fid_opts);
  fid->add_option("--checkpoint", fid_ckpt, "checkpoint directory")->required();
  fid->add_option("--demos", demos, "demonstrations CSV")->required();
  fid->add_option("--episodes", fid_episodes, "evaluation episodes");

  Common exp_opts;
  std::string exp_ckpt;
  int exp_episodes = 1;
  auto* exp = app.add_subcommand("export", "write per-episode rollout CSVs");
  add_common(exp, exp_opts);
  exp->add_option("--checkpoint", exp_ckpt, "checkpoint directory")->required();
  exp->add_option("--episodes", exp_episodes, "episodes to export");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      tcce::RunConfig rc = load(train_opts);
      if (sweep) rc.sweep.enabled = true;
      return tcce::cmd_train(rc);
    }
    if (*gap) {
      tcce::RunConfig rc = load(gap_opts);
      if (gap_episodes > 0) rc.eval.episodes = gap_episodes;
      return tcce::cmd_gap(rc, gap_ckpt, method.empty() ? rc.eval.method : method);
    }
    if (*fid) {
      tcce::RunConfig rc = load(fid_opts);
      if (fid_episodes > 0) rc.eval.episodes = fid_episodes;
      return tcce::cmd_fidelity(rc, fid_ckpt, demos);
    }
    if (*exp) return tcce::cmd_rollout_export(load(exp_opts), exp_ckpt, exp_episodes);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
