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

#include "tcce/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tcce {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMagic = "tcce-checkpoint";

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream os;
  for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? " " : "") << shape[k];
  return os.str();
}

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    return (v >> 24) | ((v >> 8) & 0xFF00U) | ((v << 8) & 0xFF0000U) | (v << 24);
  return v;
}

std::string agent_file(int agent, const std::string& what) {
  return "agent" + std::to_string(agent) + "_" + what + ".ckpt";
}

std::vector<int> net_shape(const Mlp& net) {
  std::vector<int> s{net.spec().input_dim};
  s.insert(s.end(), net.spec().hidden.begin(), net.spec().hidden.end());
  s.push_back(net.spec().output_dim);
  return s;
}

}  // namespace

void save_blob(const fs::path& path, const ParamBlob& blob) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << kMagic << ' ' << kCheckpointVersion << '\n'
      << "kind " << blob.kind << '\n'
      << "shape " << shape_string(blob.shape) << '\n'
      << "seed " << blob.seed << '\n'
      << "iteration " << blob.iteration << '\n'
      << "params " << blob.params.size() << '\n';
  for (Eigen::Index k = 0; k < blob.params.size(); ++k) {
    std::uint32_t bits = 0;
    const float v = static_cast<float>(blob.params[k]);
    std::memcpy(&bits, &v, sizeof(bits));
    bits = to_little(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

ParamBlob load_blob(const fs::path& path, const std::string& kind, const std::vector<int>& shape) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing checkpoint " + path.string());
  const std::string where = " in " + path.string();
  std::string line;
  std::getline(in, line);
  std::istringstream head(line);
  std::string magic;
  int version = 0;
  head >> magic >> version;
  if (magic != kMagic) throw Error("not a checkpoint file" + where);
  if (version != kCheckpointVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version) + where);
  ParamBlob blob;
  std::getline(in, line);
  if (line.rfind("kind ", 0) != 0) throw Error("missing kind line" + where);
  blob.kind = line.substr(5);
  if (blob.kind != kind) throw Error("expected kind " + kind + " but found " + blob.kind + where);
  std::getline(in, line);
  if (line.rfind("shape", 0) != 0) throw Error("missing shape line" + where);
  std::istringstream ss(line.substr(5));
  for (int v; ss >> v;) blob.shape.push_back(v);
  if (blob.shape != shape)
    throw Error("expected shape [" + shape_string(shape) + "] but found [" + shape_string(blob.shape) + "]" + where);
  std::getline(in, line);
  if (line.rfind("seed ", 0) != 0) throw Error("missing seed line" + where);
  blob.seed = std::stoull(line.substr(5));
  std::getline(in, line);
  if (line.rfind("iteration ", 0) != 0) throw Error("missing iteration line" + where);
  blob.iteration = std::stoi(line.substr(10));
  std::getline(in, line);
  if (line.rfind("params ", 0) != 0) throw Error("missing params line" + where);
  const long long count = std::stoll(line.substr(7));
  if (count < 0) throw Error("negative parameter count" + where);
  blob.params.resize(count);
  for (long long k = 0; k < count; ++k) {
    std::uint32_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof(bits))) throw Error("truncated checkpoint" + where);
    bits = to_little(bits);
    float v = 0.0f;
    std::memcpy(&v, &bits, sizeof(v));
    blob.params[k] = v;
  }
  return blob;
}

void save_anchor(const fs::path& path, const LaplaceMixturePolicy& anchor, std::uint64_t seed) {
  std::vector<int> shape = net_shape(anchor.net());
  shape.push_back(anchor.components());
  save_blob(path, {"laplace_mixture", shape, anchor.net().params(), seed, 0});
}

LaplaceMixturePolicy load_anchor(const fs::path& path, int input_dim, const std::vector<int>& hidden,
                                 int components) {
  LaplaceMixturePolicy anchor(input_dim, hidden, components, 0);
  std::vector<int> shape = net_shape(anchor.net());
  shape.push_back(components);
  const ParamBlob blob = load_blob(path, "laplace_mixture", shape);
  if (blob.params.size() != static_cast<Eigen::Index>(anchor.net().num_params()))
    throw Error("parameter count mismatch in " + path.string());
  anchor.net().set_params(blob.params);
  return anchor;
}

void save_checkpoint(const fs::path& dir, const SolverState& state) {
  fs::create_directories(dir);
  {
    std::ofstream meta(dir / "solver.txt");
    meta << kMagic << ' ' << kCheckpointVersion << '\n'
         << "agents " << state.agents.size() << '\n'
         << "iteration " << state.iteration << '\n'
         << "seed " << state.seed << '\n';
    if (!meta) throw Error("cannot write " + (dir / "solver.txt").string());
  }
  std::ofstream lam(dir / "lagrange.csv");
  lam << "agent,lambda\n";
  lam.precision(17);
  for (std::size_t i = 0; i < state.agents.size(); ++i) {
    if (!state.controlled[i]) continue;
    const AgentModels& m = state.agents[i];
    const int a = static_cast<int>(i);
    const std::uint64_t seed = state.seed;
    const int it = state.iteration;
    save_blob(dir / agent_file(a, "policy"),
              {"gaussian_policy", net_shape(m.policy.net()), m.policy.params(), seed, it});
    Vec v(m.value.params().size() + 2);
    v << m.value.params(), m.value.out_mean(), m.value.out_std();
    save_blob(dir / agent_file(a, "value"), {"value_critic", net_shape(m.value.net()), v, seed, it});
    save_blob(dir / agent_file(a, "cost"), {"quantile_critic", net_shape(m.cost.net()), m.cost.params(), seed, it});
    lam << i << ',' << m.lagrange.lambda << '\n';
  }
  if (!lam) throw Error("cannot write " + (dir / "lagrange.csv").string());
  if (state.anchor) save_anchor(dir / "anchor.ckpt", *state.anchor, state.seed);
}

SolverState load_checkpoint(const fs::path& dir, const MultiAgentEnv& prototype, const Hyperparams& hyper) {
  std::ifstream meta(dir / "solver.txt");
  if (!meta) throw Error("missing checkpoint " + (dir / "solver.txt").string());
  std::string magic, key;
  int version = 0;
  std::size_t agents = 0;
  int iteration = 0;
  std::uint64_t seed = 0;
  meta >> magic >> version >> key >> agents >> key >> iteration >> key >> seed;
  if (!meta || magic != kMagic || version != kCheckpointVersion)
    throw Error("malformed checkpoint " + (dir / "solver.txt").string());
  if (agents != static_cast<std::size_t>(prototype.num_agents()))
    throw Error("checkpoint has " + std::to_string(agents) + " agents but the scenario has " +
                std::to_string(prototype.num_agents()));
  SolverState st = init_solver(prototype, hyper, nullptr, {}, seed);
  st.iteration = iteration;
  const int input_dim = static_cast<int>(prototype.layout()->size());
  if (fs::exists(dir / "anchor.ckpt"))
    st.anchor = std::make_shared<LaplaceMixturePolicy>(
        load_anchor(dir / "anchor.ckpt", input_dim, hyper.hidden, hyper.mixture_components));

  std::ifstream lam(dir / "lagrange.csv");
  if (!lam) throw Error("missing checkpoint " + (dir / "lagrange.csv").string());
  std::string line;
  std::getline(lam, line);
  std::vector<double> lambdas(agents, hyper.lambda_init);
  while (std::getline(lam, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const std::size_t a = std::stoul(line.substr(0, comma));
    if (a >= agents) throw Error("lagrange.csv names unknown agent " + std::to_string(a));
    lambdas[a] = std::stod(line.substr(comma + 1));
  }

  for (std::size_t i = 0; i < agents; ++i) {
    if (!st.controlled[i]) continue;
    AgentModels& m = st.agents[i];
    const int a = static_cast<int>(i);
    const ParamBlob p = load_blob(dir / agent_file(a, "policy"), "gaussian_policy", net_shape(m.policy.net()));
    if (p.params.size() != static_cast<Eigen::Index>(m.policy.num_params()))
      throw Error("parameter count mismatch in " + agent_file(a, "policy"));
    m.policy.set_params(p.params);
    m.prev = m.policy;
    const ParamBlob v = load_blob(dir / agent_file(a, "value"), "value_critic", net_shape(m.value.net()));
    const Eigen::Index nv = static_cast<Eigen::Index>(m.value.net().num_params());
    if (v.params.size() != nv + 2) throw Error("parameter count mismatch in " + agent_file(a, "value"));
    // Stats first: setting them rescales the output layer, which the
    // stored weights then overwrite.
    m.value.set_output_stats(v.params[nv], v.params[nv + 1]);
    m.value.set_params(v.params.head(nv));
    const ParamBlob c = load_blob(dir / agent_file(a, "cost"), "quantile_critic", net_shape(m.cost.net()));
    if (c.params.size() != static_cast<Eigen::Index>(m.cost.net().num_params()))
      throw Error("parameter count mismatch in " + agent_file(a, "cost"));
    m.cost.set_params(c.params);
    m.lagrange.lambda = lambdas[i];
  }
  return st;
}

}  // namespace tcce
