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

#ifndef TCCE_POLICY_H_
#define TCCE_POLICY_H_

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tcce/core.h"
#include "tcce/mlp.h"

namespace tcce {

// Action in normalized coordinates u in [-1, 1]^2 (see ActionBounds).
using NormAction = std::array<double, 2>;
inline constexpr int kActionDim = 2;

struct GaussianDist {
  NormAction mean{};
  NormAction log_std{};

  double log_prob(const NormAction& u) const;
  NormAction sample(std::mt19937_64& rng) const;
  double entropy() const;
};

struct LaplaceMixtureDist {
  std::vector<double> weights;
  std::vector<NormAction> loc;
  std::vector<NormAction> scale;

  double log_prob(const NormAction& u) const;
  NormAction sample(std::mt19937_64& rng) const;
  // Monte Carlo estimate from n seeded samples.
  double entropy(std::mt19937_64& rng, int n = 64) const;
  // Component indices sorted by decreasing weight (ties: lower index first).
  std::vector<int> ranked_components() const;
};

// Log-density of the mixture at u, evaluated with log-sum-exp.
double laplace_mixture_logprob(const LaplaceMixtureDist& dist, const NormAction& u);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual NormAction sample(std::span<const double> obs, std::mt19937_64& rng) const = 0;
  virtual double log_prob(std::span<const double> obs, const NormAction& u) const = 0;
  virtual double entropy(std::span<const double> obs, std::mt19937_64& rng) const = 0;
  virtual int input_dim() const = 0;
};

// Diagonal Gaussian head with a tanh-squashed state-dependent mean and a
// state-independent log standard deviation.
class GaussianPolicy : public Policy {
 public:
  static constexpr double kMinLogStd = -4.0;
  static constexpr double kMaxLogStd = 1.0;

  GaussianPolicy() = default;
  GaussianPolicy(int input_dim, const std::vector<int>& hidden, double init_log_std, std::uint64_t seed);

  GaussianDist dist(std::span<const double> obs) const;
  NormAction sample(std::span<const double> obs, std::mt19937_64& rng) const override;
  double log_prob(std::span<const double> obs, const NormAction& u) const override;
  double entropy(std::span<const double> obs, std::mt19937_64& rng) const override;
  double entropy() const;
  int input_dim() const override { return net_.spec().input_dim; }

  // Flat parameters: network, then log_std.
  std::size_t num_params() const { return net_.num_params() + kActionDim; }
  Vec params() const;
  void set_params(const Vec& p);
  // Clamps log_std back into its range after an unconstrained update.
  void project();

  struct Batch {
    Mlp::Cache cache;
    Mat mean;  // kActionDim x n
  };
  // Log-densities of `actions` (columns) under the policy at `obs` (columns).
  Vec log_prob_batch(const Mat& obs, const Mat& actions, Batch* batch = nullptr) const;
  // Gradient of sum_j dlogp_j * log pi(a_j|o_j) + d_entropy * H with respect
  // to params().
  Vec grad(const Batch& batch, const Mat& actions, const Vec& dlogp, double d_entropy) const;

  const Mlp& net() const { return net_; }
  const NormAction& log_std() const { return log_std_; }
  void set_log_std(const NormAction& s) { log_std_ = s; }

 private:
  Mlp net_;
  NormAction log_std_{};
};

class LaplaceMixturePolicy : public Policy {
 public:
  static constexpr double kMinScale = 1e-4;

  LaplaceMixturePolicy() = default;
  LaplaceMixturePolicy(int input_dim, const std::vector<int>& hidden, int components, std::uint64_t seed);

  int components() const { return components_; }
  LaplaceMixtureDist dist(std::span<const double> obs) const;
  LaplaceMixtureDist dist_from_output(const Vec& out) const;
  NormAction sample(std::span<const double> obs, std::mt19937_64& rng) const override;
  double log_prob(std::span<const double> obs, const NormAction& u) const override;
  double entropy(std::span<const double> obs, std::mt19937_64& rng) const override;
  int input_dim() const override { return net_.spec().input_dim; }

  // Mean over columns of -log p(a|o) - log w_best(o), where best is the
  // component whose location is nearest (L1) to the action. Fills the
  // parameter gradient when requested.
  double loss(const Mat& obs, const Mat& actions, Vec* grad = nullptr) const;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

 private:
  Mlp net_;
  int components_ = 1;
};

// Mean over observations of the Monte Carlo estimate of KL(pi || ref).
// Writes the standard error of the per-sample terms when `se` is non-null.
double kl_mc(const Policy& pi, const Policy& ref, const std::vector<std::vector<double>>& obs_batch, int n_samples,
             std::mt19937_64& rng, double* se = nullptr);

struct AnchorOptions {
  int epochs = 30;
  int minibatch = 256;
  double lr = 1e-3;
  double holdout_fraction = 0.1;
};

struct AnchorResult {
  LaplaceMixturePolicy policy;
  double final_loss = 0.0;
  std::vector<double> heldout_log_likelihood;  // per epoch, before the first epoch at index 0
};

// Fits the Laplace-mixture anchor to demonstration actions (converted to
// normalized coordinates with `bounds`). Throws on divergence.
AnchorResult train_anchor(const std::vector<Trajectory>& demos, const ActionBounds& bounds,
                          const std::vector<int>& hidden, int components, const AnchorOptions& options,
                          std::uint64_t seed);

// Fits the Gaussian mean to demonstration actions by least squares, then
// optionally sets log_std to the maximum-likelihood residual spread. Returns
// the final mean squared error.
double behavior_clone(GaussianPolicy& policy, const std::vector<Trajectory>& demos, const ActionBounds& bounds,
                      int epochs, int minibatch, double lr, std::uint64_t seed, bool fit_log_std = true);

}  // namespace tcce

#endif  // TCCE_POLICY_H_
