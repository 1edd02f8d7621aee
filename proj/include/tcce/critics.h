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

#ifndef TCCE_CRITICS_H_
#define TCCE_CRITICS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "tcce/mlp.h"

namespace tcce {

// Scalar state-value network. Outputs are kept in target units through an
// adaptive affine output normalization that leaves predictions unchanged
// whenever the statistics move.
class ValueCritic {
 public:
  ValueCritic() = default;
  ValueCritic(int input_dim, const std::vector<int>& hidden, std::uint64_t seed);

  double predict(std::span<const double> obs) const;
  Vec predict(const Mat& obs) const;

  // Moves the output statistics toward the targets' mean and std.
  void update_stats(const Vec& targets, double rate = 0.1);
  // Mean squared error ||V(o) - R||^2 in target units.
  double loss(const Mat& obs, const Vec& returns) const;
  // Gradient of the normalized squared error with respect to params().
  Vec grad(const Mat& obs, const Vec& returns) const;

  const Vec& params() const { return net_.params(); }
  void set_params(const Vec& p) { net_.set_params(p); }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  double out_mean() const { return mu_; }
  double out_std() const { return sigma_; }
  void set_output_stats(double mu, double sigma);

 private:
  Mlp net_;
  double mu_ = 0.0;
  double sigma_ = 1.0;
};

// Asymmetric Huber loss |tau - 1{u<0}| * L_kappa(u), with
// L_kappa(u) = u^2/2 for |u| <= kappa and kappa (|u| - kappa/2) otherwise.
double quantile_huber(double u, double tau, double kappa);
// Derivative of quantile_huber with respect to u.
double quantile_huber_grad(double u, double tau, double kappa);

// N quantiles of the discounted cumulative cost at fractions (2q-1)/(2N).
class QuantileCritic {
 public:
  QuantileCritic() = default;
  QuantileCritic(int input_dim, const std::vector<int>& hidden, int n_quantiles, std::uint64_t seed);

  int n_quantiles() const { return static_cast<int>(taus_.size()); }
  const std::vector<double>& taus() const { return taus_; }

  std::vector<double> predict(std::span<const double> obs) const;
  Mat predict(const Mat& obs) const;  // N x n

  // Mean over samples and quantile pairs (q, q') of
  // quantile_huber(targets(q', j) - Z_q(o_j), tau_q, kappa).
  double loss(const Mat& obs, const Mat& targets, double kappa, Vec* grad = nullptr) const;

  const Vec& params() const { return net_.params(); }
  void set_params(const Vec& p) { net_.set_params(p); }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

 private:
  Mlp net_;
  std::vector<double> taus_;
};

}  // namespace tcce

#endif  // TCCE_CRITICS_H_
