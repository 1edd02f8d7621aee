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

#include "tcce/critics.h"

#include <algorithm>
#include <cmath>

namespace tcce {

namespace {

constexpr double kMinStd = 1e-2;

Vec column(std::span<const double> obs) { return Eigen::Map<const Vec>(obs.data(), static_cast<Eigen::Index>(obs.size())); }

}  // namespace

ValueCritic::ValueCritic(int input_dim, const std::vector<int>& hidden, std::uint64_t seed)
    : net_(NetSpec{input_dim, hidden, 1, 1.0}, seed) {}

double ValueCritic::predict(std::span<const double> obs) const { return sigma_ * net_.forward(column(obs))[0] + mu_; }

Vec ValueCritic::predict(const Mat& obs) const {
  const Mat out = net_.forward(obs);
  return (out.row(0).transpose().array() * sigma_ + mu_).matrix();
}

void ValueCritic::set_output_stats(double mu, double sigma) {
  sigma = std::max(sigma, kMinStd);
  // Preserve sigma * f + mu: f' = (sigma * f + mu - mu') / sigma'.
  auto w = net_.output_weights();
  auto b = net_.output_bias();
  w *= sigma_ / sigma;
  b = ((b.array() * sigma_ + mu_ - mu) / sigma).matrix();
  mu_ = mu;
  sigma_ = sigma;
}

void ValueCritic::update_stats(const Vec& targets, double rate) {
  if (targets.size() == 0) return;
  const double m = targets.mean();
  const double second = targets.array().square().mean();
  const double old_second = sigma_ * sigma_ + mu_ * mu_;
  const double new_mu = (1.0 - rate) * mu_ + rate * m;
  const double new_second = (1.0 - rate) * old_second + rate * second;
  set_output_stats(new_mu, std::sqrt(std::max(new_second - new_mu * new_mu, kMinStd * kMinStd)));
}

double ValueCritic::loss(const Mat& obs, const Vec& returns) const {
  return (predict(obs) - returns).squaredNorm() / static_cast<double>(returns.size());
}

Vec ValueCritic::grad(const Mat& obs, const Vec& returns) const {
  Mlp::Cache cache;
  const Mat out = net_.forward(obs, &cache);
  const Eigen::Index n = obs.cols();
  Mat g(1, n);
  for (Eigen::Index j = 0; j < n; ++j) g(0, j) = 2.0 * (out(0, j) - (returns[j] - mu_) / sigma_) / static_cast<double>(n);
  return net_.backward(cache, g);
}

double quantile_huber(double u, double tau, double kappa) {
  const double w = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
  const double a = std::abs(u);
  const double h = a <= kappa ? 0.5 * u * u : kappa * (a - 0.5 * kappa);
  return w * h;
}

double quantile_huber_grad(double u, double tau, double kappa) {
  const double w = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
  const double dh = std::abs(u) <= kappa ? u : (u > 0.0 ? kappa : -kappa);
  return w * dh;
}

QuantileCritic::QuantileCritic(int input_dim, const std::vector<int>& hidden, int n_quantiles, std::uint64_t seed)
    : net_(NetSpec{input_dim, hidden, n_quantiles, 1.0}, seed) {
  if (n_quantiles < 1) throw Error("quantile critic: n_quantiles must be >= 1");
  for (int q = 1; q <= n_quantiles; ++q) taus_.push_back((2.0 * q - 1.0) / (2.0 * n_quantiles));
}

std::vector<double> QuantileCritic::predict(std::span<const double> obs) const {
  const Vec out = net_.forward(column(obs));
  return {out.data(), out.data() + out.size()};
}

Mat QuantileCritic::predict(const Mat& obs) const { return net_.forward(obs); }

double QuantileCritic::loss(const Mat& obs, const Mat& targets, double kappa, Vec* grad) const {
  const int n_q = n_quantiles();
  if (targets.rows() != n_q || targets.cols() != obs.cols()) throw Error("quantile critic: target shape mismatch");
  Mlp::Cache cache;
  const Mat z = net_.forward(obs, grad ? &cache : nullptr);
  const Eigen::Index n = obs.cols();
  const double norm = static_cast<double>(n) * n_q * n_q;
  Mat g = Mat::Zero(n_q, n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int q = 0; q < n_q; ++q) {
      for (int qp = 0; qp < n_q; ++qp) {
        const double u = targets(qp, j) - z(q, j);
        total += quantile_huber(u, taus_[q], kappa);
        if (grad) g(q, j) -= quantile_huber_grad(u, taus_[q], kappa) / norm;
      }
    }
  }
  if (grad) *grad = net_.backward(cache, g);
  return total / norm;
}

}  // namespace tcce
