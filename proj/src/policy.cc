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

#include "tcce/policy.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tcce {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Vec column(std::span<const double> obs) { return Eigen::Map<const Vec>(obs.data(), static_cast<Eigen::Index>(obs.size())); }

struct Pairs {
  std::vector<std::vector<double>> obs;
  std::vector<std::vector<double>> act;
};

void append_pairs(const Trajectory& t, const ActionBounds& bounds, Pairs& out) {
  for (const TrajectoryStep& s : t.steps) {
    const auto u = bounds.to_normalized(s.action);
    out.obs.push_back(s.observation);
    out.act.push_back({u[0], u[1]});
  }
}

Mat gather(const Mat& m, std::span<const int> idx) {
  Mat out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

}  // namespace

double GaussianDist::log_prob(const NormAction& u) const {
  double lp = 0.0;
  for (int d = 0; d < kActionDim; ++d) {
    const double z = (u[d] - mean[d]) * std::exp(-log_std[d]);
    lp += -0.5 * z * z - log_std[d] - kHalfLog2Pi;
  }
  return lp;
}

NormAction GaussianDist::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> n(0.0, 1.0);
  NormAction u;
  for (int d = 0; d < kActionDim; ++d) u[d] = mean[d] + std::exp(log_std[d]) * n(rng);
  return u;
}

double GaussianDist::entropy() const {
  double h = 0.0;
  for (int d = 0; d < kActionDim; ++d) h += 0.5 + kHalfLog2Pi + log_std[d];
  return h;
}

double laplace_mixture_logprob(const LaplaceMixtureDist& dist, const NormAction& u) {
  const std::size_t k = dist.weights.size();
  if (k == 0 || dist.loc.size() != k || dist.scale.size() != k) throw Error("laplace mixture: malformed components");
  std::vector<double> terms(k);
  for (std::size_t c = 0; c < k; ++c) {
    double t = std::log(dist.weights[c]);
    for (int d = 0; d < kActionDim; ++d)
      t += -std::log(2.0 * dist.scale[c][d]) - std::abs(u[d] - dist.loc[c][d]) / dist.scale[c][d];
    terms[c] = t;
  }
  return log_sum_exp(terms);
}

double LaplaceMixtureDist::log_prob(const NormAction& u) const { return laplace_mixture_logprob(*this, u); }

NormAction LaplaceMixtureDist::sample(std::mt19937_64& rng) const {
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  const int c = pick(rng);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  NormAction u;
  for (int d = 0; d < kActionDim; ++d) {
    const double p = unif(rng);
    const double sgn = p < 0.0 ? -1.0 : 1.0;
    u[d] = loc[c][d] - scale[c][d] * sgn * std::log(1.0 - 2.0 * std::abs(p));
  }
  return u;
}

double LaplaceMixtureDist::entropy(std::mt19937_64& rng, int n) const {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s -= log_prob(sample(rng));
  return s / n;
}

std::vector<int> LaplaceMixtureDist::ranked_components() const {
  std::vector<int> idx(weights.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return weights[a] > weights[b]; });
  return idx;
}

GaussianPolicy::GaussianPolicy(int input_dim, const std::vector<int>& hidden, double init_log_std,
                               std::uint64_t seed)
    : net_(NetSpec{input_dim, hidden, kActionDim, 0.01}, seed) {
  log_std_ = {init_log_std, init_log_std};
  project();
}

GaussianDist GaussianPolicy::dist(std::span<const double> obs) const {
  const Vec out = net_.forward(column(obs));
  GaussianDist g;
  for (int d = 0; d < kActionDim; ++d) g.mean[d] = std::tanh(out[d]);
  g.log_std = log_std_;
  return g;
}

NormAction GaussianPolicy::sample(std::span<const double> obs, std::mt19937_64& rng) const {
  return dist(obs).sample(rng);
}

double GaussianPolicy::log_prob(std::span<const double> obs, const NormAction& u) const {
  return dist(obs).log_prob(u);
}

double GaussianPolicy::entropy(std::span<const double>, std::mt19937_64&) const { return entropy(); }

double GaussianPolicy::entropy() const {
  GaussianDist g;
  g.log_std = log_std_;
  return g.entropy();
}

Vec GaussianPolicy::params() const {
  Vec p(static_cast<Eigen::Index>(num_params()));
  p.head(net_.params().size()) = net_.params();
  for (int d = 0; d < kActionDim; ++d) p[net_.params().size() + d] = log_std_[d];
  return p;
}

void GaussianPolicy::set_params(const Vec& p) {
  if (p.size() != static_cast<Eigen::Index>(num_params())) throw Error("gaussian policy: wrong parameter count");
  net_.set_params(p.head(net_.params().size()));
  for (int d = 0; d < kActionDim; ++d) log_std_[d] = p[net_.params().size() + d];
  project();
}

void GaussianPolicy::project() {
  for (double& s : log_std_) s = std::clamp(s, kMinLogStd, kMaxLogStd);
}

Vec GaussianPolicy::log_prob_batch(const Mat& obs, const Mat& actions, Batch* batch) const {
  Batch local;
  Batch& b = batch ? *batch : local;
  b.mean = net_.forward(obs, &b.cache).array().tanh().matrix();
  Vec lp = Vec::Zero(obs.cols());
  for (int d = 0; d < kActionDim; ++d) {
    const double inv = std::exp(-log_std_[d]);
    const Eigen::ArrayXd z = (actions.row(d) - b.mean.row(d)).transpose().array() * inv;
    lp.array() += -0.5 * z.square() - log_std_[d] - kHalfLog2Pi;
  }
  return lp;
}

Vec GaussianPolicy::grad(const Batch& batch, const Mat& actions, const Vec& dlogp, double d_entropy) const {
  const Eigen::Index n = actions.cols();
  Mat g_out(kActionDim, n);
  Vec g(static_cast<Eigen::Index>(num_params()));
  for (int d = 0; d < kActionDim; ++d) {
    const double inv = std::exp(-log_std_[d]);
    const Eigen::ArrayXd z = (actions.row(d) - batch.mean.row(d)).transpose().array() * inv;
    const Eigen::ArrayXd m = batch.mean.row(d).transpose().array();
    g_out.row(d) = (dlogp.array() * z * inv * (1.0 - m.square())).matrix().transpose();
    g[net_.params().size() + d] = (dlogp.array() * (z.square() - 1.0)).sum() + d_entropy;
  }
  g.head(net_.params().size()) = net_.backward(batch.cache, g_out);
  return g;
}

LaplaceMixturePolicy::LaplaceMixturePolicy(int input_dim, const std::vector<int>& hidden, int components,
                                           std::uint64_t seed)
    : net_(NetSpec{input_dim, hidden, components * (1 + 2 * kActionDim), 1.0}, seed), components_(components) {
  if (components < 1) throw Error("laplace mixture: components must be >= 1");
}

LaplaceMixtureDist LaplaceMixturePolicy::dist_from_output(const Vec& out) const {
  const int k = components_;
  LaplaceMixtureDist dist;
  dist.weights.resize(k);
  dist.loc.resize(k);
  dist.scale.resize(k);
  const double m = out.head(k).maxCoeff();
  double z = 0.0;
  for (int c = 0; c < k; ++c) z += std::exp(out[c] - m);
  for (int c = 0; c < k; ++c) {
    dist.weights[c] = std::exp(out[c] - m) / z;
    for (int d = 0; d < kActionDim; ++d) {
      dist.loc[c][d] = std::tanh(out[k + c * kActionDim + d]);
      dist.scale[c][d] = softplus(out[3 * k + c * kActionDim + d]) + kMinScale;
    }
  }
  return dist;
}

LaplaceMixtureDist LaplaceMixturePolicy::dist(std::span<const double> obs) const {
  return dist_from_output(net_.forward(column(obs)));
}

NormAction LaplaceMixturePolicy::sample(std::span<const double> obs, std::mt19937_64& rng) const {
  return dist(obs).sample(rng);
}

double LaplaceMixturePolicy::log_prob(std::span<const double> obs, const NormAction& u) const {
  return dist(obs).log_prob(u);
}

double LaplaceMixturePolicy::entropy(std::span<const double> obs, std::mt19937_64& rng) const {
  return dist(obs).entropy(rng, 64);
}

double LaplaceMixturePolicy::loss(const Mat& obs, const Mat& actions, Vec* grad) const {
  const int k = components_;
  Mlp::Cache cache;
  const Mat out = net_.forward(obs, grad ? &cache : nullptr);
  const Eigen::Index n = obs.cols();
  Mat g_out = Mat::Zero(out.rows(), n);
  double total = 0.0;
  std::vector<double> terms(k);
  for (Eigen::Index j = 0; j < n; ++j) {
    const LaplaceMixtureDist dist = dist_from_output(out.col(j));
    const NormAction u{actions(0, j), actions(1, j)};
    int best = 0;
    double best_l1 = kInf;
    for (int c = 0; c < k; ++c) {
      double t = std::log(dist.weights[c]);
      double l1 = 0.0;
      for (int d = 0; d < kActionDim; ++d) {
        const double r = std::abs(u[d] - dist.loc[c][d]);
        t += -std::log(2.0 * dist.scale[c][d]) - r / dist.scale[c][d];
        l1 += r;
      }
      terms[c] = t;
      if (l1 < best_l1) {
        best_l1 = l1;
        best = c;
      }
    }
    const double logp = log_sum_exp(terms);
    total += -logp - std::log(dist.weights[best]);
    if (!grad) continue;
    for (int c = 0; c < k; ++c) {
      const double resp = std::exp(terms[c] - logp);
      const double w = dist.weights[c];
      // Negative log-likelihood plus cross-entropy on the winning component.
      g_out(c, j) = -(resp - w) + (w - (c == best ? 1.0 : 0.0));
      for (int d = 0; d < kActionDim; ++d) {
        const double mu = dist.loc[c][d];
        const double b = dist.scale[c][d];
        const double diff = u[d] - mu;
        const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        const double dcomp_dmu = sgn / b;
        const double dcomp_db = -1.0 / b + std::abs(diff) / (b * b);
        const double pre_b = out(3 * k + c * kActionDim + d, j);
        g_out(k + c * kActionDim + d, j) = -resp * dcomp_dmu * (1.0 - mu * mu);
        g_out(3 * k + c * kActionDim + d, j) = -resp * dcomp_db * sigmoid(pre_b);
      }
    }
  }
  const double mean = total / static_cast<double>(n);
  if (grad) *grad = net_.backward(cache, g_out / static_cast<double>(n));
  return mean;
}

double kl_mc(const Policy& pi, const Policy& ref, const std::vector<std::vector<double>>& obs_batch, int n_samples,
             std::mt19937_64& rng, double* se) {
  if (obs_batch.empty() || n_samples < 1) throw Error("kl_mc: empty observation batch or no samples");
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (const auto& obs : obs_batch) {
    for (int s = 0; s < n_samples; ++s) {
      const NormAction u = pi.sample(obs, rng);
      const double term = pi.log_prob(obs, u) - ref.log_prob(obs, u);
      sum += term;
      sum_sq += term * term;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  if (se) {
    const double var = count > 1 ? (sum_sq - count * mean * mean) / static_cast<double>(count - 1) : 0.0;
    *se = std::sqrt(std::max(var, 0.0) / static_cast<double>(count));
  }
  return mean;
}

AnchorResult train_anchor(const std::vector<Trajectory>& demos, const ActionBounds& bounds,
                          const std::vector<int>& hidden, int components, const AnchorOptions& options,
                          std::uint64_t seed) {
  if (demos.empty()) throw Error("train_anchor: no demonstrations");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(demos.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_hold = demos.size() > 1
                           ? std::max<std::size_t>(1, static_cast<std::size_t>(options.holdout_fraction * demos.size()))
                           : 0;
  Pairs train, hold;
  for (std::size_t k = 0; k < order.size(); ++k) append_pairs(demos[order[k]], bounds, k < n_hold ? hold : train);
  if (train.obs.empty()) throw Error("train_anchor: demonstrations contain no steps");
  if (hold.obs.empty()) hold = train;
  const Mat x = to_columns(train.obs);
  const Mat y = to_columns(train.act);
  const Mat hx = to_columns(hold.obs);
  const Mat hy = to_columns(hold.act);

  AnchorResult result;
  result.policy = LaplaceMixturePolicy(static_cast<int>(x.rows()), hidden, components, mix_seed(seed, 1));
  LaplaceMixturePolicy& pol = result.policy;
  auto heldout_ll = [&] {
    const Mlp& net = pol.net();
    const Mat out = net.forward(hx);
    double s = 0.0;
    for (Eigen::Index j = 0; j < hx.cols(); ++j)
      s += pol.dist_from_output(out.col(j)).log_prob({hy(0, j), hy(1, j)});
    return s / static_cast<double>(hx.cols());
  };
  result.heldout_log_likelihood.push_back(heldout_ll());
  Adam opt(pol.net().num_params(), options.lr, 1.0);
  std::vector<int> idx(static_cast<std::size_t>(x.cols()));
  std::iota(idx.begin(), idx.end(), 0);
  const int mb = std::max(1, options.minibatch);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < idx.size(); start += mb) {
      const std::size_t end = std::min(idx.size(), start + mb);
      const std::span<const int> part(idx.data() + start, end - start);
      Vec g;
      const double l = pol.loss(gather(x, part), gather(y, part), &g);
      if (!std::isfinite(l))
        throw Error("train_anchor: loss diverged at epoch " + std::to_string(epoch) + ", batch " +
                    std::to_string(batches));
      opt.step(pol.net().mutable_params(), g);
      epoch_loss += l;
      ++batches;
    }
    result.final_loss = epoch_loss / batches;
    result.heldout_log_likelihood.push_back(heldout_ll());
  }
  if (options.epochs == 0) result.final_loss = pol.loss(x, y);
  return result;
}

double behavior_clone(GaussianPolicy& policy, const std::vector<Trajectory>& demos, const ActionBounds& bounds,
                      int epochs, int minibatch, double lr, std::uint64_t seed, bool fit_log_std) {
  Pairs data;
  for (const Trajectory& t : demos) append_pairs(t, bounds, data);
  if (data.obs.empty()) throw Error("behavior_clone: no demonstration steps");
  const Mat x = to_columns(data.obs);
  const Mat y = to_columns(data.act);
  std::mt19937_64 rng(seed);
  Vec params = policy.params();
  const Eigen::Index n_net = static_cast<Eigen::Index>(policy.net().num_params());
  Adam opt(static_cast<std::size_t>(n_net), lr, 1.0);
  std::vector<int> idx(static_cast<std::size_t>(x.cols()));
  std::iota(idx.begin(), idx.end(), 0);
  const int mb = std::max(1, minibatch);
  double mse = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t start = 0; start < idx.size(); start += mb) {
      const std::size_t end = std::min(idx.size(), start + mb);
      const std::span<const int> part(idx.data() + start, end - start);
      const Mat bx = gather(x, part);
      const Mat by = gather(y, part);
      Mlp::Cache cache;
      const Mat mean = policy.net().forward(bx, &cache).array().tanh().matrix();
      const Mat diff = mean - by;
      const double scale = 2.0 / static_cast<double>(bx.cols());
      const Mat g_out = (diff.array() * (1.0 - mean.array().square()) * scale).matrix();
      Vec net_params = params.head(n_net);
      opt.step(net_params, policy.net().backward(cache, g_out));
      params.head(n_net) = net_params;
      policy.set_params(params);
    }
  }
  const Mat mean = policy.net().forward(x).array().tanh().matrix();
  mse = (mean - y).squaredNorm() / static_cast<double>(x.cols());
  if (fit_log_std) {
    // Maximum-likelihood state-independent spread given the fitted means.
    NormAction s;
    for (int d = 0; d < kActionDim; ++d)
      s[d] = 0.5 * std::log(std::max((mean.row(d) - y.row(d)).squaredNorm() / static_cast<double>(x.cols()), 1e-12));
    policy.set_log_std(s);
    policy.project();
  }
  return mse;
}

}  // namespace tcce
