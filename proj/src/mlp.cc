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

#include "tcce/mlp.h"

#include <cmath>
#include <random>

namespace tcce {

void NetSpec::validate() const {
  if (input_dim < 1) throw Error("net spec: input_dim must be >= 1");
  if (output_dim < 1) throw Error("net spec: output_dim must be >= 1");
  for (int h : hidden)
    if (h < 1) throw Error("net spec: hidden widths must be >= 1");
}

Mlp::Mlp(const NetSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  std::vector<int> dims = {spec.input_dim};
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(spec.output_dim);
  std::size_t offset = 0;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    layers_.push_back({dims[k], dims[k + 1], offset});
    offset += static_cast<std::size_t>(dims[k] * dims[k + 1] + dims[k + 1]);
  }
  params_ = Vec::Zero(static_cast<Eigen::Index>(offset));
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    if (k + 1 == layers_.size()) bound *= spec.output_init_scale;
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int j = 0; j < l.in * l.out; ++j) params_[static_cast<Eigen::Index>(l.offset + j)] = u(rng);
  }
}

void Mlp::set_params(const Vec& p) {
  if (p.size() != params_.size()) throw Error("mlp: parameter vector has the wrong length");
  params_ = p;
}

Eigen::Map<const Mat> Mlp::weights(const Layer& l) const { return {params_.data() + l.offset, l.out, l.in}; }

Eigen::Map<const Vec> Mlp::bias(const Layer& l) const {
  return {params_.data() + l.offset + static_cast<std::size_t>(l.in * l.out), l.out};
}

Eigen::Map<Mat> Mlp::output_weights() {
  const Layer& l = layers_.back();
  return {params_.data() + l.offset, l.out, l.in};
}

Eigen::Map<Vec> Mlp::output_bias() {
  const Layer& l = layers_.back();
  return {params_.data() + l.offset + static_cast<std::size_t>(l.in * l.out), l.out};
}

Mat Mlp::forward(const Mat& inputs, Cache* cache) const {
  if (inputs.rows() != spec_.input_dim)
    throw Error("mlp: input has " + std::to_string(inputs.rows()) + " rows, expected " +
                std::to_string(spec_.input_dim));
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(inputs);
  }
  Mat h = inputs;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Mat z = weights(layers_[k]) * h;
    z.colwise() += bias(layers_[k]);
    if (k + 1 < layers_.size()) z = z.array().tanh().matrix();
    h = std::move(z);
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

Vec Mlp::forward(const Vec& input) const {
  Mat out = forward(Mat(input));
  return out.col(0);
}

Vec Mlp::backward(const Cache& cache, const Mat& grad_out, Mat* grad_in) const {
  if (cache.activations.size() != layers_.size() + 1) throw Error("mlp: backward needs a forward cache");
  if (grad_out.rows() != spec_.output_dim || grad_out.cols() != cache.activations.back().cols())
    throw Error("mlp: output gradient shape mismatch");
  if (!grad_out.allFinite()) throw Error("mlp: non-finite output gradient");
  Vec grad = Vec::Zero(params_.size());
  Mat delta = grad_out;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Layer& l = layers_[k];
    const Mat& input = cache.activations[k];
    Eigen::Map<Mat> gw(grad.data() + l.offset, l.out, l.in);
    Eigen::Map<Vec> gb(grad.data() + l.offset + static_cast<std::size_t>(l.in * l.out), l.out);
    gw.noalias() = delta * input.transpose();
    gb = delta.rowwise().sum();
    if (k == 0 && !grad_in) break;
    Mat back = weights(l).transpose() * delta;
    if (k > 0) back = (back.array() * (1.0 - input.array().square())).matrix();
    delta = std::move(back);
  }
  if (grad_in) *grad_in = delta;
  if (!grad.allFinite()) throw Error("mlp: non-finite parameter gradient");
  return grad;
}

Adam::Adam(std::size_t n, double lr, double max_grad_norm)
    : lr_(lr), max_grad_norm_(max_grad_norm), m_(Vec::Zero(static_cast<Eigen::Index>(n))),
      v_(Vec::Zero(static_cast<Eigen::Index>(n))) {}

void Adam::step(Vec& params, Vec grad) {
  if (grad.size() != params.size() || grad.size() != m_.size()) throw Error("adam: size mismatch");
  if (!grad.allFinite()) throw Error("adam: non-finite gradient");
  if (max_grad_norm_ > 0.0) {
    const double norm = grad.norm();
    if (norm > max_grad_norm_) grad *= max_grad_norm_ / norm;
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

Mat to_columns(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Mat();
  Mat m(static_cast<Eigen::Index>(rows[0].size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != rows[0].size()) throw Error("to_columns: ragged rows");
    for (std::size_t i = 0; i < rows[j].size(); ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
  }
  return m;
}

}  // namespace tcce
