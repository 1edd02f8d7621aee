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

#ifndef TCCE_MLP_H_
#define TCCE_MLP_H_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tcce/core.h"

namespace tcce {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct NetSpec {
  int input_dim = 1;
  std::vector<int> hidden = {64, 64};
  int output_dim = 1;
  // Multiplies the initial output-layer weights.
  double output_init_scale = 1.0;

  void validate() const;
  bool operator==(const NetSpec&) const = default;
};

// Fully connected tanh network with a linear output layer. Parameters live in
// one flat vector: for each layer, the column-major weight
// matrix (out x in) followed by the bias.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const NetSpec& spec, std::uint64_t seed);

  const NetSpec& spec() const { return spec_; }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }
  const Vec& params() const { return params_; }
  Vec& mutable_params() { return params_; }
  void set_params(const Vec& p);

  // Inputs and outputs are column-per-sample.
  struct Cache {
    std::vector<Mat> activations;  // activations[0] is the input
  };
  Mat forward(const Mat& inputs, Cache* cache = nullptr) const;
  Vec forward(const Vec& input) const;

  // Gradient of sum_j <grad_out[:, j], f(x_j)> with respect to the flat
  // parameters, given the cache of a forward pass. Optionally returns the
  // gradient with respect to the inputs. Throws on non-finite values.
  Vec backward(const Cache& cache, const Mat& grad_out, Mat* grad_in = nullptr) const;

  // Output-layer weight block and bias, exposed for output renormalization.
  Eigen::Map<Mat> output_weights();
  Eigen::Map<Vec> output_bias();

 private:
  struct Layer {
    int in = 0;
    int out = 0;
    std::size_t offset = 0;  // weights, then bias
  };
  Eigen::Map<const Mat> weights(const Layer& l) const;
  Eigen::Map<const Vec> bias(const Layer& l) const;

  NetSpec spec_;
  std::vector<Layer> layers_;
  Vec params_;
};

// Adam on a flat parameter vector with optional global-norm gradient clipping.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double max_grad_norm = 0.0);
  // Performs descent: params -= step(grad).
  void step(Vec& params, Vec grad);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  double max_grad_norm_ = 0.0;
  Vec m_;
  Vec v_;
  long t_ = 0;
};

// Stacks sample vectors as columns.
Mat to_columns(const std::vector<std::vector<double>>& rows);

}  // namespace tcce

#endif  // TCCE_MLP_H_
