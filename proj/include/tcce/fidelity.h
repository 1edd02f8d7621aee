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

#ifndef TCCE_FIDELITY_H_
#define TCCE_FIDELITY_H_

#include <functional>
#include <string>
#include <vector>

#include "tcce/core.h"

namespace tcce {

struct Histogram {
  std::vector<double> edges;   // strictly increasing
  std::vector<double> masses;  // |edges| - 1 entries summing to 1
  bool smoothed = false;
  std::size_t n_samples = 0;

  std::size_t bins() const { return masses.size(); }
};

enum class Feature { kSpeed, kMinDistance };

std::string_view to_string(Feature f);

// n_bins equal-width bins over [lo, hi].
std::vector<double> uniform_edges(double lo, double hi, int n_bins);
// 40 bins over [0, 20] m/s and 50 bins over [0, 50] m.
std::vector<double> default_edges(Feature f);

// Normalized histogram of raw samples; out-of-range values go to the end
// bins. Non-finite samples are dropped. Throws if nothing remains.
Histogram make_histogram(std::span<const double> samples, const std::vector<double>& edges);

// Per-step feature values of every trajectory (non-finite distances, e.g.
// with no other live vehicle, are skipped).
std::vector<double> feature_samples(const std::vector<Trajectory>& trajectories, Feature f);
Histogram feature_histograms(const std::vector<Trajectory>& trajectories, Feature f, const std::vector<double>& edges);

// Adds eps to every mass and renormalizes.
Histogram smooth(const Histogram& h, double eps = 1e-8);

// Q is smoothed by 1e-8 when P has mass on one of its empty bins.
double kl_divergence(const Histogram& p, const Histogram& q);
double hellinger(const Histogram& p, const Histogram& q);
// sum_b f(P_b / Q_b) Q_b over bins with Q_b > 0, smoothing Q like
// kl_divergence.
double f_divergence(const Histogram& p, const Histogram& q, const std::function<double(double)>& f);
double wasserstein1(std::span<const double> p, std::span<const double> q);

// Fraction of episodes where any trajectory has a collision. Trajectories are
// grouped by their episode index.
double crash_rate(const std::vector<Trajectory>& trajectories);
double crash_rate(const std::vector<bool>& episode_crashed);

enum class Metric { kKl, kHellinger, kWasserstein1 };
std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);

struct GateResult {
  bool pass = false;
  double value = 0.0;
};

// Divergence of the simulated feature distribution from the demonstration one
// under `metric`; passes iff value <= xi.
GateResult fidelity_gate(std::span<const double> sim, std::span<const double> demo, const std::vector<double>& edges,
                         Metric metric, double xi);

}  // namespace tcce

#endif  // TCCE_FIDELITY_H_
