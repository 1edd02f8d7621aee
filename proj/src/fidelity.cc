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

#include "tcce/fidelity.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace tcce {

namespace {

constexpr double kSmoothing = 1e-8;

void check_edges(const Histogram& p, const Histogram& q) {
  if (p.edges != q.edges || p.masses.size() != q.masses.size())
    throw Error("histograms have mismatched bin edges");
}

// Q with additive smoothing when P has mass on an empty bin of Q, Q itself
// otherwise.
Histogram ratio_reference(const Histogram& p, const Histogram& q) {
  for (std::size_t b = 0; b < q.masses.size(); ++b)
    if (q.masses[b] <= 0.0 && p.masses[b] > 0.0) return smooth(q, kSmoothing);
  return q;
}

}  // namespace

std::string_view to_string(Feature f) { return f == Feature::kSpeed ? "speed" : "min_distance"; }

std::vector<double> uniform_edges(double lo, double hi, int n_bins) {
  if (n_bins < 1 || !(hi > lo)) throw Error("uniform_edges: need hi > lo and at least one bin");
  std::vector<double> e(n_bins + 1);
  for (int k = 0; k <= n_bins; ++k) e[k] = lo + (hi - lo) * k / n_bins;
  return e;
}

std::vector<double> default_edges(Feature f) {
  return f == Feature::kSpeed ? uniform_edges(0.0, 20.0, 40) : uniform_edges(0.0, 50.0, 50);
}

Histogram make_histogram(std::span<const double> samples, const std::vector<double>& edges) {
  if (edges.size() < 2) throw Error("histogram: need at least two edges");
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (!(edges[k] > edges[k - 1])) throw Error("histogram: edges must be strictly increasing");
  Histogram h;
  h.edges = edges;
  h.masses.assign(edges.size() - 1, 0.0);
  for (double x : samples) {
    if (!std::isfinite(x)) continue;
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const std::ptrdiff_t bin = std::clamp<std::ptrdiff_t>(it - edges.begin() - 1, 0,
                                                          static_cast<std::ptrdiff_t>(h.masses.size()) - 1);
    h.masses[static_cast<std::size_t>(bin)] += 1.0;
    ++h.n_samples;
  }
  if (h.n_samples == 0) throw Error("histogram: no finite samples");
  for (double& m : h.masses) m /= static_cast<double>(h.n_samples);
  return h;
}

std::vector<double> feature_samples(const std::vector<Trajectory>& trajectories, Feature f) {
  std::vector<double> out;
  for (const Trajectory& t : trajectories)
    for (const TrajectoryStep& s : t.steps) {
      const double v = f == Feature::kSpeed ? s.speed : s.min_distance;
      if (std::isfinite(v)) out.push_back(v);
    }
  return out;
}

Histogram feature_histograms(const std::vector<Trajectory>& trajectories, Feature f, const std::vector<double>& edges) {
  if (trajectories.empty()) throw Error("feature_histograms: no trajectories");
  const std::vector<double> s = feature_samples(trajectories, f);
  if (s.empty()) throw Error(std::string("feature_histograms: no finite ") + std::string(to_string(f)) + " samples");
  return make_histogram(s, edges);
}

Histogram smooth(const Histogram& h, double eps) {
  Histogram out = h;
  double total = 0.0;
  for (double& m : out.masses) total += (m += eps);
  for (double& m : out.masses) m /= total;
  out.smoothed = true;
  return out;
}

double kl_divergence(const Histogram& p, const Histogram& q) {
  check_edges(p, q);
  const Histogram qs = ratio_reference(p, q);
  double s = 0.0;
  for (std::size_t b = 0; b < p.masses.size(); ++b)
    if (p.masses[b] > 0.0) s += p.masses[b] * std::log(p.masses[b] / qs.masses[b]);
  return std::max(s, 0.0);
}

double hellinger(const Histogram& p, const Histogram& q) {
  check_edges(p, q);
  double s = 0.0;
  for (std::size_t b = 0; b < p.masses.size(); ++b) {
    const double d = std::sqrt(p.masses[b]) - std::sqrt(q.masses[b]);
    s += d * d;
  }
  return std::clamp(0.5 * s, 0.0, 1.0);
}

double f_divergence(const Histogram& p, const Histogram& q, const std::function<double(double)>& f) {
  check_edges(p, q);
  const Histogram qs = ratio_reference(p, q);
  double s = 0.0;
  for (std::size_t b = 0; b < p.masses.size(); ++b) {
    if (qs.masses[b] <= 0.0) continue;  // p is 0 here as well
    const double t = p.masses[b] / qs.masses[b];
    // f(0) is taken as its right limit so that t ln t contributes 0.
    const double ft = t == 0.0 ? f(1e-300) : f(t);
    s += ft * qs.masses[b];
  }
  return s;
}

double wasserstein1(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || q.empty()) throw Error("wasserstein1: empty sample set");
  std::vector<double> a(p.begin(), p.end()), b(q.begin(), q.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integrate |F_a - F_b| over the merged breakpoints.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double x = std::min(a.front(), b.front());
  double total = 0.0;
  while (i < a.size() || j < b.size()) {
    double next;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j]))
      next = a[i];
    else
      next = b[j];
    total += std::abs(i / na - j / nb) * (next - x);
    x = next;
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
  }
  return total;
}

double crash_rate(const std::vector<bool>& episode_crashed) {
  if (episode_crashed.empty()) throw Error("crash_rate: no episodes");
  double c = 0.0;
  for (bool b : episode_crashed) c += b ? 1.0 : 0.0;
  return c / static_cast<double>(episode_crashed.size());
}

double crash_rate(const std::vector<Trajectory>& trajectories) {
  std::map<int, bool> episodes;
  for (const Trajectory& t : trajectories) {
    bool& crashed = episodes[t.episode];
    for (const TrajectoryStep& s : t.steps) crashed = crashed || s.collided;
  }
  std::vector<bool> flags;
  for (const auto& [ep, c] : episodes) flags.push_back(c);
  return crash_rate(flags);
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kKl:
      return "kl";
    case Metric::kHellinger:
      return "hellinger";
    case Metric::kWasserstein1:
      return "wasserstein1";
  }
  return "";
}

Metric parse_metric(std::string_view name) {
  if (name == "kl") return Metric::kKl;
  if (name == "hellinger") return Metric::kHellinger;
  if (name == "wasserstein1") return Metric::kWasserstein1;
  throw Error("unknown divergence metric '" + std::string(name) + "'");
}

GateResult fidelity_gate(std::span<const double> sim, std::span<const double> demo, const std::vector<double>& edges,
                         Metric metric, double xi) {
  GateResult r;
  switch (metric) {
    case Metric::kKl:
      r.value = kl_divergence(make_histogram(sim, edges), make_histogram(demo, edges));
      break;
    case Metric::kHellinger:
      r.value = hellinger(make_histogram(sim, edges), make_histogram(demo, edges));
      break;
    case Metric::kWasserstein1:
      r.value = wasserstein1(sim, demo);
      break;
  }
  r.pass = r.value <= xi;
  return r;
}

}  // namespace tcce
