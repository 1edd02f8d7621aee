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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.h"
#include "tcce/fidelity.h"

namespace tcce {
namespace {

Histogram hist(std::vector<double> masses) {
  Histogram h;
  h.masses = std::move(masses);
  for (std::size_t k = 0; k <= h.masses.size(); ++k) h.edges.push_back(static_cast<double>(k));
  return h;
}

Histogram random_hist(std::mt19937_64& rng, int bins, bool allow_empty) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> m(bins);
  double z = 0.0;
  for (double& x : m) {
    x = (allow_empty && u(rng) < 0.2) ? 0.0 : u(rng) + 1e-3;
    z += x;
  }
  if (z == 0.0) m[0] = z = 1.0;
  for (double& x : m) x /= z;
  return hist(m);
}

Trajectory speeds(const std::vector<double>& v, int episode = 0, bool crash = false) {
  Trajectory t;
  t.episode = episode;
  for (double s : v) {
    TrajectoryStep st;
    st.speed = s;
    st.collided = crash;
    t.steps.push_back(st);
  }
  return t;
}

TEST(Histogram, PointMassAtFive) {
  const Histogram h = feature_histograms({speeds({5, 5, 5, 5})}, Feature::kSpeed, default_edges(Feature::kSpeed));
  EXPECT_EQ(h.bins(), 40u);
  EXPECT_EQ(h.n_samples, 4u);
  int nonzero = 0;
  for (double m : h.masses) nonzero += m > 0.0 ? 1 : 0;
  EXPECT_EQ(nonzero, 1);
  EXPECT_EQ(*std::max_element(h.masses.begin(), h.masses.end()), 1.0);
}

TEST(Histogram, OutOfRangeGoesToEndBinsAndNonFiniteDropped) {
  const std::vector<double> s{-3.0, 100.0, std::nan(""), kInf, 1.0};
  const Histogram h = make_histogram(s, uniform_edges(0.0, 4.0, 4));
  EXPECT_EQ(h.n_samples, 3u);
  EXPECT_NEAR(h.masses.front(), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(h.masses.back(), 1.0 / 3.0, 1e-15);
  const std::vector<double> none{std::nan("")};
  EXPECT_THROW(make_histogram(none, uniform_edges(0.0, 1.0, 2)), Error);
  EXPECT_THROW(feature_histograms({}, Feature::kSpeed, default_edges(Feature::kSpeed)), Error);
}

TEST(Histogram, DistanceSkipsInfinity) {
  Trajectory t;
  for (double d : {kInf, 3.0, 7.0}) {
    TrajectoryStep s;
    s.min_distance = d;
    t.steps.push_back(s);
  }
  EXPECT_EQ(feature_samples({t}, Feature::kMinDistance), (std::vector<double>{3.0, 7.0}));
}

TEST(Divergence, KlExamples) {
  EXPECT_EQ(kl_divergence(hist({0.5, 0.5}), hist({0.5, 0.5})), 0.0);
  EXPECT_NEAR(kl_divergence(hist({0.5, 0.5}), hist({0.25, 0.75})), 0.1438, 1e-4);
  EXPECT_NEAR(kl_divergence(hist({0.5, 0.5}), hist({0.25, 0.75})), oracle::kl({0.5, 0.5}, {0.25, 0.75}), 1e-15);
  EXPECT_THROW(kl_divergence(hist({0.5, 0.5}), hist({1.0})), Error);
}

TEST(Divergence, HellingerExamples) {
  EXPECT_EQ(hellinger(hist({0.3, 0.7}), hist({0.3, 0.7})), 0.0);
  EXPECT_NEAR(hellinger(hist({1.0, 0.0}), hist({0.0, 1.0})), 1.0, 1e-15);
  EXPECT_NEAR(hellinger(hist({0.5, 0.5}), hist({0.25, 0.75})), 0.03407, 1e-4);
  EXPECT_NEAR(hellinger(hist({0.5, 0.5}), hist({0.25, 0.75})), oracle::hellinger({0.5, 0.5}, {0.25, 0.75}), 1e-15);
  EXPECT_THROW(hellinger(hist({0.5, 0.5}), hist({0.2, 0.3, 0.5})), Error);
}

TEST(Divergence, RangesAndIdentity) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const Histogram p = random_hist(rng, 7, true), q = random_hist(rng, 7, true);
    EXPECT_GE(kl_divergence(p, q), 0.0);
    EXPECT_GE(hellinger(p, q), 0.0);
    EXPECT_LE(hellinger(p, q), 1.0);
    EXPECT_LE(kl_divergence(p, p), 1e-8);
    if (p.masses != q.masses) EXPECT_GT(kl_divergence(p, q), 0.0);
  }
}

TEST(Divergence, EmptyReferenceBinIsSmoothed) {
  const double v = kl_divergence(hist({0.5, 0.5}), hist({1.0, 0.0}));
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 5.0);
}

TEST(FDivergence, ReproducesNamedDivergences) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const Histogram p = random_hist(rng, 6, k % 2 == 0), q = random_hist(rng, 6, false);
    const double kl = f_divergence(p, q, [](double t) { return t * std::log(t); });
    const double he = f_divergence(p, q, [](double t) { return 0.5 * std::pow(std::sqrt(t) - 1.0, 2.0); });
    EXPECT_NEAR(kl, kl_divergence(p, q), 1e-12);
    EXPECT_NEAR(he, hellinger(p, q), 1e-12);
    EXPECT_EQ(f_divergence(p, q, [](double) { return 0.0; }), 0.0);
  }
  EXPECT_THROW(f_divergence(hist({1.0}), hist({0.5, 0.5}), [](double t) { return t; }), Error);
}

TEST(Wasserstein, Examples) {
  const std::vector<double> a{0.0, 1.0}, b{1.0, 2.0}, z{0.0}, t{3.0};
  EXPECT_EQ(wasserstein1(a, a), 0.0);
  EXPECT_NEAR(wasserstein1(z, t), 3.0, 1e-12);
  EXPECT_NEAR(wasserstein1(a, b), 1.0, 1e-12);
  EXPECT_THROW(wasserstein1(std::vector<double>{}, a), Error);
}

TEST(Wasserstein, MatchesCdfOracleWithUnequalSizes) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 30; ++k) {
    std::vector<double> p(5 + k % 7), q(3 + k % 11);
    for (double& x : p) x = g(rng);
    for (double& x : q) x = 2.0 * g(rng) + 1.0;
    EXPECT_NEAR(wasserstein1(p, q), oracle::wasserstein1_cdf(p, q), 1e-12);
  }
}

TEST(Wasserstein, TriangleInequalityAndTranslation) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int k = 0; k < 50; ++k) {
    std::vector<double> a(10), b(13), c(8);
    for (double& x : a) x = g(rng);
    for (double& x : b) x = 3.0 * g(rng);
    for (double& x : c) x = g(rng) - 2.0;
    EXPECT_LE(wasserstein1(a, c), wasserstein1(a, b) + wasserstein1(b, c) + 1e-9);
    const double shift = g(rng);
    std::vector<double> as = a, bs = b;
    for (double& x : as) x += shift;
    for (double& x : bs) x += shift;
    EXPECT_NEAR(wasserstein1(as, bs), wasserstein1(a, b), 1e-9);
    EXPECT_LE(std::abs(wasserstein1(as, b) - wasserstein1(a, b)), std::abs(shift) + 1e-9);
    EXPECT_NEAR(wasserstein1(as, a), std::abs(shift), 1e-9);
  }
}

TEST(CrashRate, Examples) {
  std::vector<Trajectory> clean;
  for (int e = 0; e < 4; ++e) clean.push_back(speeds({1, 2}, e));
  EXPECT_EQ(crash_rate(clean), 0.0);
  std::vector<Trajectory> ten;
  for (int e = 0; e < 10; ++e) {
    ten.push_back(speeds({1, 2}, e, e < 3));
    ten.push_back(speeds({1, 2}, e, false));
  }
  EXPECT_DOUBLE_EQ(crash_rate(ten), 0.3);
  std::mt19937_64 rng(5);
  std::bernoulli_distribution b(0.4);
  std::vector<bool> flags(37);
  for (std::size_t k = 0; k < flags.size(); ++k) flags[k] = b(rng);
  const double r = crash_rate(flags);
  EXPECT_GE(r, 0.0);
  EXPECT_LE(r, 1.0);
}

TEST(Gate, Logic) {
  const std::vector<double> demo{1, 2, 3, 4, 5, 6}, sim{2, 2, 3, 9, 9, 9};
  const auto edges = uniform_edges(0.0, 10.0, 10);
  for (Metric m : {Metric::kKl, Metric::kHellinger, Metric::kWasserstein1}) {
    EXPECT_TRUE(fidelity_gate(demo, demo, edges, m, 0.0).pass) << to_string(m);
    const GateResult r = fidelity_gate(sim, demo, edges, m, 0.0);
    EXPECT_FALSE(r.pass);
    EXPECT_GT(r.value, 0.0);
    EXPECT_TRUE(fidelity_gate(sim, demo, edges, m, r.value).pass);
    EXPECT_TRUE(fidelity_gate(sim, demo, edges, m, 2.0 * r.value).pass);
    EXPECT_EQ(parse_metric(to_string(m)), m);
  }
  EXPECT_THROW(parse_metric("tv"), Error);
}

}  // namespace
}  // namespace tcce
