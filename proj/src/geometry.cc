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

#include "tcce/geometry.h"

#include <algorithm>
#include <limits>
#include <numbers>

namespace tcce {

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 f = unit(heading) * (0.5 * length);
  const Vec2 l = unit(heading + 0.5 * std::numbers::pi) * (0.5 * width);
  return {center + f + l, center - f + l, center - f - l, center + f - l};
}

namespace {

void project(const std::array<Vec2, 4>& pts, Vec2 axis, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const Vec2& p : pts) {
    const double d = p.dot(axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

}  // namespace

bool check_collision(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {unit(a.heading), unit(a.heading + 0.5 * std::numbers::pi),
                                    unit(b.heading), unit(b.heading + 0.5 * std::numbers::pi)};
  // Absorbs rounding in the corner construction so that exact contact
  // is reported as contact.
  constexpr double kContactTol = 1e-9;
  for (const Vec2& axis : axes) {
    double alo, ahi, blo, bhi;
    project(ca, axis, alo, ahi);
    project(cb, axis, blo, bhi);
    if (ahi < blo - kContactTol || bhi < alo - kContactTol) return false;
  }
  return true;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

double box_distance(const OrientedBox& a, const OrientedBox& b) {
  if (check_collision(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  // Disjoint convex polygons: the closest pair always involves a vertex.
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      best = std::min(best, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
      best = std::min(best, point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
    }
  }
  return best;
}

}  // namespace tcce
