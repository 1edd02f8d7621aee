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

#ifndef TCCE_GEOMETRY_H_
#define TCCE_GEOMETRY_H_

#include <array>
#include <cmath>

namespace tcce {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  bool operator==(const Vec2&) const = default;
};

inline Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Expresses `v` in a frame rotated by `angle` (inverse rotation).
inline Vec2 to_frame(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Vehicle footprint: a rectangle centred on the vehicle position.
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double length = 4.5;
  double width = 2.0;

  std::array<Vec2, 4> corners() const;
};

// Separating-axis overlap test. Touching boundaries count as a collision.
bool check_collision(const OrientedBox& a, const OrientedBox& b);

// Euclidean gap between two rectangles; 0 when they overlap or touch.
double box_distance(const OrientedBox& a, const OrientedBox& b);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

}  // namespace tcce

#endif  // TCCE_GEOMETRY_H_
