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

#include "tcce/road_map.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "tcce/core.h"

namespace tcce {

namespace {

constexpr double kLaneWidth = 3.5;

struct MapKindName {
  MapKind kind;
  std::string_view name;
};

constexpr MapKindName kKindNames[] = {
    {MapKind::kMerge, "merge"},
    {MapKind::kDualIntersection, "dual_intersection"},
    {MapKind::kTJunction, "t_junction"},
    {MapKind::kDenseIntersection, "dense_intersection"},
    {MapKind::kRoundabout, "roundabout"},
    {MapKind::kYJunction, "y_junction"},
};

std::vector<Vec2> bezier(Vec2 p0, Vec2 c0, Vec2 c1, Vec2 p1, int segments) {
  std::vector<Vec2> pts;
  pts.reserve(segments + 1);
  for (int i = 0; i <= segments; ++i) {
    const double t = static_cast<double>(i) / segments;
    const double s = 1.0 - t;
    pts.push_back(p0 * (s * s * s) + c0 * (3 * s * s * t) + c1 * (3 * s * t * t) + p1 * (t * t * t));
  }
  pts.front() = p0;
  pts.back() = p1;
  return pts;
}

// Smooth connection from p0 heading d0 to p1 heading d1.
std::vector<Vec2> connector(Vec2 p0, Vec2 d0, Vec2 p1, Vec2 d1, int segments = 16) {
  const double k = 0.4 * (p1 - p0).norm();
  return bezier(p0, p0 + d0 * k, p1 - d1 * k, p1, segments);
}

std::vector<Vec2> straight(Vec2 a, Vec2 b, double spacing = 10.0) {
  const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / spacing)));
  std::vector<Vec2> pts;
  for (int i = 0; i <= n; ++i) pts.push_back(a + (b - a) * (static_cast<double>(i) / n));
  pts.back() = b;
  return pts;
}

void append(std::vector<Vec2>& dst, const std::vector<Vec2>& src) {
  for (std::size_t i = dst.empty() ? 0 : 1; i < src.size(); ++i) dst.push_back(src[i]);
}

int add_lane(RoadMap& map, std::vector<Vec2> pts) {
  map.lanes.emplace_back(std::move(pts));
  map.successors.emplace_back();
  return static_cast<int>(map.lanes.size()) - 1;
}

RoadMap build_merge(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  RoadMap map;
  map.kind = MapKind::kMerge;
  map.speed_limit = 14.0;
  const double main_len = 120.0 + 10.0 * jitter(rng);
  const double ramp_offset = 10.0 + 2.0 * jitter(rng);
  const double blend = 60.0;
  const int main_in = add_lane(map, straight({-main_len, 0.0}, {0.0, 0.0}));
  std::vector<Vec2> ramp = straight({-main_len, -ramp_offset}, {-blend, -ramp_offset});
  std::vector<Vec2> curve;
  const int n = 30;
  for (int i = 0; i <= n; ++i) {
    const double x = -blend + blend * i / n;
    const double y = -ramp_offset * 0.5 * (1.0 + std::cos(std::numbers::pi * (x + blend) / blend));
    curve.push_back({x, y});
  }
  curve.back() = {0.0, 0.0};
  append(ramp, curve);
  const int ramp_in = add_lane(map, std::move(ramp));
  const int out = add_lane(map, straight({0.0, 0.0}, {160.0, 0.0}));
  map.successors[main_in].push_back(out);
  map.successors[ramp_in].push_back(out);
  return map;
}

struct ArmSpec {
  double angle;  // outward direction of the arm
};

// Generic junction: each arm carries `lanes_per_dir` lanes in each direction.
RoadMap build_junction(MapKind kind, const std::vector<ArmSpec>& arms, int lanes_per_dir,
                       double box_radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  RoadMap map;
  map.kind = kind;
  map.speed_limit = 12.0;
  const int n_arms = static_cast<int>(arms.size());
  // in_lane[a][l], out_lane[a][l]
  std::vector<std::vector<int>> in_lane(n_arms), out_lane(n_arms);
  for (int a = 0; a < n_arms; ++a) {
    const double far = 100.0 + 10.0 * jitter(rng);
    const Vec2 u = unit(arms[a].angle);
    const Vec2 nrm = unit(arms[a].angle + 0.5 * std::numbers::pi);
    for (int l = 0; l < lanes_per_dir; ++l) {
      const double off = 0.5 * kLaneWidth + kLaneWidth * l;
      in_lane[a].push_back(add_lane(map, straight(u * far + nrm * off, u * box_radius + nrm * off)));
      out_lane[a].push_back(add_lane(map, straight(u * box_radius - nrm * off, u * far - nrm * off)));
    }
  }
  for (int a = 0; a < n_arms; ++a) {
    for (int b = 0; b < n_arms; ++b) {
      if (a == b) continue;
      const double turn = wrap_heading(arms[b].angle - arms[a].angle - std::numbers::pi);
      const bool left = turn > 0.3;
      const bool right = turn < -0.3;
      for (int l = 0; l < lanes_per_dir; ++l) {
        int m = l;
        if (lanes_per_dir > 1) {
          // Inner lanes turn left or go straight; outer lanes turn right or go straight.
          if (l == 0 && right) continue;
          if (l == lanes_per_dir - 1 && left) continue;
        }
        const Vec2 p0 = map.lanes[in_lane[a][l]].points().back();
        const Vec2 p1 = map.lanes[out_lane[b][m]].points().front();
        const int c = add_lane(map, connector(p0, unit(arms[a].angle + std::numbers::pi), p1,
                                              unit(arms[b].angle)));
        map.successors[in_lane[a][l]].push_back(c);
        map.successors[c].push_back(out_lane[b][m]);
      }
    }
  }
  return map;
}

std::vector<Vec2> arc_points(double radius, double from, double to) {
  const int n = std::max(2, static_cast<int>(std::ceil((to - from) / (3.0 * std::numbers::pi / 180.0))));
  std::vector<Vec2> pts;
  for (int i = 0; i <= n; ++i) {
    const double phi = from + (to - from) * i / n;
    pts.push_back(unit(phi) * radius);
  }
  return pts;
}

RoadMap build_roundabout(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  RoadMap map;
  map.kind = MapKind::kRoundabout;
  map.speed_limit = 10.0;
  const double radius = 20.0;
  const double half_gap = 12.0 * std::numbers::pi / 180.0;
  const int n_arms = 4;
  std::vector<double> theta(n_arms);
  for (int k = 0; k < n_arms; ++k) theta[k] = 0.5 * std::numbers::pi * k;
  std::vector<Vec2> exit_node(n_arms), entry_node(n_arms);
  for (int k = 0; k < n_arms; ++k) {
    exit_node[k] = unit(theta[k] - half_gap) * radius;
    entry_node[k] = unit(theta[k] + half_gap) * radius;
  }
  std::vector<int> short_arc(n_arms), long_arc(n_arms);
  for (int k = 0; k < n_arms; ++k) {
    std::vector<Vec2> s = arc_points(radius, theta[k] - half_gap, theta[k] + half_gap);
    s.front() = exit_node[k];
    s.back() = entry_node[k];
    short_arc[k] = add_lane(map, std::move(s));
    const int next = (k + 1) % n_arms;
    std::vector<Vec2> l = arc_points(radius, theta[k] + half_gap, theta[k] + 0.5 * std::numbers::pi - half_gap);
    l.front() = entry_node[k];
    l.back() = exit_node[next];
    long_arc[k] = add_lane(map, std::move(l));
  }
  for (int k = 0; k < n_arms; ++k) {
    map.ring.push_back(short_arc[k]);
    map.ring.push_back(long_arc[k]);
  }
  std::vector<int> entry(n_arms), exit(n_arms);
  for (int k = 0; k < n_arms; ++k) {
    const double far = 100.0 + 10.0 * jitter(rng);
    const Vec2 u = unit(theta[k]);
    const Vec2 nrm = unit(theta[k] + 0.5 * std::numbers::pi);
    const double off = 0.5 * kLaneWidth;
    const double near = radius + 14.0;
    std::vector<Vec2> in = straight(u * far + nrm * off, u * near + nrm * off);
    append(in, connector(u * near + nrm * off, u * -1.0, entry_node[k],
                         unit(theta[k] + half_gap + 0.5 * std::numbers::pi)));
    entry[k] = add_lane(map, std::move(in));
    std::vector<Vec2> out = connector(exit_node[k], unit(theta[k] - half_gap + 0.5 * std::numbers::pi),
                                      u * near - nrm * off, u);
    append(out, straight(u * near - nrm * off, u * far - nrm * off));
    exit[k] = add_lane(map, std::move(out));
  }
  for (int k = 0; k < n_arms; ++k) {
    const int next = (k + 1) % n_arms;
    map.successors[entry[k]].push_back(long_arc[k]);
    map.successors[short_arc[k]].push_back(long_arc[k]);
    map.successors[long_arc[k]].push_back(exit[next]);
    map.successors[long_arc[k]].push_back(short_arc[next]);
  }
  return map;
}

}  // namespace

std::string_view to_string(MapKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

MapKind parse_map_kind(std::string_view name) {
  for (const auto& kn : kKindNames)
    if (kn.name == name) return kn.kind;
  throw Error("unknown map kind '" + std::string(name) + "'");
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  cumulative_.resize(points_.size(), 0.0);
  for (std::size_t i = 1; i < points_.size(); ++i)
    cumulative_[i] = cumulative_[i - 1] + (points_[i] - points_[i - 1]).norm();
}

std::size_t Polyline::segment_at(double s) const {
  if (points_.size() < 2) return 0;
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t idx = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  return std::min(idx, points_.size() - 2);
}

Vec2 Polyline::point_at(double s) const {
  if (points_.size() == 1) return points_[0];
  s = std::max(s, 0.0);
  const std::size_t i = segment_at(s);
  const Vec2 a = points_[i];
  const Vec2 d = points_[i + 1] - a;
  const double seg = cumulative_[i + 1] - cumulative_[i];
  return a + d * ((s - cumulative_[i]) / seg);
}

double Polyline::tangent_at(double s) const {
  const std::size_t i = segment_at(std::max(s, 0.0));
  const Vec2 d = points_[i + 1] - points_[i];
  return std::atan2(d.y, d.x);
}

Projection Polyline::project(Vec2 p) const {
  return project(p, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
}

Projection Polyline::project(Vec2 p, double s_lo, double s_hi) const {
  Projection best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    if (cumulative_[i + 1] < s_lo || cumulative_[i] > s_hi) continue;
    const Vec2 a = points_[i];
    const Vec2 ab = points_[i + 1] - a;
    const double len2 = ab.dot(ab);
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    const Vec2 foot = a + ab * t;
    const double d = (p - foot).norm();
    if (d < best_d) {
      best_d = d;
      best.foot = foot;
      best.arc = cumulative_[i] + t * (cumulative_[i + 1] - cumulative_[i]);
      best.tangent = std::atan2(ab.y, ab.x);
      const double side = ab.cross(p - foot);
      best.lateral = side >= 0.0 ? d : -d;
    }
  }
  return best;
}

std::pair<Vec2, Vec2> RoadMap::bounds() const {
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi{-lo.x, -lo.y};
  for (const Polyline& lane : lanes) {
    for (const Vec2& p : lane.points()) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
  }
  return {lo, hi};
}

void RoadMap::validate() const {
  if (successors.size() != lanes.size()) throw Error("road map: successor table size mismatch");
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const auto& pts = lanes[i].points();
    if (pts.size() < 2) throw Error("road map: lane " + std::to_string(i) + " has fewer than 2 points");
    for (std::size_t k = 1; k < pts.size(); ++k) {
      if (!((pts[k] - pts[k - 1]).norm() > 0.0))
        throw Error("road map: lane " + std::to_string(i) + " has a zero-length segment");
    }
    for (int s : successors[i]) {
      if (s < 0 || static_cast<std::size_t>(s) >= lanes.size())
        throw Error("road map: lane " + std::to_string(i) + " has an invalid successor");
      if ((lanes[s].points().front() - pts.back()).norm() > 1e-6)
        throw Error("road map: lane " + std::to_string(i) + " does not meet successor " +
                    std::to_string(s));
    }
  }
}

RoadMap build_map(MapKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(kind)));
  RoadMap map;
  const double deg = std::numbers::pi / 180.0;
  switch (kind) {
    case MapKind::kMerge:
      map = build_merge(rng);
      break;
    case MapKind::kDualIntersection:
      map = build_junction(kind, {{0.0}, {90 * deg}, {180 * deg}, {270 * deg}}, 1, 10.0, rng);
      break;
    case MapKind::kTJunction:
      map = build_junction(kind, {{0.0}, {180 * deg}, {270 * deg}}, 1, 10.0, rng);
      break;
    case MapKind::kDenseIntersection:
      map = build_junction(kind, {{0.0}, {90 * deg}, {180 * deg}, {270 * deg}}, 2, 14.0, rng);
      break;
    case MapKind::kRoundabout:
      map = build_roundabout(rng);
      break;
    case MapKind::kYJunction:
      map = build_junction(kind, {{90 * deg}, {210 * deg}, {330 * deg}}, 1, 12.0, rng);
      break;
  }
  map.validate();
  return map;
}

RoadMap transform_map(const RoadMap& map, double angle, Vec2 offset) {
  RoadMap out = map;
  for (std::size_t i = 0; i < map.lanes.size(); ++i) {
    std::vector<Vec2> pts;
    for (const Vec2& p : map.lanes[i].points()) pts.push_back(rotate(p, angle) + offset);
    out.lanes[i] = Polyline(std::move(pts));
  }
  return out;
}

void export_map_csv(const RoadMap& map, std::ostream& out) {
  out << "lane_id,point_index,x,y\n";
  out.precision(17);
  for (std::size_t i = 0; i < map.lanes.size(); ++i) {
    const auto& pts = map.lanes[i].points();
    for (std::size_t k = 0; k < pts.size(); ++k) out << i << ',' << k << ',' << pts[k].x << ',' << pts[k].y << '\n';
  }
}

std::vector<int> find_lane_path(const RoadMap& map, int from, int to) {
  const int n = static_cast<int>(map.lanes.size());
  if (from < 0 || from >= n || to < 0 || to >= n) return {};
  // Dijkstra on (hops, length) keeps the fewest-lane rule with a length tie-break.
  using Key = std::pair<int, double>;
  std::vector<Key> best(n, {std::numeric_limits<int>::max(), 0.0});
  std::vector<int> parent(n, -1);
  std::vector<bool> settled(n, false);
  best[from] = {0, map.lanes[from].length()};
  for (int iter = 0; iter < n; ++iter) {
    int u = -1;
    for (int v = 0; v < n; ++v)
      if (!settled[v] && best[v].first != std::numeric_limits<int>::max() && (u < 0 || best[v] < best[u])) u = v;
    if (u < 0) break;
    settled[u] = true;
    if (u == to) break;
    for (int v : map.successors[u]) {
      const Key cand{best[u].first + 1, best[u].second + map.lanes[v].length()};
      if (!settled[v] && cand < best[v]) {
        best[v] = cand;
        parent[v] = u;
      }
    }
  }
  if (!settled[to]) return {};
  std::vector<int> path;
  for (int v = to; v >= 0; v = parent[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

Polyline concat_lanes(const RoadMap& map, std::span<const int> lanes) {
  std::vector<Vec2> pts;
  for (int l : lanes) append(pts, map.lanes[l].points());
  return Polyline(std::move(pts));
}

}  // namespace tcce
