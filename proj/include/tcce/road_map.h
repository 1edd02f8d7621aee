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

#ifndef TCCE_ROAD_MAP_H_
#define TCCE_ROAD_MAP_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcce/geometry.h"

namespace tcce {

enum class MapKind { kMerge, kDualIntersection, kTJunction, kDenseIntersection, kRoundabout, kYJunction };

std::string_view to_string(MapKind kind);
// Throws Error for names outside the six supported kinds.
MapKind parse_map_kind(std::string_view name);

// Result of projecting a point onto a polyline.
struct Projection {
  double arc = 0.0;      // arc length of the foot point
  double lateral = 0.0;  // signed offset, positive to the left of travel
  double tangent = 0.0;  // heading of the segment at the foot point
  Vec2 foot;
};

// Piecewise-linear curve with cached cumulative arc length.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  const std::vector<Vec2>& points() const { return points_; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  double arc_at(std::size_t index) const { return cumulative_[index]; }

  // Position and tangent at arc length s (clamped to the ends; beyond the end
  // the last segment is extrapolated).
  Vec2 point_at(double s) const;
  double tangent_at(double s) const;

  Projection project(Vec2 p) const;
  // Only considers segments overlapping [s_lo, s_hi].
  Projection project(Vec2 p, double s_lo, double s_hi) const;

 private:
  std::size_t segment_at(double s) const;

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

struct RoadMap {
  MapKind kind = MapKind::kMerge;
  std::vector<Polyline> lanes;
  std::vector<std::vector<int>> successors;
  double speed_limit = 12.0;
  // Lanes forming a closed ring, in travel order (roundabout only).
  std::vector<int> ring;

  // Axis-aligned bounds of all lane points: {min, max}.
  std::pair<Vec2, Vec2> bounds() const;
  // Throws Error if a polyline or successor invariant is violated.
  void validate() const;
};

// Deterministic procedural map for (kind, seed).
RoadMap build_map(MapKind kind, std::uint64_t seed);

// Rigid transform of every lane: rotate by `angle` then translate.
RoadMap transform_map(const RoadMap& map, double angle, Vec2 offset);

// CSV with header lane_id,point_index,x,y.
void export_map_csv(const RoadMap& map, std::ostream& out);

// Lane sequence from `from` to `to` through the successor graph (fewest
// lanes, ties broken by length). Empty when unreachable.
std::vector<int> find_lane_path(const RoadMap& map, int from, int to);

// Concatenated centerline of a lane sequence.
Polyline concat_lanes(const RoadMap& map, std::span<const int> lanes);

}  // namespace tcce

#endif  // TCCE_ROAD_MAP_H_
