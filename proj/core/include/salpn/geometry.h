// Copyright 2026 The salpn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "salpn/tensor.h"

namespace salpn {

// Signed pixel adjustment applied to drone-side partitions:
// theta = round(((h_drone - h_sat) / h_sat) * alpha), ties away from zero.
// Positive theta shrinks drone partitions, negative theta expands them.
int scale_factor(double h_drone, double h_sat, double alpha);

// Upper limits on alpha for a known drone height range. `shrink` keeps the
// smallest drone partition at least two pixels wide for the highest drone
// view; `expand` keeps the smallest partition inside the map for the lowest
// drone view. A degenerate side of the range reports +infinity.
struct AlphaBounds {
  double shrink = std::numeric_limits<double>::infinity();
  double expand = std::numeric_limits<double>::infinity();

  double limit() const { return shrink < expand ? shrink : expand; }
  bool admits(double alpha) const { return alpha >= 0.0 && alpha <= limit(); }
};

AlphaBounds alpha_bounds(double h_sat, double h_drone_max, double h_drone_min, int n_parts,
                         int map_size);

// Camera heights plus the adjustment factor, validated against alpha_bounds
// on construction.
class HeightModel {
 public:
  HeightModel(double h_drone, double h_sat, double alpha, double h_drone_max, double h_drone_min,
              int n_parts, int map_size);

  double h_drone() const { return h_drone_; }
  double h_sat() const { return h_sat_; }
  double alpha() const { return alpha_; }
  double h_drone_max() const { return h_drone_max_; }
  double h_drone_min() const { return h_drone_min_; }
  const AlphaBounds& bounds() const { return bounds_; }
  int theta() const { return scale_factor(h_drone_, h_sat_, alpha_); }

 private:
  double h_drone_;
  double h_sat_;
  double alpha_;
  double h_drone_max_;
  double h_drone_min_;
  AlphaBounds bounds_;
};

struct SquareRegion {
  int row = 0;
  int col = 0;
  int side = 0;

  bool contains(int r, int c) const {
    return r >= row && r < row + side && c >= col && c < col + side;
  }
  bool contains(const SquareRegion& o) const {
    return o.row >= row && o.col >= col && o.row + o.side <= row + side &&
           o.col + o.side <= col + side;
  }
  long long area() const { return static_cast<long long>(side) * side; }

  friend bool operator==(const SquareRegion&, const SquareRegion&) = default;
};

// N concentric squares over a square map, innermost first.
struct PartitionPlan {
  int map_size = 0;
  int theta = 0;
  std::vector<SquareRegion> parts;
  std::vector<bool> part_clamped;  // side was clamped into [2, map_size]
  // Set when theta violated an alpha bound: a side fell below 2 pixels, or
  // the innermost square was pushed past the map edge.
  bool warning = false;

  bool clamped() const;
  std::vector<int> sides() const;

  friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

inline constexpr int kMinPartitionSide = 2;

PartitionPlan plan_sps(int map_size, int n_parts);
PartitionPlan plan_haas(int map_size, int n_parts, int theta);

// Baseline ring template: part n minus part n-1 of the square plan.
struct RingRegion {
  SquareRegion outer;
  SquareRegion inner;  // side 0 for the innermost ring

  bool contains(int r, int c) const {
    return outer.contains(r, c) && !(inner.side > 0 && inner.contains(r, c));
  }
  long long pixel_count() const { return outer.area() - (inner.side > 0 ? inner.area() : 0); }
};

std::vector<RingRegion> plan_square_ring(int map_size, int n_parts);

// Slices every part of the plan out of a square feature map.
std::vector<Tensor3> extract_partitions(const Tensor3& t, const PartitionPlan& plan);

nlohmann::json to_json(const PartitionPlan& plan);
PartitionPlan plan_from_json(const nlohmann::json& j);

}  // namespace salpn
