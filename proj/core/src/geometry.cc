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

#include "salpn/geometry.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace salpn {
namespace {

void check_plan_args(int map_size, int n_parts) {
  if (map_size < 2) throw std::invalid_argument("partition plan: map_size must be >= 2");
  if (n_parts < 1 || n_parts > map_size / 2) {
    throw std::invalid_argument("partition plan: n_parts must be in [1, " +
                                std::to_string(map_size / 2) + "], got " +
                                std::to_string(n_parts));
  }
}

int uniform_side(int map_size, int n_parts, int n) {
  return static_cast<int>(std::lround(static_cast<double>(map_size) * n / n_parts));
}

SquareRegion centered(int map_size, int side) {
  const int offset = (map_size - side) / 2;  // floors when map_size - side is odd
  return {offset, offset, side};
}

}  // namespace

int scale_factor(double h_drone, double h_sat, double alpha) {
  if (!(h_sat > 0.0)) throw std::invalid_argument("scale_factor: h_sat must be > 0");
  // std::lround rounds halfway cases away from zero.
  return static_cast<int>(std::lround((h_drone - h_sat) / h_sat * alpha));
}

AlphaBounds alpha_bounds(double h_sat, double h_drone_max, double h_drone_min, int n_parts,
                         int map_size) {
  if (!(h_sat > 0.0)) throw std::invalid_argument("alpha_bounds: h_sat must be > 0");
  if (n_parts < 1) throw std::invalid_argument("alpha_bounds: n_parts must be >= 1");
  if (map_size < 2) throw std::invalid_argument("alpha_bounds: map_size must be >= 2");
  if (h_drone_max < h_sat || h_drone_min > h_sat) {
    throw std::invalid_argument("alpha_bounds: need h_drone_min <= h_sat <= h_drone_max");
  }
  const double half = map_size / 2.0;
  const double n = n_parts;
  AlphaBounds b;
  if (h_drone_max > h_sat) b.shrink = (half - n) / n * h_sat / (h_drone_max - h_sat);
  if (h_sat > h_drone_min) b.expand = half * (n - 1.0) / n * h_sat / (h_sat - h_drone_min);
  return b;
}

HeightModel::HeightModel(double h_drone, double h_sat, double alpha, double h_drone_max,
                         double h_drone_min, int n_parts, int map_size)
    : h_drone_(h_drone),
      h_sat_(h_sat),
      alpha_(alpha),
      h_drone_max_(h_drone_max),
      h_drone_min_(h_drone_min),
      bounds_(alpha_bounds(h_sat, h_drone_max, h_drone_min, n_parts, map_size)) {
  if (h_drone < h_drone_min || h_drone > h_drone_max) {
    throw std::invalid_argument("HeightModel: h_drone " + std::to_string(h_drone) +
                                " outside [" + std::to_string(h_drone_min) + ", " +
                                std::to_string(h_drone_max) + "]");
  }
  if (!bounds_.admits(alpha)) {
    throw std::invalid_argument("HeightModel: alpha " + std::to_string(alpha) +
                                " not admissible (shrink bound " + std::to_string(bounds_.shrink) +
                                ", expand bound " + std::to_string(bounds_.expand) + ")");
  }
}

bool PartitionPlan::clamped() const {
  return std::any_of(part_clamped.begin(), part_clamped.end(), [](bool b) { return b; });
}

std::vector<int> PartitionPlan::sides() const {
  std::vector<int> out;
  out.reserve(parts.size());
  for (const auto& p : parts) out.push_back(p.side);
  return out;
}

PartitionPlan plan_sps(int map_size, int n_parts) { return plan_haas(map_size, n_parts, 0); }

PartitionPlan plan_haas(int map_size, int n_parts, int theta) {
  check_plan_args(map_size, n_parts);
  PartitionPlan plan;
  plan.map_size = map_size;
  plan.theta = theta;
  plan.parts.reserve(n_parts);
  plan.part_clamped.reserve(n_parts);
  for (int n = 1; n <= n_parts; ++n) {
    const int raw = uniform_side(map_size, n_parts, n) - 2 * theta;
    const int side = std::clamp(raw, kMinPartitionSide, map_size);
    plan.parts.push_back(centered(map_size, side));
    plan.part_clamped.push_back(side != raw);
    if (raw < kMinPartitionSide) plan.warning = true;
    if (n == 1 && raw > map_size) plan.warning = true;
  }
  return plan;
}

std::vector<RingRegion> plan_square_ring(int map_size, int n_parts) {
  const PartitionPlan squares = plan_sps(map_size, n_parts);
  std::vector<RingRegion> rings;
  rings.reserve(squares.parts.size());
  SquareRegion inner{0, 0, 0};
  for (const auto& outer : squares.parts) {
    rings.push_back({outer, inner});
    inner = outer;
  }
  return rings;
}

std::vector<Tensor3> extract_partitions(const Tensor3& t, const PartitionPlan& plan) {
  if (t.height() != plan.map_size || t.width() != plan.map_size) {
    throw std::invalid_argument("extract_partitions: plan map_size " +
                                std::to_string(plan.map_size) + " does not match " +
                                std::to_string(t.height()) + "x" + std::to_string(t.width()) +
                                " feature map");
  }
  std::vector<Tensor3> out;
  out.reserve(plan.parts.size());
  for (const auto& r : plan.parts) out.push_back(crop(t, r.row, r.col, r.side));
  return out;
}

nlohmann::json to_json(const PartitionPlan& plan) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& r : plan.parts) parts.push_back({{"row", r.row}, {"col", r.col}, {"side", r.side}});
  return {{"map_size", plan.map_size},
          {"theta", plan.theta},
          {"parts", parts},
          {"clamped", plan.clamped()},
          {"warning", plan.warning}};
}

PartitionPlan plan_from_json(const nlohmann::json& j) {
  PartitionPlan plan;
  plan.map_size = j.at("map_size").get<int>();
  plan.theta = j.at("theta").get<int>();
  for (const auto& p : j.at("parts")) {
    SquareRegion r{p.at("row").get<int>(), p.at("col").get<int>(), p.at("side").get<int>()};
    if (r.side < 1 || r.row < 0 || r.col < 0 || r.row + r.side > plan.map_size ||
        r.col + r.side > plan.map_size) {
      throw std::invalid_argument("plan_from_json: region outside map");
    }
    plan.parts.push_back(r);
  }
  // Per-part flags are not serialized; recover them from the uniform template.
  plan.part_clamped.assign(plan.parts.size(), false);
  if (j.value("clamped", false) && !plan.parts.empty()) {
    const int n_parts = static_cast<int>(plan.parts.size());
    for (int n = 1; n <= n_parts; ++n) {
      const int raw = uniform_side(plan.map_size, n_parts, n) - 2 * plan.theta;
      plan.part_clamped[n - 1] = raw != plan.parts[n - 1].side;
    }
  }
  plan.warning = j.value("warning", false);
  return plan;
}

}  // namespace salpn
