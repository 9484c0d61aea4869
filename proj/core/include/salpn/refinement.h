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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "salpn/tensor.h"

namespace salpn {

enum class DistanceMetric { kChebyshev, kEuclidean, kManhattan };

std::string_view to_string(DistanceMetric m);
DistanceMetric parse_metric(std::string_view name);

// Center prior in [0, 1]: 1 at the pixel(s) nearest the map center, 0 at the
// farthest pixel(s).
struct CoordinateMap {
  int height = 0;
  int width = 0;
  DistanceMetric metric = DistanceMetric::kChebyshev;
  std::vector<float> values;

  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct Heatmap {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Global, salient and background descriptors of one partition.
struct SgrsOutput {
  std::vector<float> global_vec;
  std::vector<float> salient_vec;
  std::vector<float> background_vec;
  std::size_t salient_count = 0;
  std::size_t background_count = 0;
  bool empty_salient = false;
  bool empty_background = false;
};

CoordinateMap coordinate_map(int h, int w, DistanceMetric metric = DistanceMetric::kChebyshev);

// heat = (minmax(channel_mean(part)) + cm) / 2. A spatially constant channel
// mean normalizes to 0.5.
Heatmap heatmap(const Tensor3& part, const CoordinateMap& cm);

// Variant without the center prior: heat = minmax(channel_mean(part)).
Heatmap heatmap_without_cm(const Tensor3& part);

BinaryMask binarize(const Heatmap& heat, double delta);

SgrsOutput sgrs_split(const Tensor3& part, const BinaryMask& mask);

struct SgrsConfig {
  double delta = 0.5;
  DistanceMetric metric = DistanceMetric::kChebyshev;
  bool use_coordinate_map = true;
};

// heatmap -> binarize -> split, for one partition.
SgrsOutput refine_partition(const Tensor3& part, const SgrsConfig& config);

// 8-bit grayscale exports for inspection.
void write_heatmap_png(const std::filesystem::path& path, const Heatmap& heat);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace salpn
