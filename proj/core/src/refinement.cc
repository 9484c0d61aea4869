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

#include "salpn/refinement.h"

#include "salpn/io.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace salpn {
namespace {

double distance(DistanceMetric m, double du, double dv) {
  du = std::abs(du);
  dv = std::abs(dv);
  switch (m) {
    case DistanceMetric::kChebyshev:
      return std::max(du, dv);
    case DistanceMetric::kEuclidean:
      return std::sqrt(du * du + dv * dv);
    case DistanceMetric::kManhattan:
      return du + dv;
  }
  return 0.0;
}

std::vector<double> channel_mean_map(const Tensor3& part) {
  std::vector<double> mean(part.plane_size(), 0.0);
  for (int c = 0; c < part.channels(); ++c) {
    const auto p = part.plane(c);
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i];
  }
  for (auto& v : mean) v /= part.channels();
  return mean;
}

std::vector<double> minmax_normalize(const std::vector<double>& a) {
  const auto [lo_it, hi_it] = std::minmax_element(a.begin(), a.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(a.size(), 0.5);
  const double range = hi - lo;
  if (!(range > 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi))))) return out;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::clamp((a[i] - lo) / range, 0.0, 1.0);
  return out;
}

}  // namespace

std::string_view to_string(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::kChebyshev:
      return "chebyshev";
    case DistanceMetric::kEuclidean:
      return "euclidean";
    case DistanceMetric::kManhattan:
      return "manhattan";
  }
  return "unknown";
}

DistanceMetric parse_metric(std::string_view name) {
  if (name == "chebyshev") return DistanceMetric::kChebyshev;
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  if (name == "manhattan") return DistanceMetric::kManhattan;
  throw std::invalid_argument("unknown distance metric '" + std::string(name) +
                              "' (expected chebyshev, euclidean or manhattan)");
}

CoordinateMap coordinate_map(int h, int w, DistanceMetric metric) {
  if (h < 1 || w < 1) throw std::invalid_argument("coordinate_map: size must be >= 1");
  CoordinateMap cm{h, w, metric, std::vector<float>(static_cast<std::size_t>(h) * w)};
  const double cu = (h - 1) / 2.0;
  const double cv = (w - 1) / 2.0;
  std::vector<double> d(cm.values.size());
  double d_min = std::numeric_limits<double>::infinity();
  double d_max = 0.0;
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < w; ++v) {
      const double dist = distance(metric, u - cu, v - cv);
      d[static_cast<std::size_t>(u) * w + v] = dist;
      d_min = std::min(d_min, dist);
      d_max = std::max(d_max, dist);
    }
  }
  // For odd sizes d_min is 0 and this is (d_max - d) / d_max; for even sizes
  // the four central pixels share the peak.
  const double span = d_max - d_min;
  for (std::size_t i = 0; i < d.size(); ++i) {
    cm.values[i] = span > 0.0 ? static_cast<float>((d_max - d[i]) / span) : 1.0f;
  }
  return cm;
}

Heatmap heatmap(const Tensor3& part, const CoordinateMap& cm) {
  if (cm.height != part.height() || cm.width != part.width()) {
    throw std::invalid_argument("heatmap: coordinate map " + std::to_string(cm.height) + "x" +
                                std::to_string(cm.width) + " does not match part " +
                                std::to_string(part.height()) + "x" +
                                std::to_string(part.width()));
  }
  const auto norm = minmax_normalize(channel_mean_map(part));
  Heatmap heat{part.height(), part.width(), std::vector<float>(norm.size())};
  for (std::size_t i = 0; i < norm.size(); ++i) {
    heat.values[i] = static_cast<float>((norm[i] + cm.values[i]) / 2.0);
  }
  return heat;
}

Heatmap heatmap_without_cm(const Tensor3& part) {
  const auto norm = minmax_normalize(channel_mean_map(part));
  Heatmap heat{part.height(), part.width(), std::vector<float>(norm.size())};
  for (std::size_t i = 0; i < norm.size(); ++i) heat.values[i] = static_cast<float>(norm[i]);
  return heat;
}

BinaryMask binarize(const Heatmap& heat, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("binarize: delta must be in [0, 1], got " + std::to_string(delta));
  }
  std::vector<unsigned char> m(heat.values.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = heat.values[i] >= delta ? 1 : 0;
  return BinaryMask(heat.height, heat.width, std::move(m));
}

SgrsOutput sgrs_split(const Tensor3& part, const BinaryMask& mask) {
  const MaskedAverage salient = masked_average(part, mask);
  const MaskedAverage background = masked_average(part, mask.complement());
  SgrsOutput out;
  out.global_vec = channel_average(part);
  out.salient_vec = salient.empty ? out.global_vec : salient.values;
  out.background_vec = background.empty ? out.global_vec : background.values;
  out.salient_count = salient.count;
  out.background_count = background.count;
  out.empty_salient = salient.empty;
  out.empty_background = background.empty;
  return out;
}

SgrsOutput refine_partition(const Tensor3& part, const SgrsConfig& config) {
  const Heatmap heat = config.use_coordinate_map
                           ? heatmap(part, coordinate_map(part.height(), part.width(), config.metric))
                           : heatmap_without_cm(part);
  return sgrs_split(part, binarize(heat, config.delta));
}

void write_heatmap_png(const std::filesystem::path& path, const Heatmap& heat) {
  GrayImage g{heat.height, heat.width, 8, std::vector<std::uint16_t>(heat.values.size())};
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = static_cast<std::uint16_t>(std::lround(std::clamp(heat.values[i], 0.0f, 1.0f) * 255.0f));
  }
  write_png_gray(path, g);
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  GrayImage g{mask.height(), mask.width(), 8, std::vector<std::uint16_t>(mask.values().size())};
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = mask.values()[i] ? 255 : 0;
  write_png_gray(path, g);
}

}  // namespace salpn
