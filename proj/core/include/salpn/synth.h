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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "salpn/geometry.h"
#include "salpn/tensor.h"

namespace salpn {

using Rgb = std::array<float, 3>;

// Ground meters covered by the full image width per meter of camera height.
inline constexpr double kFootprintPerMeter = 1.0;

inline constexpr std::uint16_t kBackgroundId = 0;
inline constexpr std::uint16_t kTargetId = 1;

struct SceneObject {
  std::uint16_t id = 0;
  double center_x = 0.0;  // meters, +x to the right
  double center_y = 0.0;  // meters, +y down the image
  double half_width = 0.0;
  double half_height = 0.0;
  Rgb color{};
  // Low-contrast stripe texture on the roof, world-anchored.
  double stripe_period = 0.0;
  float stripe_contrast = 0.0f;
};

struct GroundWave {
  double kx = 0.0;  // radians per meter
  double ky = 0.0;
  double phase = 0.0;
  Rgb amplitude{};
};

struct GroundTexture {
  Rgb base{};
  std::vector<GroundWave> waves;
};

struct SceneParams {
  double extent_m = 200.0;  // objects lie within [-extent, extent]^2
  int num_objects = 40;
  double min_object_m = 6.0;
  double max_object_m = 26.0;
  double min_target_m = 30.0;
  double max_target_m = 50.0;
};

struct WorldScene {
  std::uint64_t seed = 0;
  int class_id = 0;
  GroundTexture ground;
  std::vector<SceneObject> objects;  // painter's order; the target is last
  double extent_m = 0.0;

  const SceneObject& target() const { return objects.back(); }
};

WorldScene generate_scene(std::uint64_t seed, int class_id, const SceneParams& params = {});

// Per-view nuisance: camera offset and photometric changes. The default is a
// clean nadir render.
struct ViewStyle {
  double offset_x = 0.0;  // meters
  double offset_y = 0.0;
  float gain = 1.0f;
  float bias = 0.0f;
  Rgb tint{1.0f, 1.0f, 1.0f};
  float noise = 0.0f;  // amplitude of deterministic per-pixel noise
  std::uint64_t noise_seed = 0;
};

struct RenderedView {
  Image image;
  std::vector<std::uint16_t> label_map;  // row-major object ids, 0 = ground
  double height = 0.0;
  int class_id = 0;

  int resolution() const { return image.height(); }
  std::uint16_t label(int y, int x) const {
    return label_map[static_cast<std::size_t>(y) * image.width() + x];
  }
};

// Orthographic top-down render of a kFootprintPerMeter * height square of
// ground centered on the origin (plus style offset).
RenderedView render_view(const WorldScene& scene, double height, int resolution,
                         const ViewStyle& style = {});

enum class ViewRole { kDrone, kSatellite };
std::string to_string(ViewRole role);
ViewRole parse_role(const std::string& s);

enum class Split { kTrain, kTest };
std::string to_string(Split split);
Split parse_split(const std::string& s);

struct ViewRecord {
  std::string path;  // relative to the manifest directory
  int class_id = 0;
  ViewRole role = ViewRole::kDrone;
  double height_m = 0.0;
  Split split = Split::kTrain;
  int delta_p = 0;           // augmentation applied, 0 for rendered views
  double source_height_m = 0.0;  // height the view was rendered at
  std::string labels_path;       // optional 16-bit label map, relative
};

struct DatasetSpec {
  std::uint64_t seed = 1;
  int num_classes = 20;
  std::vector<double> drone_heights;
  double sat_height = 189.75;
  int resolution = 512;
  double train_fraction = 0.5;
  SceneParams scene;
  // Nuisance strength for drone views: camera offset as a fraction of the
  // footprint, photometric jitter and noise amplitude.
  double drone_offset_frac = 0.03;
  double photometric_jitter = 0.08;
  double noise = 0.02;
};

struct DatasetManifest {
  DatasetSpec spec;
  std::vector<ViewRecord> views;

  std::vector<int> classes(Split split) const;
  std::string to_jsonl() const;
  std::string content_hash() const;
};

// One satellite view per class plus one drone view per listed height. Class
// ids are shuffled into disjoint train and test splits.
DatasetManifest make_dataset(const DatasetSpec& spec);

// Renders the view a manifest record refers to (delta_p must be 0).
RenderedView render_record(const DatasetSpec& spec, const ViewRecord& record);

ViewStyle view_style(const DatasetSpec& spec, const ViewRecord& record);

nlohmann::json to_json(const ViewRecord& r);
ViewRecord view_record_from_json(const nlohmann::json& j);
std::vector<ViewRecord> parse_manifest_jsonl(const std::string& text);

inline constexpr int kHandcraftedStats = 10;

// Per-cell statistics (RGB means, RGB standard deviations, horizontal and
// vertical gradient magnitudes, two-bin hue histogram) projected to
// `channels` by a fixed seeded non-negative random matrix. Output is
// channels x grid x grid.
Tensor3 handcrafted_features(const Image& img, int grid, int channels);

// The raw kHandcraftedStats x grid x grid statistics before projection.
Tensor3 cell_statistics(const Image& img, int grid);

struct AlignmentScore {
  std::vector<double> per_part;
  double mean = 0.0;
};

inline constexpr double kCoverageThreshold = 0.01;

// Square row-major label map borrowed from a view.
struct LabelView {
  std::span<const std::uint16_t> labels;
  int resolution = 0;

  std::uint16_t at(int y, int x) const {
    return labels[static_cast<std::size_t>(y) * resolution + x];
  }
};

// Jaccard similarity of the object-id sets covering each partition pair.
// Plans are in feature-map pixels; view resolution must be a multiple of
// plan.map_size.
AlignmentScore partition_alignment_iou(const PartitionPlan& plan_d, const RenderedView& view_d,
                                       const PartitionPlan& plan_s, const RenderedView& view_s,
                                       double coverage = kCoverageThreshold);
AlignmentScore partition_alignment_iou(const PartitionPlan& plan_d, LabelView view_d,
                                       const PartitionPlan& plan_s, LabelView view_s,
                                       double coverage = kCoverageThreshold);

// Width in pixels of the target along the central row of the label map.
int target_pixel_width(const RenderedView& view);

}  // namespace salpn
