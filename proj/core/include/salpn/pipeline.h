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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "salpn/geometry.h"
#include "salpn/model.h"
#include "salpn/refinement.h"
#include "salpn/retrieval.h"
#include "salpn/synth.h"
#include "salpn/tensor.h"

namespace salpn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int n_parts = 4;
  double alpha = 14.0;
  double delta = 0.5;
  DistanceMetric cm_metric = DistanceMetric::kChebyshev;
  bool use_coordinate_map = true;
  bool use_haas = true;
  double h_sat = 189.75;
  double h_drone_min = 18.5;
  double h_drone_max = 361.0;
  int map_size = 128;
  int image_size = 512;
  int feature_grid = 32;  // map_size / 4
  int feature_channels = 32;
  int d_mid = 16;
  double dropout_rate = 0.0;
  bool l2_normalize = false;
  double lambda_aug = 0.7;
  std::uint64_t seed = 1;
  std::vector<int> k_list{1, 5, 10};
  std::vector<int> delta_p_list;  // augmented evaluation sets
  TrainConfig train;
  std::map<std::string, std::string> paths;

  // Throws ConfigError with a message naming the offending field.
  void validate() const;
  AlphaBounds bounds() const;
  SgrsConfig sgrs() const;
};

nlohmann::json to_json(const RunConfig& c);
// Missing keys keep their defaults. Validates the result.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
// SALPN_SEED, when set, replaces the config seed.
void apply_environment(RunConfig& c);

// H_S = H_ref * (gsd_sat / gsd_ref) under a linear pinhole model.
double estimate_satellite_height(double h_ref, double gsd_ref, double gsd_sat);

// Drone theta for a recorded height; 0 for satellite views or with HAAS off.
int view_theta(const RunConfig& c, const ViewRecord& r);

struct PlanReport {
  double h_drone = 0.0;
  int theta = 0;
  AlphaBounds bounds;
  PartitionPlan drone;
  PartitionPlan satellite;
};

PlanReport make_plan_report(const RunConfig& c, double h_drone);
nlohmann::json to_json(const PlanReport& r);

// A view with pixels in memory. `labels` is empty when no label map exists.
struct LoadedView {
  ViewRecord record;
  Image image;
  std::vector<std::uint16_t> labels;
  std::optional<Tensor3> features;  // externally computed FMAP1 grid
};

// Views produced on demand, so large datasets never need to be resident at
// once. `load(i)` must be safe to call concurrently.
struct ViewSource {
  std::vector<ViewRecord> records;
  std::function<LoadedView(std::size_t)> load;

  std::size_t size() const { return records.size(); }
};

ViewSource rendered_views(const DatasetManifest& manifest);
// PNG views (or .fmap feature grids) relative to the manifest directory.
ViewSource manifest_views(const std::filesystem::path& manifest_path);
// Borrows `views`; they must outlive the source.
ViewSource memory_views(const std::vector<LoadedView>& views);
std::vector<LoadedView> materialize(const ViewSource& source);

std::vector<LoadedView> render_dataset(const DatasetManifest& manifest);
std::vector<LoadedView> load_views(const std::filesystem::path& manifest_path);
// Writes PNGs, 16-bit label maps and manifest.jsonl into `dir`.
void write_dataset(const DatasetManifest& manifest, const std::vector<LoadedView>& views,
                   const std::filesystem::path& dir);
void write_dataset(const DatasetManifest& manifest, const ViewSource& source,
                   const std::filesystem::path& dir);

// Height-augmented copies of the drone views; records carry delta_p and the
// adjusted height. Label maps are transformed with nearest sampling.
std::vector<LoadedView> augment_views(const std::vector<LoadedView>& views, int delta_p,
                                      double lambda_aug);

// Writes one self-contained test set per delta_p under `out_dir`, plus
// augment_manifest.json recording delta_p and adjusted height per image.
void write_augmented_sets(const std::vector<LoadedView>& views, const std::vector<int>& delta_ps,
                          double lambda_aug, const std::filesystem::path& out_dir);

// Feature grid of one image, resized to image_size first when needed.
Tensor3 feature_grid(const RunConfig& c, const Image& img);
PartFeatures describe(const RunConfig& c, const Tensor3& grid, int theta);

struct EncodedView {
  ViewRecord record;
  Tensor3 grid;
  std::optional<Tensor3> flipped_grid;
  std::vector<std::uint16_t> labels;
  int resolution = 0;
};

std::vector<EncodedView> encode_views(const RunConfig& c, const std::vector<LoadedView>& views,
                                      bool with_flips, bool keep_labels);

struct TrainedModel {
  HeadBank bank;
  std::map<int, int> label_of_class;  // class id -> 1-based label
  TrainReport report;
};

TrainedModel train_model(const RunConfig& c, const std::vector<EncodedView>& train_views);

std::vector<EmbeddingRecord> embed(const RunConfig& c, const HeadBank& bank,
                                   const std::vector<EncodedView>& views);

// Encoded inputs shared by every configuration that keeps the feature
// extractor fixed (sweeps, ablations).
struct PreparedData {
  std::vector<EncodedView> train;
  std::vector<EncodedView> gallery;        // test satellite views
  std::vector<EncodedView> queries;        // test drone views, all heights
  std::vector<EncodedView> middle;         // test drone views nearest h_sat
  std::map<int, std::vector<EncodedView>> shifted;  // delta_p -> augmented middle set
  std::string input_hash;
};

// Encodes the source in bounded chunks; only the middle drone images stay
// resident for augmentation.
PreparedData prepare_data(const RunConfig& c, const ViewSource& source,
                          const std::vector<int>& delta_ps);
PreparedData prepare_data(const RunConfig& c, const std::vector<LoadedView>& views,
                          const std::vector<int>& delta_ps);

struct SetResult {
  std::string name;
  int delta_p = 0;
  MetricsReport metrics;
};

struct PipelineResult {
  std::vector<SetResult> sets;
  double mean_r1 = 0.0;
  double mean_ap = 0.0;
  std::optional<double> alignment_iou;
  TrainReport train;
  nlohmann::json report;

  double r1(const std::string& set_name) const;
  // (|delta_p|, R@1) over the middle set and the shifted sets, by |delta_p|.
  std::vector<std::pair<int, double>> degradation_curve() const;
};

PipelineResult run_prepared(const RunConfig& c, const PreparedData& data);
PipelineResult run_pipeline(const RunConfig& c, const std::vector<LoadedView>& views);
PipelineResult run_pipeline(const RunConfig& c, const ViewSource& source);

// Mean partition IoU between test drone queries and their class's satellite
// view under the configured plans. Nullopt without label maps.
std::optional<double> mean_alignment_iou(const RunConfig& c, const PreparedData& data);

double spearman(const std::vector<double>& x, const std::vector<double>& y);

std::string degradation_svg(const std::vector<std::pair<std::string, std::vector<std::pair<int, double>>>>& curves);

struct SweepCell {
  double alpha = 0.0;
  int delta_p = 0;
  double r1 = 0.0;
};

std::vector<SweepCell> sweep_alpha(const RunConfig& c, const PreparedData& data,
                                   const std::vector<double>& alphas);
std::string sweep_csv(const std::vector<SweepCell>& cells);

}  // namespace salpn
