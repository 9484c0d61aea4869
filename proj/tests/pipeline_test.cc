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

#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "salpn/io.h"
#include "salpn/pipeline.h"

namespace salpn {
namespace {

namespace fs = std::filesystem;

RunConfig small_config() {
  RunConfig c;
  c.image_size = 128;
  c.feature_grid = 16;
  c.map_size = 64;
  c.feature_channels = 16;
  c.alpha = 7.0;  // the 64-pixel map admits alpha up to 7.76
  c.train.epochs = 30;
  c.train.lr_decay_epoch = 20;
  c.train.lr_heads = 0.01;
  c.delta_p_list = {-20, 20};
  c.validate();
  return c;
}

DatasetManifest small_manifest(int classes = 10) {
  DatasetSpec spec;
  spec.num_classes = classes;
  spec.drone_heights = {150.0, 189.75, 230.0};
  spec.resolution = 128;
  return make_dataset(spec);
}

const std::vector<LoadedView>& small_views() {
  static const std::vector<LoadedView> views = render_dataset(small_manifest());
  return views;
}

TEST(RunConfig, DefaultValues) {
  const RunConfig c;
  EXPECT_EQ(c.n_parts, 4);
  EXPECT_EQ(c.alpha, 14.0);
  EXPECT_EQ(c.delta, 0.5);
  EXPECT_EQ(c.cm_metric, DistanceMetric::kChebyshev);
  EXPECT_EQ(c.h_sat, 189.75);
  EXPECT_EQ(c.image_size, 512);
  EXPECT_EQ(c.map_size, 128);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, JsonLoadAndValidation) {
  const RunConfig c = run_config_from_json({{"alpha", 10.0}, {"cm_metric", "euclidean"}, {"train", {{"epochs", 5}, {"lr_decay_epoch", 2}}}});
  EXPECT_EQ(c.alpha, 10.0);
  EXPECT_EQ(c.cm_metric, DistanceMetric::kEuclidean);
  EXPECT_EQ(c.train.epochs, 5);
  EXPECT_EQ(run_config_from_json(to_json(c)).alpha, 10.0);
  EXPECT_THROW(run_config_from_json({{"alhpa", 1}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"map_size", 100}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"delta", 1.5}}), ConfigError);
  try {
    run_config_from_json({{"alpha", 17.0}});
    FAIL() << "alpha 17 accepted";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("16.62"), std::string::npos) << msg;
    EXPECT_NE(msg.find("53.19"), std::string::npos) << msg;
  }
}

TEST(RunConfig, EnvironmentSeedOverride) {
  RunConfig c;
  ::setenv("SALPN_SEED", "77", 1);
  apply_environment(c);
  EXPECT_EQ(c.seed, 77u);
  ::setenv("SALPN_SEED", "seven", 1);
  EXPECT_THROW(apply_environment(c), ConfigError);
  ::unsetenv("SALPN_SEED");
}

TEST(Plan, DefaultsAtTwoFiftySix) {
  const PlanReport r = make_plan_report(RunConfig{}, 256);
  EXPECT_EQ(r.theta, 5);
  EXPECT_EQ(r.drone.sides(), (std::vector<int>{22, 54, 86, 118}));
  EXPECT_EQ(r.satellite.sides(), (std::vector<int>{32, 64, 96, 128}));
  const auto j = to_json(r);
  EXPECT_EQ(j["drone"]["clamped"], false);
  EXPECT_NEAR(j["alpha_bounds"]["shrink"].get<double>(), 16.62, 0.01);
}

TEST(Plan, SatelliteHeightGivesIdenticalPlans) {
  const PlanReport r = make_plan_report(RunConfig{}, 189.75);
  EXPECT_EQ(r.theta, 0);
  EXPECT_EQ(r.drone, r.satellite);
}

TEST(Plan, NoHaasForcesZeroTheta) {
  RunConfig c;
  c.use_haas = false;
  EXPECT_EQ(make_plan_report(c, 300).theta, 0);
  ViewRecord r;
  r.role = ViewRole::kDrone;
  r.height_m = 300;
  EXPECT_EQ(view_theta(c, r), 0);
  c.use_haas = true;
  EXPECT_GT(view_theta(c, r), 0);
  r.role = ViewRole::kSatellite;
  EXPECT_EQ(view_theta(c, r), 0);
}

TEST(SatelliteHeight, LinearInGroundSampling) {
  EXPECT_DOUBLE_EQ(estimate_satellite_height(100, 0.2, 0.4), 200);
  EXPECT_THROW(estimate_satellite_height(100, 0, 0.4), std::invalid_argument);
}

TEST(Describe, ShapesFollowPlan) {
  const RunConfig c = small_config();
  const Tensor3 grid = feature_grid(c, small_views()[0].image);
  EXPECT_EQ(grid.channels(), 16);
  EXPECT_EQ(grid.height(), 16);
  const PartFeatures f = describe(c, grid, 3);
  ASSERT_EQ(f.size(), 4u);
  for (const auto& o : f) EXPECT_EQ(o.global_vec.size(), 16u);
  EXPECT_EQ(f[0].salient_count + f[0].background_count, 10u * 10u);  // 16 - 6
  EXPECT_THROW(describe(c, Tensor3(16, 8, 8), 0), std::invalid_argument);
}

TEST(Augment, ShiftedViewsRelabelHeights) {
  const auto shifted = augment_views(small_views(), 20, 0.7);
  std::size_t drones = 0;
  for (const auto& v : small_views()) drones += v.record.role == ViewRole::kDrone;
  ASSERT_EQ(shifted.size(), drones);
  for (const auto& v : shifted) {
    EXPECT_EQ(v.record.delta_p, 20);
    EXPECT_DOUBLE_EQ(v.record.height_m, v.record.source_height_m + 14.0);
    EXPECT_EQ(v.image.height(), 128);
    EXPECT_EQ(v.labels.size(), 128u * 128u);
    EXPECT_NE(v.record.path.find("_dp+20"), std::string::npos);
  }
}

TEST(Pipeline, SmokeRunRetrievesEveryTestClass) {
  const PipelineResult r = run_pipeline(small_config(), small_views());
  EXPECT_DOUBLE_EQ(r.r1("middle"), 1.0);
  EXPECT_DOUBLE_EQ(r.r1("all"), 1.0);
  EXPECT_EQ(r.sets.size(), 4u);
  ASSERT_TRUE(r.alignment_iou.has_value());
  EXPECT_GT(*r.alignment_iou, 0.0);
  EXPECT_EQ(r.report["seed"], 1);
  EXPECT_EQ(r.report["input_hash"].get<std::string>().size(), 64u);
  EXPECT_EQ(r.degradation_curve().size(), 3u);
}

TEST(Pipeline, DeterministicReport) {
  const RunConfig c = small_config();
  const std::string a = sha256_hex(run_pipeline(c, small_views()).report.dump());
  const std::string b = sha256_hex(run_pipeline(c, small_views()).report.dump());
  EXPECT_EQ(a, b);
}

TEST(Pipeline, StreamedSourceMatchesInMemoryViews) {
  const RunConfig c = small_config();
  const PreparedData a = prepare_data(c, small_views(), c.delta_p_list);
  const PreparedData b = prepare_data(c, rendered_views(small_manifest()), c.delta_p_list);
  EXPECT_EQ(a.input_hash, b.input_hash);
  ASSERT_EQ(a.queries.size(), b.queries.size());
  for (std::size_t i = 0; i < a.queries.size(); ++i) {
    EXPECT_EQ(a.queries[i].record.path, b.queries[i].record.path);
    EXPECT_EQ(a.queries[i].grid, b.queries[i].grid);
  }
  ASSERT_EQ(a.shifted.size(), b.shifted.size());
  EXPECT_EQ(a.shifted.at(20)[0].grid, b.shifted.at(20)[0].grid);
  EXPECT_EQ(a.train.size(), b.train.size());
}

TEST(Pipeline, EvaluationNeedsTestViews) {
  RunConfig c = small_config();
  std::vector<LoadedView> train_only;
  for (const auto& v : small_views()) {
    if (v.record.split == Split::kTrain) train_only.push_back(v);
  }
  const PreparedData d = prepare_data(c, train_only, {});
  EXPECT_FALSE(d.train.empty());
  EXPECT_THROW(run_prepared(c, d), std::invalid_argument);
}

TEST(Sweep, ZeroAlphaMatchesNoHaasAndCountsCells) {
  RunConfig c = small_config();
  c.delta_p_list = {0, 20};
  const PreparedData data = prepare_data(c, small_views(), c.delta_p_list);
  const auto cells = sweep_alpha(c, data, {0.0, 7.0});
  ASSERT_EQ(cells.size(), 4u);
  RunConfig off = c;
  off.use_haas = false;
  const PipelineResult r = run_prepared(off, data);
  EXPECT_DOUBLE_EQ(cells[0].r1, r.r1("middle"));
  EXPECT_DOUBLE_EQ(cells[1].r1, r.r1("dp+20"));
  const std::string csv = sweep_csv(cells);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.substr(0, 16), "alpha,delta_p,r1");
  EXPECT_THROW(sweep_alpha(c, data, {8.0}), ConfigError);
}

TEST(Stats, Spearman) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {5, 5, 5}), 0.0);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 1, 0.5, 0.5}), -0.8944271909999159, 1e-12);
}

TEST(Plot, SvgHasOnePolylinePerCurve) {
  const std::string svg = degradation_svg({{"a", {{0, 1.0}, {50, 0.8}}}, {"b", {{0, 0.9}, {50, 0.7}}}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  std::size_t n = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++n;
  EXPECT_EQ(n, 2u);
}

TEST(Files, DatasetAndAugmentedSetsRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "salpn_pipeline_files";
  fs::remove_all(dir);
  const DatasetManifest m = small_manifest(4);
  const auto views = render_dataset(m);
  write_dataset(m, views, dir / "data");
  const auto loaded = load_views(dir / "data" / "manifest.jsonl");
  ASSERT_EQ(loaded.size(), views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    EXPECT_EQ(loaded[i].labels, views[i].labels);
    for (std::size_t k = 0; k < views[i].image.pixels().size(); k += 101) {
      EXPECT_NEAR(loaded[i].image.pixels()[k], views[i].image.pixels()[k], 0.5 / 255 + 1e-6);
    }
  }

  write_augmented_sets(loaded, {-30, 30}, 0.7, dir / "aug");
  const auto summary = nlohmann::json::parse(read_text_file(dir / "aug" / "augment_manifest.json"));
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[0]["delta_p"], -30);
  const auto& img = summary[1]["images"][0];
  EXPECT_DOUBLE_EQ(img["height_m"].get<double>(), img["source_height_m"].get<double>() + 21.0);
  const auto set = load_views(dir / "aug" / "dp+30" / "manifest.jsonl");
  for (const auto& v : set) EXPECT_EQ(v.record.split, Split::kTest);
  fs::remove_all(dir);
}

TEST(Files, FeatureMapIngestion) {
  const fs::path dir = fs::temp_directory_path() / "salpn_fmap_ingest";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const RunConfig c = small_config();
  std::string manifest;
  for (int i = 0; i < 2; ++i) {
    const std::string name = "v" + std::to_string(i) + ".fmap";
    write_fmap(dir / name, Tensor3(16, 16, 16, static_cast<float>(i)));
    manifest += nlohmann::json{{"path", name}, {"class_id", i + 1}, {"role", "satellite"}, {"height_m", 189.75}}.dump() + "\n";
  }
  write_text_file(dir / "manifest.jsonl", manifest);
  const auto views = load_views(dir / "manifest.jsonl");
  ASSERT_TRUE(views[1].features.has_value());
  const auto enc = encode_views(c, views, true, false);
  EXPECT_EQ(enc[1].grid.at(0, 0, 0), 1.0f);
  ASSERT_TRUE(enc[1].flipped_grid.has_value());
  RunConfig wrong = c;
  wrong.feature_channels = 8;
  EXPECT_THROW(encode_views(wrong, views, false, false), std::invalid_argument);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace salpn
