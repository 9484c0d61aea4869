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

#include "salpn/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iterator>
#include <limits>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "salpn/augment.h"
#include "salpn/io.h"
#include "salpn/parallel.h"

namespace salpn {
namespace {

namespace fs = std::filesystem;

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string fmt_double(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

Tensor3 flip_tensor(const Tensor3& t) {
  Tensor3 out(t.channels(), t.height(), t.width());
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) out.at(c, y, x) = t.at(c, y, t.width() - 1 - x);
    }
  }
  return out;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// Nearest-neighbour counterpart of simulate_height for label maps.
std::vector<std::uint16_t> simulate_height_labels(const std::vector<std::uint16_t>& labels, int res,
                                                  int delta_p) {
  const int canvas = res + 2 * delta_p;
  std::vector<std::uint16_t> out(labels.size());
  for (int y = 0; y < res; ++y) {
    const int cy = std::min(canvas - 1, static_cast<int>((y + 0.5) * canvas / res));
    const int sy = reflect(cy - delta_p, res);
    for (int x = 0; x < res; ++x) {
      const int cx = std::min(canvas - 1, static_cast<int>((x + 0.5) * canvas / res));
      const int sx = reflect(cx - delta_p, res);
      out[static_cast<std::size_t>(y) * res + x] = labels[static_cast<std::size_t>(sy) * res + sx];
    }
  }
  return out;
}

std::string augmented_path(const std::string& path, int delta_p) {
  const fs::path p(path);
  char tag[32];
  std::snprintf(tag, sizeof(tag), "_dp%+d", delta_p);
  return (p.parent_path() / (p.stem().string() + tag + p.extension().string())).generic_string();
}

std::string view_hash(const LoadedView& v) {
  std::string bytes = to_json(v.record).dump();
  if (v.features) {
    const auto* raw = reinterpret_cast<const char*>(v.features->data().data());
    bytes.append(raw, v.features->data().size() * sizeof(float));
  } else {
    bytes.reserve(bytes.size() + v.image.pixels().size());
    for (float p : v.image.pixels()) {
      bytes.push_back(static_cast<char>(std::lround(std::clamp(p, 0.0f, 1.0f) * 255.0f)));
    }
  }
  return sha256_hex(bytes);
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

std::string set_name(int delta_p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "dp%+d", delta_p);
  return buf;
}

}  // namespace

AlphaBounds RunConfig::bounds() const {
  return alpha_bounds(h_sat, h_drone_max, h_drone_min, n_parts, map_size);
}

SgrsConfig RunConfig::sgrs() const { return SgrsConfig{delta, cm_metric, use_coordinate_map}; }

void RunConfig::validate() const {
  require(n_parts >= 1, "n_parts must be >= 1, got " + std::to_string(n_parts));
  require(feature_grid >= 1, "feature_grid must be >= 1");
  require(map_size == 4 * feature_grid,
          "map_size (" + std::to_string(map_size) + ") must equal 4 * feature_grid (" +
              std::to_string(4 * feature_grid) + ")");
  require(2 * n_parts <= map_size, "n_parts " + std::to_string(n_parts) +
                                       " is too large for map_size " + std::to_string(map_size));
  require(image_size >= feature_grid && image_size % feature_grid == 0,
          "image_size (" + std::to_string(image_size) + ") must be a multiple of feature_grid (" +
              std::to_string(feature_grid) + ")");
  require(delta >= 0.0 && delta <= 1.0, "delta must be in [0, 1], got " + fmt_double(delta, 3));
  require(h_sat > 0.0 && h_drone_min > 0.0, "heights must be positive");
  require(h_drone_min <= h_sat && h_sat <= h_drone_max,
          "h_sat (" + fmt_double(h_sat) + ") must lie in the drone height range [" +
              fmt_double(h_drone_min) + ", " + fmt_double(h_drone_max) + "]");
  require(feature_channels >= 1, "feature_channels must be >= 1");
  require(d_mid >= 1, "d_mid must be >= 1");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must be in [0, 1)");
  require(lambda_aug >= 0.0, "lambda_aug must be >= 0");
  require(!k_list.empty(), "k_list must not be empty");
  for (int k : k_list) require(k >= 1, "k_list entries must be >= 1");
  const AlphaBounds b = bounds();
  require(alpha >= 0.0, "alpha must be >= 0, got " + fmt_double(alpha));
  require(b.admits(alpha), "alpha " + fmt_double(alpha) + " exceeds the admissible limit " +
                               fmt_double(b.limit()) + " (shrink bound " + fmt_double(b.shrink) +
                               ", expand bound " + fmt_double(b.expand) + ") for drone heights [" +
                               fmt_double(h_drone_min) + ", " + fmt_double(h_drone_max) + "]");
  try {
    train.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"n_parts", c.n_parts},
          {"alpha", c.alpha},
          {"delta", c.delta},
          {"cm_metric", std::string(to_string(c.cm_metric))},
          {"use_coordinate_map", c.use_coordinate_map},
          {"use_haas", c.use_haas},
          {"h_sat", c.h_sat},
          {"h_drone_min", c.h_drone_min},
          {"h_drone_max", c.h_drone_max},
          {"map_size", c.map_size},
          {"image_size", c.image_size},
          {"feature_grid", c.feature_grid},
          {"feature_channels", c.feature_channels},
          {"d_mid", c.d_mid},
          {"dropout_rate", c.dropout_rate},
          {"l2_normalize", c.l2_normalize},
          {"lambda_aug", c.lambda_aug},
          {"seed", c.seed},
          {"k_list", c.k_list},
          {"delta_p_list", c.delta_p_list},
          {"train", to_json(c.train)},
          {"paths", c.paths}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "n_parts",      "alpha",        "delta",       "cm_metric",        "use_coordinate_map",
      "use_haas",     "h_sat",        "h_drone_min", "h_drone_max",      "map_size",
      "image_size",   "feature_grid", "feature_channels", "d_mid",        "dropout_rate",
      "l2_normalize", "lambda_aug",   "seed",        "k_list",           "delta_p_list",
      "train",        "paths"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    c.n_parts = j.value("n_parts", c.n_parts);
    c.alpha = j.value("alpha", c.alpha);
    c.delta = j.value("delta", c.delta);
    if (j.contains("cm_metric")) c.cm_metric = parse_metric(j.at("cm_metric").get<std::string>());
    c.use_coordinate_map = j.value("use_coordinate_map", c.use_coordinate_map);
    c.use_haas = j.value("use_haas", c.use_haas);
    c.h_sat = j.value("h_sat", c.h_sat);
    c.h_drone_min = j.value("h_drone_min", c.h_drone_min);
    c.h_drone_max = j.value("h_drone_max", c.h_drone_max);
    c.feature_grid = j.value("feature_grid", c.feature_grid);
    c.map_size = j.value("map_size", 4 * c.feature_grid);
    if (!j.contains("feature_grid") && j.contains("map_size")) c.feature_grid = c.map_size / 4;
    c.image_size = j.value("image_size", c.image_size);
    c.feature_channels = j.value("feature_channels", c.feature_channels);
    c.d_mid = j.value("d_mid", c.d_mid);
    c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
    c.l2_normalize = j.value("l2_normalize", c.l2_normalize);
    c.lambda_aug = j.value("lambda_aug", c.lambda_aug);
    c.seed = j.value("seed", c.seed);
    c.k_list = j.value("k_list", c.k_list);
    c.delta_p_list = j.value("delta_p_list", c.delta_p_list);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
    c.paths = j.value("paths", c.paths);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void apply_environment(RunConfig& c) {
  const char* env = std::getenv("SALPN_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw ConfigError(std::string("SALPN_SEED is not an integer: ") + env);
  c.seed = v;
}

double estimate_satellite_height(double h_ref, double gsd_ref, double gsd_sat) {
  if (!(h_ref > 0.0 && gsd_ref > 0.0 && gsd_sat > 0.0)) {
    throw std::invalid_argument("estimate_satellite_height: inputs must be positive");
  }
  return h_ref * (gsd_sat / gsd_ref);
}

int view_theta(const RunConfig& c, const ViewRecord& r) {
  if (!c.use_haas || r.role == ViewRole::kSatellite) return 0;
  return scale_factor(r.height_m, c.h_sat, c.alpha);
}

PlanReport make_plan_report(const RunConfig& c, double h_drone) {
  if (!(h_drone > 0.0)) throw ConfigError("h_drone must be > 0");
  PlanReport r;
  r.h_drone = h_drone;
  r.bounds = c.bounds();
  r.theta = c.use_haas ? scale_factor(h_drone, c.h_sat, c.alpha) : 0;
  r.drone = plan_haas(c.map_size, c.n_parts, r.theta);
  r.satellite = plan_sps(c.map_size, c.n_parts);
  return r;
}

nlohmann::json to_json(const PlanReport& r) {
  auto bound = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return nullptr;
    return v;
  };
  return {{"h_drone", r.h_drone},
          {"theta", r.theta},
          {"alpha_bounds", {{"shrink", bound(r.bounds.shrink)}, {"expand", bound(r.bounds.expand)}}},
          {"drone", to_json(r.drone)},
          {"satellite", to_json(r.satellite)}};
}

ViewSource rendered_views(const DatasetManifest& manifest) {
  auto owned = std::make_shared<const DatasetManifest>(manifest);
  return ViewSource{owned->views, [owned](std::size_t i) {
                      const ViewRecord& r = owned->views.at(i);
                      RenderedView v = render_record(owned->spec, r);
                      return LoadedView{r, std::move(v.image), std::move(v.label_map), std::nullopt};
                    }};
}

ViewSource manifest_views(const fs::path& manifest_path) {
  auto records = parse_manifest_jsonl(read_text_file(manifest_path));
  if (records.empty()) throw IoError("manifest " + manifest_path.string() + " lists no views");
  auto owned = std::make_shared<const std::vector<ViewRecord>>(records);
  const fs::path dir = manifest_path.parent_path();
  return ViewSource{std::move(records), [owned, dir](std::size_t i) {
                      LoadedView v;
                      v.record = owned->at(i);
                      const fs::path p = dir / v.record.path;
                      if (p.extension() == ".fmap") {
                        v.features = read_fmap(p);
                        return v;
                      }
                      v.image = read_png_rgb(p);
                      if (!v.record.labels_path.empty() && fs::exists(dir / v.record.labels_path)) {
                        GrayImage g = read_png_gray(dir / v.record.labels_path);
                        if (g.height != v.image.height() || g.width != v.image.width()) {
                          throw IoError("label map " + v.record.labels_path +
                                        " does not match its image size");
                        }
                        v.labels = std::move(g.values);
                      }
                      return v;
                    }};
}

ViewSource memory_views(const std::vector<LoadedView>& views) {
  std::vector<ViewRecord> records;
  for (const auto& v : views) records.push_back(v.record);
  return ViewSource{std::move(records), [&views](std::size_t i) { return views.at(i); }};
}

std::vector<LoadedView> materialize(const ViewSource& source) {
  std::vector<LoadedView> out(source.size());
  parallel_for(out.size(), [&](std::size_t i) { out[i] = source.load(i); });
  return out;
}

std::vector<LoadedView> render_dataset(const DatasetManifest& manifest) {
  return materialize(rendered_views(manifest));
}

std::vector<LoadedView> load_views(const fs::path& manifest_path) {
  return materialize(manifest_views(manifest_path));
}

namespace {

void write_view(const fs::path& dir, const LoadedView& v) {
  fs::create_directories((dir / v.record.path).parent_path());
  write_png_rgb(dir / v.record.path, v.image);
  if (!v.record.labels_path.empty() && !v.labels.empty()) {
    write_png_gray(dir / v.record.labels_path, GrayImage{v.image.height(), v.image.width(), 16, v.labels});
  }
}

void write_manifest(DatasetManifest m, std::vector<ViewRecord> records, const fs::path& dir) {
  m.views = std::move(records);
  write_text_file(dir / "manifest.jsonl", m.to_jsonl());
}

// Chunk size for streamed passes; bounds resident images at full resolution.
constexpr std::size_t kChunk = 64;

template <typename Fn>
void for_each_chunk(const ViewSource& source, Fn&& fn) {
  for (std::size_t begin = 0; begin < source.size(); begin += kChunk) {
    const std::size_t n = std::min(kChunk, source.size() - begin);
    std::vector<LoadedView> chunk(n);
    parallel_for(n, [&](std::size_t i) { chunk[i] = source.load(begin + i); });
    fn(chunk);
  }
}

}  // namespace

void write_dataset(const DatasetManifest& manifest, const std::vector<LoadedView>& views,
                   const fs::path& dir) {
  parallel_for(views.size(), [&](std::size_t i) { write_view(dir, views[i]); });
  std::vector<ViewRecord> records;
  for (const auto& v : views) records.push_back(v.record);
  write_manifest(manifest, std::move(records), dir);
}

void write_dataset(const DatasetManifest& manifest, const ViewSource& source, const fs::path& dir) {
  for_each_chunk(source, [&](const std::vector<LoadedView>& chunk) {
    parallel_for(chunk.size(), [&](std::size_t i) { write_view(dir, chunk[i]); });
  });
  write_manifest(manifest, source.records, dir);
}

std::vector<LoadedView> augment_views(const std::vector<LoadedView>& views, int delta_p,
                                      double lambda_aug) {
  std::vector<const LoadedView*> drones;
  for (const auto& v : views) {
    if (v.record.role == ViewRole::kDrone) drones.push_back(&v);
  }
  std::vector<LoadedView> out(drones.size());
  parallel_for(drones.size(), [&](std::size_t i) {
    const LoadedView& src = *drones[i];
    if (src.features) throw std::invalid_argument("augment_views: feature-map inputs cannot be augmented");
    if (src.record.delta_p != 0) throw std::invalid_argument("augment_views: view is already augmented");
    LoadedView v;
    v.record = src.record;
    v.record.delta_p = delta_p;
    v.record.source_height_m = src.record.height_m;
    v.record.height_m = adjusted_height(src.record.height_m, delta_p, lambda_aug);
    v.record.path = augmented_path(src.record.path, delta_p);
    v.image = simulate_height(src.image, delta_p);
    if (!src.labels.empty() && src.image.height() == src.image.width()) {
      v.labels = simulate_height_labels(src.labels, src.image.height(), delta_p);
      v.record.labels_path = augmented_path(src.record.labels_path, delta_p);
    } else {
      v.record.labels_path.clear();
    }
    out[i] = std::move(v);
  });
  return out;
}

void write_augmented_sets(const std::vector<LoadedView>& views, const std::vector<int>& delta_ps,
                          double lambda_aug, const fs::path& out_dir) {
  std::vector<LoadedView> tests;
  for (const auto& v : views) {
    if (v.record.split == Split::kTest) tests.push_back(v);
  }
  nlohmann::json summary = nlohmann::json::array();
  for (int dp : delta_ps) {
    const fs::path set_dir = out_dir / set_name(dp);
    std::vector<LoadedView> set;
    for (const auto& v : tests) {
      if (v.record.role == ViewRole::kSatellite) set.push_back(v);
    }
    for (auto& v : augment_views(tests, dp, lambda_aug)) set.push_back(std::move(v));
    DatasetManifest m;
    write_dataset(m, set, set_dir);
    nlohmann::json images = nlohmann::json::array();
    for (const auto& v : set) {
      if (v.record.role != ViewRole::kDrone) continue;
      images.push_back({{"path", v.record.path},
                        {"delta_p", v.record.delta_p},
                        {"height_m", v.record.height_m},
                        {"source_height_m", v.record.source_height_m}});
    }
    summary.push_back({{"delta_p", dp},
                       {"lambda_aug", lambda_aug},
                       {"manifest", (fs::path(set_name(dp)) / "manifest.jsonl").generic_string()},
                       {"images", images}});
  }
  write_text_file(out_dir / "augment_manifest.json", summary.dump(2) + "\n");
}

Tensor3 feature_grid(const RunConfig& c, const Image& img) {
  const Image& src = img;
  if (img.height() == c.image_size && img.width() == c.image_size) {
    return handcrafted_features(src, c.feature_grid, c.feature_channels);
  }
  return handcrafted_features(resize(img, c.image_size, c.image_size), c.feature_grid,
                              c.feature_channels);
}

PartFeatures describe(const RunConfig& c, const Tensor3& grid, int theta) {
  if (grid.height() * 4 != c.map_size || grid.width() * 4 != c.map_size) {
    throw std::invalid_argument("describe: feature grid " + std::to_string(grid.height()) + "x" +
                                std::to_string(grid.width()) + " does not upsample to map_size " +
                                std::to_string(c.map_size));
  }
  const Tensor3 map = upsample4(grid);
  const PartitionPlan plan = plan_haas(c.map_size, c.n_parts, theta);
  const SgrsConfig sgrs = c.sgrs();
  PartFeatures out;
  out.reserve(plan.parts.size());
  for (const auto& part : extract_partitions(map, plan)) out.push_back(refine_partition(part, sgrs));
  return out;
}

std::vector<EncodedView> encode_views(const RunConfig& c, const std::vector<LoadedView>& views,
                                      bool with_flips, bool keep_labels) {
  std::vector<EncodedView> out(views.size());
  parallel_for(views.size(), [&](std::size_t i) {
    const LoadedView& v = views[i];
    EncodedView e{v.record, Tensor3(), std::nullopt, {}, 0};
    if (v.features) {
      e.grid = *v.features;
      if (e.grid.channels() != c.feature_channels) {
        throw std::invalid_argument("feature map " + v.record.path + " has " +
                                    std::to_string(e.grid.channels()) + " channels, expected " +
                                    std::to_string(c.feature_channels));
      }
      if (with_flips) e.flipped_grid = flip_tensor(e.grid);
    } else {
      e.grid = feature_grid(c, v.image);
      if (with_flips) e.flipped_grid = feature_grid(c, flip_horizontal(v.image));
      e.resolution = v.image.height();
      if (keep_labels && v.image.height() == v.image.width()) e.labels = v.labels;
    }
    out[i] = std::move(e);
  });
  return out;
}

TrainedModel train_model(const RunConfig& c, const std::vector<EncodedView>& train_views) {
  if (train_views.empty()) throw std::invalid_argument("train_model: no training views");
  TrainedModel m;
  for (const auto& v : train_views) m.label_of_class.emplace(v.record.class_id, 0);
  int next = 1;
  for (auto& [cls, label] : m.label_of_class) label = next++;
  if (m.label_of_class.size() < 2) throw std::invalid_argument("train_model: need at least two classes");

  std::vector<TrainSampleVariants> samples(train_views.size());
  const bool flips = c.train.horizontal_flip;
  parallel_for(train_views.size(), [&](std::size_t i) {
    const EncodedView& v = train_views[i];
    const int theta = view_theta(c, v.record);
    const int label = m.label_of_class.at(v.record.class_id);
    samples[i].original = TrainSample{describe(c, v.grid, theta), label};
    if (flips) {
      const Tensor3 flipped = v.flipped_grid ? *v.flipped_grid : flip_tensor(v.grid);
      samples[i].flipped = TrainSample{describe(c, flipped, theta), label};
    }
  });
  m.bank = HeadBank(c.n_parts, c.feature_channels, c.d_mid,
                    static_cast<int>(m.label_of_class.size()), c.dropout_rate, c.seed);
  m.report = train_bank(m.bank, samples, c.train, c.seed);
  return m;
}

std::vector<EmbeddingRecord> embed(const RunConfig& c, const HeadBank& bank,
                                   const std::vector<EncodedView>& views) {
  std::vector<EmbeddingRecord> out(views.size());
  parallel_for(views.size(), [&](std::size_t i) {
    const EncodedView& v = views[i];
    out[i] = EmbeddingRecord{v.record.path, v.record.class_id,
                             assemble_descriptor(bank, describe(c, v.grid, view_theta(c, v.record)),
                                                 c.l2_normalize)};
  });
  return out;
}

PreparedData prepare_data(const RunConfig& c, const ViewSource& source,
                          const std::vector<int>& delta_ps) {
  enum Bucket { kTrain, kGallery, kQuery };
  auto bucket_of = [](const ViewRecord& r) {
    if (r.split == Split::kTrain) return kTrain;
    return r.role == ViewRole::kSatellite ? kGallery : kQuery;
  };
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : source.records) {
    if (bucket_of(r) == kQuery) best = std::min(best, std::abs(r.height_m - c.h_sat));
  }
  auto in_middle = [&](const ViewRecord& r) {
    return bucket_of(r) == kQuery && std::abs(r.height_m - c.h_sat) == best;
  };

  PreparedData d;
  std::string hashes;
  std::vector<LoadedView> middle;
  for_each_chunk(source, [&](std::vector<LoadedView>& chunk) {
    std::vector<std::string> h(chunk.size());
    parallel_for(chunk.size(), [&](std::size_t i) { h[i] = view_hash(chunk[i]); });
    for (const auto& x : h) hashes += x;

    std::vector<LoadedView> parts[3];
    for (auto& v : chunk) {
      if (in_middle(v.record)) middle.push_back(v);
      parts[bucket_of(v.record)].push_back(std::move(v));
    }
    auto append = [](std::vector<EncodedView>& to, std::vector<EncodedView> from) {
      std::move(from.begin(), from.end(), std::back_inserter(to));
    };
    append(d.train, encode_views(c, parts[kTrain], c.train.horizontal_flip, false));
    append(d.gallery, encode_views(c, parts[kGallery], false, true));
    append(d.queries, encode_views(c, parts[kQuery], false, true));
  });
  d.input_hash = sha256_hex(hashes);
  d.middle = encode_views(c, middle, false, true);
  for (int dp : delta_ps) {
    if (dp == 0) continue;
    d.shifted[dp] = encode_views(c, augment_views(middle, dp, c.lambda_aug), false, true);
  }
  return d;
}

PreparedData prepare_data(const RunConfig& c, const std::vector<LoadedView>& views,
                          const std::vector<int>& delta_ps) {
  return prepare_data(c, memory_views(views), delta_ps);
}

double PipelineResult::r1(const std::string& name) const {
  for (const auto& s : sets) {
    if (s.name == name) return s.metrics.recall.at(1);
  }
  throw std::out_of_range("no evaluation set named " + name);
}

std::vector<std::pair<int, double>> PipelineResult::degradation_curve() const {
  std::vector<std::pair<int, double>> curve;
  for (const auto& s : sets) {
    if (s.name == "all") continue;
    curve.emplace_back(std::abs(s.delta_p), s.metrics.recall.at(1));
  }
  std::stable_sort(curve.begin(), curve.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  return curve;
}

std::optional<double> mean_alignment_iou(const RunConfig& c, const PreparedData& data) {
  std::map<int, const EncodedView*> sat_of;
  for (const auto& g : data.gallery) {
    if (!g.labels.empty()) sat_of.emplace(g.record.class_id, &g);
  }
  const PartitionPlan sat_plan = plan_sps(c.map_size, c.n_parts);
  std::vector<double> scores;
  for (const auto& q : data.queries) {
    const auto it = sat_of.find(q.record.class_id);
    if (q.labels.empty() || it == sat_of.end()) continue;
    const PartitionPlan plan = plan_haas(c.map_size, c.n_parts, view_theta(c, q.record));
    scores.push_back(partition_alignment_iou(plan, LabelView{q.labels, q.resolution}, sat_plan,
                                             LabelView{it->second->labels, it->second->resolution})
                         .mean);
  }
  if (scores.empty()) return std::nullopt;
  return mean_of(scores);
}

PipelineResult run_prepared(const RunConfig& c, const PreparedData& data) {
  c.validate();
  if (std::find(c.k_list.begin(), c.k_list.end(), 1) == c.k_list.end()) {
    throw ConfigError("k_list must include 1");
  }
  if (data.gallery.empty() || data.queries.empty()) {
    throw std::invalid_argument("run_prepared: the test split needs satellite and drone views");
  }
  PipelineResult r;
  const TrainedModel model = train_model(c, data.train);
  r.train = model.report;
  const auto gallery = embed(c, model.bank, data.gallery);

  auto run_set = [&](const std::string& name, int dp, const std::vector<EncodedView>& q) {
    r.sets.push_back({name, dp, evaluate(embed(c, model.bank, q), gallery, c.k_list)});
  };
  run_set("all", 0, data.queries);
  run_set("middle", 0, data.middle);
  for (const auto& [dp, q] : data.shifted) run_set(set_name(dp), dp, q);

  std::vector<double> r1s, aps;
  for (const auto& s : r.sets) {
    r1s.push_back(s.metrics.recall.at(1));
    aps.push_back(s.metrics.mean_ap);
  }
  r.mean_r1 = mean_of(r1s);
  r.mean_ap = mean_of(aps);
  r.alignment_iou = mean_alignment_iou(c, data);

  nlohmann::json sets = nlohmann::json::array();
  for (const auto& s : r.sets) {
    nlohmann::json j = to_json(s.metrics);
    j["name"] = s.name;
    j["delta_p"] = s.delta_p;
    sets.push_back(std::move(j));
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [dp, v] : r.degradation_curve()) curve.push_back({{"abs_delta_p", dp}, {"r1", v}});
  r.report = {{"config", to_json(c)},
              {"seed", c.seed},
              {"input_hash", data.input_hash},
              {"train",
               {{"epochs", r.train.epoch_loss.size()},
                {"final_loss", r.train.epoch_loss.empty() ? 0.0 : r.train.epoch_loss.back()},
                {"train_accuracy", r.train.train_accuracy},
                {"classes", model.label_of_class.size()}}},
              {"sets", sets},
              {"mean_r1", r.mean_r1},
              {"mean_ap", r.mean_ap},
              {"curve", curve},
              {"alignment_iou", r.alignment_iou ? nlohmann::json(*r.alignment_iou) : nlohmann::json()}};
  return r;
}

PipelineResult run_pipeline(const RunConfig& c, const std::vector<LoadedView>& views) {
  return run_prepared(c, prepare_data(c, views, c.delta_p_list));
}

PipelineResult run_pipeline(const RunConfig& c, const ViewSource& source) {
  return run_prepared(c, prepare_data(c, source, c.delta_p_list));
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman: need two equal-length series of at least 2 values");
  }
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (i + j) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = mean_of(rx);
  const double my = mean_of(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::string degradation_svg(
    const std::vector<std::pair<std::string, std::vector<std::pair<int, double>>>>& curves) {
  constexpr double kW = 480, kH = 320, kLeft = 56, kRight = 20, kTop = 20, kBottom = 44;
  int max_dp = 1;
  for (const auto& [name, pts] : curves) {
    for (const auto& [dp, v] : pts) max_dp = std::max(max_dp, dp);
  }
  auto px = [&](int dp) { return kLeft + (kW - kLeft - kRight) * dp / max_dp; };
  auto py = [&](double v) { return kTop + (kH - kTop - kBottom) * (1.0 - v); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << py(0) << "\" x2=\"" << kW - kRight << "\" y2=\""
    << py(0) << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << py(0) << "\" x2=\"" << kLeft << "\" y2=\"" << py(1)
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
      << fmt_double(v) << "</text>\n";
  }
  s << "<text x=\"" << (kW + kLeft) / 2 << "\" y=\"" << kH - 8
    << "\" text-anchor=\"middle\">|delta P| (px)</text>\n";
  s << "<text x=\"14\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 14 " << kH / 2
    << ")\" text-anchor=\"middle\">R@1</text>\n";
  std::set<int> ticks;
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& [name, pts] = curves[ci];
    const char* color = kColors[ci % 4];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [dp, v] : pts) {
      s << px(dp) << "," << py(v) << " ";
      ticks.insert(dp);
    }
    s << "\"/>\n";
    for (const auto& [dp, v] : pts) {
      s << "<circle cx=\"" << px(dp) << "\" cy=\"" << py(v) << "\" r=\"3\" fill=\"" << color
        << "\"/>\n";
    }
    s << "<text x=\"" << kW - kRight - 4 << "\" y=\"" << kTop + 14 * (ci + 1)
      << "\" text-anchor=\"end\" fill=\"" << color << "\">" << name << "</text>\n";
  }
  for (int dp : ticks) {
    s << "<text x=\"" << px(dp) << "\" y=\"" << py(0) + 16 << "\" text-anchor=\"middle\">" << dp
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<SweepCell> sweep_alpha(const RunConfig& c, const PreparedData& data,
                                   const std::vector<double>& alphas) {
  std::vector<int> dps = c.delta_p_list;
  if (dps.empty()) dps.push_back(0);
  for (int dp : dps) {
    if (dp != 0 && !data.shifted.contains(dp)) {
      throw std::invalid_argument("sweep_alpha: no prepared set for delta_p " + std::to_string(dp));
    }
  }
  std::vector<SweepCell> cells;
  for (double a : alphas) {
    RunConfig ca = c;
    ca.alpha = a;
    ca.validate();
    const PipelineResult r = run_prepared(ca, data);
    for (int dp : dps) cells.push_back({a, dp, dp == 0 ? r.r1("middle") : r.r1(set_name(dp))});
  }
  return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string out = "alpha,delta_p,r1\n";
  char line[96];
  for (const auto& cell : cells) {
    std::snprintf(line, sizeof(line), "%g,%d,%.6f\n", cell.alpha, cell.delta_p, cell.r1);
    out += line;
  }
  return out;
}

}  // namespace salpn
