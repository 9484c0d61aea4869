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

#include "salpn/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "salpn/io.h"
#include "salpn/random.h"

namespace salpn {
namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return mix_seed(a, b); }

// Shared palettes keep classes from being separable by color alone.
constexpr std::array<Rgb, 8> kRoofPalette = {{{0.82f, 0.80f, 0.76f},
                                              {0.62f, 0.28f, 0.22f},
                                              {0.30f, 0.34f, 0.40f},
                                              {0.72f, 0.62f, 0.42f},
                                              {0.18f, 0.42f, 0.30f},
                                              {0.55f, 0.56f, 0.58f},
                                              {0.86f, 0.70f, 0.36f},
                                              {0.25f, 0.25f, 0.30f}}};

constexpr std::array<Rgb, 4> kGroundPalette = {{{0.36f, 0.48f, 0.26f},
                                                {0.50f, 0.46f, 0.36f},
                                                {0.42f, 0.44f, 0.40f},
                                                {0.30f, 0.40f, 0.28f}}};

Rgb jitter(Rng& rng, Rgb c, double amount) {
  for (auto& v : c) v = static_cast<float>(std::clamp(v + rng.uniform(-amount, amount), 0.0, 1.0));
  return c;
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

double pixel_noise(std::uint64_t seed, int y, int x, int ch) {
  const std::uint64_t h = mix(mix(seed, static_cast<std::uint64_t>(y) << 32 | static_cast<std::uint32_t>(x)),
                              static_cast<std::uint64_t>(ch));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

const std::vector<std::vector<double>>& projection_matrix(int channels) {
  static thread_local std::map<int, std::vector<std::vector<double>>> cache;
  auto it = cache.find(channels);
  if (it != cache.end()) return it->second;
  // Per-statistic gains bring means, spreads, gradients and hue mass to a
  // comparable range before mixing.
  constexpr std::array<double, kHandcraftedStats> kGain = {1, 1, 1, 2, 2, 2, 4, 4, 2, 2};
  Rng rng(0x5a1b'f00dULL);
  std::vector<std::vector<double>> w(channels, std::vector<double>(kHandcraftedStats));
  for (int k = 0; k < channels; ++k) {
    // The first channels copy single statistics so none is lost to mixing.
    for (int j = 0; j < kHandcraftedStats; ++j) {
      w[k][j] = k < kHandcraftedStats ? (j == k ? kGain[j] : 0.0) : kGain[j] * rng.uniform();
    }
  }
  return cache.emplace(channels, std::move(w)).first->second;
}

std::string format_height(double h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", h);
  return buf;
}

}  // namespace

WorldScene generate_scene(std::uint64_t seed, int class_id, const SceneParams& params) {
  if (params.extent_m <= params.max_target_m / 2 || params.num_objects < 0) {
    throw std::invalid_argument("generate_scene: invalid scene parameters");
  }
  Rng rng(mix(seed, static_cast<std::uint64_t>(class_id)));
  WorldScene scene;
  scene.seed = seed;
  scene.class_id = class_id;
  scene.extent_m = params.extent_m;

  scene.ground.base = jitter(rng, kGroundPalette[rng.index(4)], 0.05);
  for (int i = 0; i < 3; ++i) {
    const double wavelength = rng.uniform(25.0, 90.0);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double k = 2.0 * std::numbers::pi / wavelength;
    GroundWave w;
    w.kx = k * std::cos(angle);
    w.ky = k * std::sin(angle);
    w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (auto& a : w.amplitude) a = static_cast<float>(rng.uniform(0.02, 0.07));
    scene.ground.waves.push_back(w);
  }

  std::uint16_t next_id = kTargetId + 1;
  for (int i = 0; i < params.num_objects; ++i) {
    SceneObject o;
    o.id = next_id++;
    o.half_width = rng.uniform(params.min_object_m, params.max_object_m) / 2;
    o.half_height = rng.uniform(params.min_object_m, params.max_object_m) / 2;
    o.center_x = rng.uniform(-params.extent_m + o.half_width, params.extent_m - o.half_width);
    o.center_y = rng.uniform(-params.extent_m + o.half_height, params.extent_m - o.half_height);
    o.color = jitter(rng, kRoofPalette[rng.index(8)], 0.06);
    o.stripe_period = rng.uniform(3.0, 8.0);
    o.stripe_contrast = static_cast<float>(rng.uniform(0.0, 0.08));
    scene.objects.push_back(o);
  }

  SceneObject target;
  target.id = kTargetId;
  target.half_width = rng.uniform(params.min_target_m, params.max_target_m) / 2;
  target.half_height = rng.uniform(params.min_target_m, params.max_target_m) / 2;
  target.color = jitter(rng, kRoofPalette[rng.index(8)], 0.06);
  target.stripe_period = rng.uniform(4.0, 10.0);
  target.stripe_contrast = static_cast<float>(rng.uniform(0.05, 0.15));
  scene.objects.push_back(target);
  return scene;
}

RenderedView render_view(const WorldScene& scene, double height, int resolution,
                         const ViewStyle& style) {
  if (!(height > 0.0)) throw std::invalid_argument("render_view: height must be > 0");
  if (resolution < 1) throw std::invalid_argument("render_view: resolution must be >= 1");
  const double footprint = kFootprintPerMeter * height;
  const double mpp = footprint / resolution;
  RenderedView view;
  view.image = Image(resolution, resolution);
  view.label_map.assign(static_cast<std::size_t>(resolution) * resolution, kBackgroundId);
  view.height = height;
  view.class_id = scene.class_id;

  for (int r = 0; r < resolution; ++r) {
    const double wy = (r + 0.5) * mpp - footprint / 2 + style.offset_y;
    for (int c = 0; c < resolution; ++c) {
      const double wx = (c + 0.5) * mpp - footprint / 2 + style.offset_x;
      std::array<double, 3> rgb{};
      std::uint16_t id = kBackgroundId;
      for (auto it = scene.objects.rbegin(); it != scene.objects.rend(); ++it) {
        if (std::abs(wx - it->center_x) <= it->half_width &&
            std::abs(wy - it->center_y) <= it->half_height) {
          const double stripe = std::sin(2.0 * std::numbers::pi * (wx - it->center_x) / it->stripe_period);
          for (int ch = 0; ch < 3; ++ch) rgb[ch] = it->color[ch] + it->stripe_contrast * stripe;
          id = it->id;
          break;
        }
      }
      if (id == kBackgroundId) {
        for (int ch = 0; ch < 3; ++ch) rgb[ch] = scene.ground.base[ch];
        for (const auto& w : scene.ground.waves) {
          const double s = std::sin(w.kx * wx + w.ky * wy + w.phase);
          for (int ch = 0; ch < 3; ++ch) rgb[ch] += w.amplitude[ch] * s;
        }
      }
      for (int ch = 0; ch < 3; ++ch) {
        double v = rgb[ch] * style.tint[ch] * style.gain + style.bias;
        if (style.noise > 0.0f) v += style.noise * pixel_noise(style.noise_seed, r, c, ch);
        view.image.at(r, c, ch) = clamp01(v);
      }
      view.label_map[static_cast<std::size_t>(r) * resolution + c] = id;
    }
  }
  return view;
}

std::string to_string(ViewRole role) { return role == ViewRole::kDrone ? "drone" : "satellite"; }

ViewRole parse_role(const std::string& s) {
  if (s == "drone") return ViewRole::kDrone;
  if (s == "satellite") return ViewRole::kSatellite;
  throw std::invalid_argument("unknown view role '" + s + "'");
}

std::string to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + s + "'");
}

std::vector<int> DatasetManifest::classes(Split split) const {
  std::vector<int> out;
  for (const auto& v : views) {
    if (v.split == split && v.role == ViewRole::kSatellite) out.push_back(v.class_id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

nlohmann::json to_json(const ViewRecord& r) {
  nlohmann::json j{{"path", r.path},
                   {"class_id", r.class_id},
                   {"role", to_string(r.role)},
                   {"height_m", r.height_m},
                   {"split", to_string(r.split)}};
  if (!r.labels_path.empty()) j["labels"] = r.labels_path;
  if (r.delta_p != 0) {
    j["delta_p"] = r.delta_p;
    j["source_height_m"] = r.source_height_m;
  }
  return j;
}

ViewRecord view_record_from_json(const nlohmann::json& j) {
  ViewRecord r;
  r.path = j.at("path").get<std::string>();
  r.class_id = j.at("class_id").get<int>();
  r.role = parse_role(j.at("role").get<std::string>());
  r.height_m = j.at("height_m").get<double>();
  r.split = parse_split(j.value("split", std::string("test")));
  r.delta_p = j.value("delta_p", 0);
  r.source_height_m = j.value("source_height_m", r.height_m);
  r.labels_path = j.value("labels", std::string());
  if (!(r.height_m > 0.0)) throw std::invalid_argument("manifest record " + r.path + ": height_m must be > 0");
  return r;
}

std::vector<ViewRecord> parse_manifest_jsonl(const std::string& text) {
  std::vector<ViewRecord> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(view_record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string DatasetManifest::to_jsonl() const {
  std::string out;
  for (const auto& v : views) {
    out += to_json(v).dump();
    out += '\n';
  }
  return out;
}

std::string DatasetManifest::content_hash() const { return sha256_hex(to_jsonl()); }

DatasetManifest make_dataset(const DatasetSpec& spec) {
  if (spec.num_classes < 2) throw std::invalid_argument("make_dataset: num_classes must be >= 2");
  if (!(spec.sat_height > 0.0)) throw std::invalid_argument("make_dataset: sat_height must be > 0");
  for (double h : spec.drone_heights) {
    if (!(h > 0.0)) throw std::invalid_argument("make_dataset: drone heights must be > 0");
  }
  std::vector<int> ids(spec.num_classes);
  for (int i = 0; i < spec.num_classes; ++i) ids[i] = i + 1;
  Rng rng(mix(spec.seed, 0x5b1175ULL));
  for (int i = spec.num_classes - 1; i > 0; --i) std::swap(ids[i], ids[rng.index(i + 1)]);
  int n_train = static_cast<int>(std::lround(spec.train_fraction * spec.num_classes));
  n_train = std::clamp(n_train, 1, spec.num_classes - 1);

  std::vector<Split> split_of(spec.num_classes + 1);
  for (int i = 0; i < spec.num_classes; ++i) split_of[ids[i]] = i < n_train ? Split::kTrain : Split::kTest;

  DatasetManifest m;
  m.spec = spec;
  for (int cls = 1; cls <= spec.num_classes; ++cls) {
    const Split split = split_of[cls];
    char dir[64];
    std::snprintf(dir, sizeof(dir), "%s/%04d/", to_string(split).c_str(), cls);
    m.views.push_back({std::string(dir) + "satellite.png", cls, ViewRole::kSatellite,
                       spec.sat_height, split, 0, spec.sat_height,
                       std::string(dir) + "satellite.labels.png"});
    for (double h : spec.drone_heights) {
      const std::string stem = std::string(dir) + "drone_" + format_height(h);
      m.views.push_back({stem + ".png", cls, ViewRole::kDrone, h, split, 0, h, stem + ".labels.png"});
    }
  }
  return m;
}

ViewStyle view_style(const DatasetSpec& spec, const ViewRecord& record) {
  const auto key = static_cast<std::uint64_t>(std::llround(record.source_height_m * 1000.0));
  Rng rng(mix(mix(spec.seed, static_cast<std::uint64_t>(record.class_id)),
              mix(key, record.role == ViewRole::kDrone ? 0xd0ULL : 0x5aULL)));
  ViewStyle s;
  const double jit = spec.photometric_jitter;
  if (record.role == ViewRole::kDrone) {
    const double f = spec.drone_offset_frac * kFootprintPerMeter * record.source_height_m;
    s.offset_x = rng.uniform(-f, f);
    s.offset_y = rng.uniform(-f, f);
  }
  s.gain = static_cast<float>(1.0 + rng.uniform(-jit, jit));
  s.bias = static_cast<float>(rng.uniform(-jit, jit) / 2);
  for (auto& t : s.tint) t = static_cast<float>(1.0 + rng.uniform(-jit, jit) / 2);
  s.noise = static_cast<float>(spec.noise);
  s.noise_seed = rng.next();
  return s;
}

RenderedView render_record(const DatasetSpec& spec, const ViewRecord& record) {
  if (record.delta_p != 0) {
    throw std::invalid_argument("render_record: augmented records are derived, not rendered");
  }
  const WorldScene scene = generate_scene(spec.seed, record.class_id, spec.scene);
  return render_view(scene, record.source_height_m, spec.resolution, view_style(spec, record));
}

Tensor3 cell_statistics(const Image& img, int grid) {
  if (grid < 1 || img.height() % grid != 0 || img.width() % grid != 0) {
    throw std::invalid_argument("handcrafted_features: grid " + std::to_string(grid) +
                                " does not divide " + std::to_string(img.height()) + "x" +
                                std::to_string(img.width()));
  }
  const int ch_ = img.height() / grid;
  const int cw = img.width() / grid;
  const double n = static_cast<double>(ch_) * cw;
  Tensor3 stats(kHandcraftedStats, grid, grid);
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      std::array<double, 3> sum{}, sq{};
      double hue0 = 0.0, hue1 = 0.0, dx = 0.0, dy = 0.0;
      for (int y = gy * ch_; y < (gy + 1) * ch_; ++y) {
        for (int x = gx * cw; x < (gx + 1) * cw; ++x) {
          const double r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
          sum[0] += r, sum[1] += g, sum[2] += b;
          sq[0] += r * r, sq[1] += g * g, sq[2] += b * b;
          const double mx = std::max({r, g, b});
          const double chroma = mx - std::min({r, g, b});
          if (chroma > 0.0) {
            double hue;
            if (mx == r) {
              hue = std::fmod((g - b) / chroma + 6.0, 6.0);
            } else if (mx == g) {
              hue = (b - r) / chroma + 2.0;
            } else {
              hue = (r - g) / chroma + 4.0;
            }
            (hue < 3.0 ? hue0 : hue1) += chroma;
          }
          const double gray = (r + g + b) / 3.0;
          if (x + 1 < (gx + 1) * cw) {
            dx += std::abs((img.at(y, x + 1, 0) + img.at(y, x + 1, 1) + img.at(y, x + 1, 2)) / 3.0 - gray);
          }
          if (y + 1 < (gy + 1) * ch_) {
            dy += std::abs((img.at(y + 1, x, 0) + img.at(y + 1, x, 1) + img.at(y + 1, x, 2)) / 3.0 - gray);
          }
        }
      }
      for (int c = 0; c < 3; ++c) {
        const double mean = sum[c] / n;
        stats.at(c, gy, gx) = static_cast<float>(mean);
        stats.at(3 + c, gy, gx) = static_cast<float>(std::sqrt(std::max(0.0, sq[c] / n - mean * mean)));
      }
      const double pairs_x = static_cast<double>(ch_) * (cw - 1);
      const double pairs_y = static_cast<double>(ch_ - 1) * cw;
      stats.at(6, gy, gx) = static_cast<float>(pairs_x > 0 ? dx / pairs_x : 0.0);
      stats.at(7, gy, gx) = static_cast<float>(pairs_y > 0 ? dy / pairs_y : 0.0);
      stats.at(8, gy, gx) = static_cast<float>(hue0 / n);
      stats.at(9, gy, gx) = static_cast<float>(hue1 / n);
    }
  }
  return stats;
}

Tensor3 handcrafted_features(const Image& img, int grid, int channels) {
  if (channels < 1) throw std::invalid_argument("handcrafted_features: channels must be >= 1");
  const Tensor3 stats = cell_statistics(img, grid);
  const auto& w = projection_matrix(channels);
  Tensor3 out(channels, grid, grid);
  for (int k = 0; k < channels; ++k) {
    auto dst = out.plane(k);
    for (int j = 0; j < kHandcraftedStats; ++j) {
      if (w[k][j] == 0.0) continue;
      const auto src = stats.plane(j);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += static_cast<float>(w[k][j] * src[i]);
    }
  }
  return out;
}

AlignmentScore partition_alignment_iou(const PartitionPlan& plan_d, const RenderedView& view_d,
                                       const PartitionPlan& plan_s, const RenderedView& view_s,
                                       double coverage) {
  return partition_alignment_iou(plan_d, LabelView{view_d.label_map, view_d.resolution()}, plan_s,
                                 LabelView{view_s.label_map, view_s.resolution()}, coverage);
}

AlignmentScore partition_alignment_iou(const PartitionPlan& plan_d, LabelView view_d,
                                       const PartitionPlan& plan_s, LabelView view_s,
                                       double coverage) {
  if (plan_d.parts.size() != plan_s.parts.size()) {
    throw std::invalid_argument("partition_alignment_iou: plans have different part counts");
  }
  auto scale_of = [](const PartitionPlan& p, const LabelView& v) {
    if (p.map_size < 1 || v.resolution % p.map_size != 0 ||
        v.labels.size() != static_cast<std::size_t>(v.resolution) * v.resolution) {
      throw std::invalid_argument("partition_alignment_iou: view resolution " +
                                  std::to_string(v.resolution) +
                                  " is not a square multiple of map size " +
                                  std::to_string(p.map_size));
    }
    return v.resolution / p.map_size;
  };
  const int sd = scale_of(plan_d, view_d);
  const int ss = scale_of(plan_s, view_s);

  auto id_set = [coverage](const SquareRegion& r, int scale, const LabelView& v) {
    std::map<std::uint16_t, long long> counts;
    for (int y = r.row * scale; y < (r.row + r.side) * scale; ++y) {
      for (int x = r.col * scale; x < (r.col + r.side) * scale; ++x) ++counts[v.at(y, x)];
    }
    const double area = static_cast<double>(r.side) * scale * r.side * scale;
    std::vector<std::uint16_t> ids;
    for (const auto& [id, n] : counts) {
      if (n >= coverage * area) ids.push_back(id);
    }
    return ids;
  };

  AlignmentScore score;
  for (std::size_t n = 0; n < plan_d.parts.size(); ++n) {
    const auto a = id_set(plan_d.parts[n], sd, view_d);
    const auto b = id_set(plan_s.parts[n], ss, view_s);
    std::vector<std::uint16_t> inter, uni;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
    score.per_part.push_back(uni.empty() ? 1.0 : static_cast<double>(inter.size()) / uni.size());
  }
  double sum = 0.0;
  for (double v : score.per_part) sum += v;
  score.mean = score.per_part.empty() ? 0.0 : sum / score.per_part.size();
  return score;
}

int target_pixel_width(const RenderedView& view) {
  int lo = view.image.width();
  int hi = -1;
  for (int y = 0; y < view.image.height(); ++y) {
    for (int x = 0; x < view.image.width(); ++x) {
      if (view.label(y, x) == kTargetId) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
  }
  return hi < lo ? 0 : hi - lo + 1;
}

}  // namespace salpn
