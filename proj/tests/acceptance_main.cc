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

// Acceptance suite: one PASS/FAIL line per check, exit status 1 if any
// check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "salpn/augment.h"
#include "salpn/geometry.h"
#include "salpn/model.h"
#include "salpn/pipeline.h"
#include "salpn/refinement.h"
#include "salpn/retrieval.h"
#include "salpn/synth.h"
#include "support/oracles.h"

namespace {

using namespace salpn;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::atoi(v) : fallback;
}

Outcome geometry_exactness() {
  Outcome o;
  o.require(plan_sps(128, 4).sides() == std::vector<int>{32, 64, 96, 128}, "plan_sps(128,4)");
  o.require(plan_haas(128, 4, 5).sides() == std::vector<int>{22, 54, 86, 118}, "plan_haas(128,4,5)");
  const PartitionPlan neg = plan_haas(128, 4, -5);
  o.require(neg.sides() == std::vector<int>{42, 74, 106, 128}, "plan_haas(128,4,-5) sides");
  o.require(neg.part_clamped == std::vector<bool>{false, false, false, true}, "last part clamped");
  o.require(scale_factor(256, 189.75, 14) == 5, "scale_factor(256)");
  o.require(scale_factor(123.5, 189.75, 14) == -5, "scale_factor(123.5)");
  return o;
}

Outcome bound_arithmetic() {
  Outcome o;
  const AlphaBounds b = alpha_bounds(189.75, 361, 18.5, 4, 128);
  o.require(std::abs(b.shrink - 16.62) <= 0.01, "shrink " + std::to_string(b.shrink));
  o.require(std::abs(b.expand - 53.19) <= 0.01, "expand " + std::to_string(b.expand));
  o.require(b.admits(14.0), "alpha 14 admissible");
  o.require(!b.admits(17.0), "alpha 17 inadmissible");
  return o;
}

Outcome bound_soundness() {
  Outcome o;
  const AlphaBounds b = alpha_bounds(189.75, 361, 18.5, 4, 128);
  std::vector<double> heights;
  for (double h = 18.5; h <= 361.0; h += 1.0) heights.push_back(h);
  heights.push_back(361.0);
  long checked = 0, warnings = 0;
  for (double alpha = 0.0; alpha <= b.limit(); alpha += 0.5) {
    for (double h : heights) {
      warnings += plan_haas(128, 4, scale_factor(h, 189.75, alpha)).warning;
      ++checked;
    }
  }
  o.require(warnings == 0, std::to_string(warnings) + " warnings");
  o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(checked) + " plans";
  return o;
}

Outcome sgrs_algebra() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(-3.0f, 3.0f);
  std::bernoulli_distribution coin(0.5);
  int range_violations = 0, partition_violations = 0, mixture_violations = 0, full_mask = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int c = 1 + trial % 5, h = 1 + trial % 17, w = 1 + (trial * 7) % 13;
    Tensor3 part(c, h, w);
    for (auto& v : part.data()) v = u(rng);
    const auto metric = static_cast<DistanceMetric>(trial % 3);
    const Heatmap heat = heatmap(part, coordinate_map(h, w, metric));
    for (float v : heat.values) range_violations += !(v >= 0.0f && v <= 1.0f);

    const BinaryMask mask = binarize(heat, 0.5);
    const BinaryMask comp = mask.complement();
    for (std::size_t i = 0; i < mask.values().size(); ++i) {
      partition_violations += mask.values()[i] + comp.values()[i] != 1;
    }

    std::vector<unsigned char> m(static_cast<std::size_t>(h) * w);
    for (auto& v : m) v = coin(rng);
    if (m.size() >= 2) {
      m.front() = 1;
      m.back() = 0;
      const SgrsOutput out = sgrs_split(part, BinaryMask(h, w, m));
      for (int k = 0; k < c; ++k) {
        const double lhs = out.salient_count * static_cast<double>(out.salient_vec[k]) +
                           out.background_count * static_cast<double>(out.background_vec[k]);
        const double rhs = static_cast<double>(h) * w * out.global_vec[k];
        mixture_violations += std::abs(lhs - rhs) > 1e-5 * std::max(1.0, std::abs(rhs));
      }
    }
    const SgrsOutput all = sgrs_split(part, BinaryMask(h, w, true));
    full_mask += all.salient_vec != all.global_vec;
  }
  o.require(range_violations == 0, "heatmap outside [0,1]");
  o.require(partition_violations == 0, "mask partition");
  o.require(mixture_violations == 0, "mixture identity");
  o.require(full_mask == 0, "all-ones mask s != g");
  return o;
}

Outcome gradient_check() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    HeadBank bank(2, 8, 6, 4, 0.0, seed);
    std::normal_distribution<double> nd(0.0, 0.5);
    for (auto& h : bank.heads()) {
      for (auto& [name, block] : h.parameters()) {
        for (double& v : block) v = name == "bn_gamma" ? 1.0 + nd(rng) / 2 : nd(rng);
      }
    }
    std::vector<TrainSample> batch;
    for (int i = 0; i < 4; ++i) batch.push_back({oracle::random_features(2, 8, rng), 1 + i % 4});
    std::vector<const TrainSample*> ptrs;
    for (const auto& s : batch) ptrs.push_back(&s);
    const BankGradients g = compute_gradients(bank, ptrs, 0);
    const auto res = oracle::check_gradients(
        bank, g, [&](const HeadBank& b) { return oracle::reference_batch_loss(b, batch); });
    worst = std::max(worst, res.max_rel_error);
  }
  o.require(worst < 1e-4, "relative error too large");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max rel err %.2e", worst);
  o.detail += (o.detail.empty() ? "" : "; ") + std::string(buf);
  return o;
}

Outcome retrieval_oracle() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(1, 32), dim(1, 5), cls(1, 4), coarse(-2, 2);
  int mismatches = 0;
  std::vector<RankingResult> results;
  std::vector<int> oracle_ranks;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = dim(rng), n = size(rng);
    auto vec = [&] {
      std::vector<float> v(d);
      for (auto& x : v) x = static_cast<float>(coarse(rng));
      return v;
    };
    const EmbeddingRecord q{"q", cls(rng), vec()};
    std::vector<EmbeddingRecord> gallery;
    std::vector<std::vector<float>> vecs;
    for (int i = 0; i < n; ++i) {
      gallery.push_back({"g" + std::to_string(i), cls(rng), vec()});
      vecs.push_back(gallery.back().vector);
    }
    gallery[std::uniform_int_distribution<int>(0, n - 1)(rng)].class_id = q.class_id;
    const auto order = oracle::brute_force_order(q.vector, vecs);
    const RankingResult r = rank(q, gallery);
    std::vector<bool> positive;
    int first = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      mismatches += r.ids[k] != gallery[order[k]].id;
      positive.push_back(gallery[order[k]].class_id == q.class_id);
      if (positive.back() && first == 0) first = static_cast<int>(k) + 1;
    }
    mismatches += r.rank_of_first_positive != first;
    mismatches += std::abs(average_precision(r, q.class_id) - oracle::brute_force_ap(positive)) > 1e-9;
    results.push_back(r);
    oracle_ranks.push_back(first);
  }
  for (int k : {1, 3, 10, 32}) {
    mismatches += std::abs(recall_at_k(results, k) - oracle::brute_force_recall(oracle_ranks, k)) > 1e-9;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatches");

  RankingResult third;
  third.ids = {"a", "b", "c", "d"};
  third.class_ids = {0, 0, 1, 0};
  o.require(average_precision(third, std::set<std::string>{"c"}) == 1.0 / 3.0, "AP at rank 3");
  return o;
}

Outcome scale_law() {
  Outcome o;
  for (int cls = 1; cls <= 5; ++cls) {
    const WorldScene s = generate_scene(7, cls);
    const std::vector<double> heights{100, 200, 400};
    std::vector<int> widths;
    for (double h : heights) widths.push_back(target_pixel_width(render_view(s, h, 512)));
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = i + 1; j < 3; ++j) {
        const double predicted = widths[i] * heights[i] / heights[j];
        o.require(std::abs(widths[j] - predicted) <= 2.0,
                  "class " + std::to_string(cls) + " widths " + std::to_string(widths[i]) + "/" +
                      std::to_string(widths[j]));
      }
    }
  }
  return o;
}

Outcome height_aware_trend() {
  Outcome o;
  const int test_classes = env_int("SALPN_ACCEPT_CLASSES", 50);
  const int resolution = env_int("SALPN_ACCEPT_RESOLUTION", 512);
  constexpr double kSat = 189.75;

  DatasetSpec spec;
  spec.seed = static_cast<std::uint64_t>(env_int("SALPN_ACCEPT_SEED", 1));
  spec.num_classes = 2 * test_classes;
  spec.resolution = resolution;
  for (double f : {-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6}) spec.drone_heights.push_back(kSat * (1 + f));

  RunConfig c;
  c.image_size = resolution;
  c.seed = spec.seed;
  c.train.epochs = env_int("SALPN_ACCEPT_EPOCHS", c.train.epochs);
  c.train.lr_decay_epoch = c.train.epochs * 2 / 3;
  c.train.lr_heads = 0.01;
  c.delta_p_list = {-150, -100, -50, 50, 100, 150};
  for (int& dp : c.delta_p_list) dp = dp * resolution / 512;
  c.lambda_aug = kDefaultLambdaAug * 512.0 / resolution;
  c.validate();

  const auto t0 = Clock::now();
  const PreparedData data = prepare_data(c, rendered_views(make_dataset(spec)), c.delta_p_list);
  const auto t1 = Clock::now();
  const PipelineResult haas = run_prepared(c, data);
  RunConfig fixed_cfg = c;
  fixed_cfg.use_haas = false;
  const PipelineResult fixed = run_prepared(fixed_cfg, data);
  const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  const double prep = std::chrono::duration<double>(t1 - t0).count();

  std::vector<double> dp, r1;
  for (const auto& [d, v] : fixed.degradation_curve()) {
    dp.push_back(d);
    r1.push_back(v);
  }
  const double rho = spearman(dp, r1);

  std::fprintf(stderr, "  [8] %d test classes, %d px, prep %.1fs, total %.1fs\n", test_classes, resolution,
               prep, seconds);
  for (const auto* r : {&haas, &fixed}) {
    std::fprintf(stderr, "  [8] %-7s mean R@1 %.4f  mAP %.4f  IoU %.4f  train acc %.3f |", r == &haas ? "HAAS" : "theta=0",
                 r->mean_r1, r->mean_ap, r->alignment_iou.value_or(-1), r->train.train_accuracy);
    for (const auto& s : r->sets) std::fprintf(stderr, " %s=%.2f", s.name.c_str(), s.metrics.recall.at(1));
    std::fprintf(stderr, "\n");
  }

  o.require(haas.mean_r1 >= fixed.mean_r1, "HAAS mean R@1 below theta=0");
  o.require(haas.alignment_iou && fixed.alignment_iou && *haas.alignment_iou > *fixed.alignment_iou,
            "alignment IoU not strictly greater");
  o.require(rho <= 0.0, "theta=0 curve Spearman > 0");
  o.require(seconds < 300.0, "runtime over 5 minutes");
  char buf[160];
  std::snprintf(buf, sizeof(buf), "R@1 %.3f vs %.3f, IoU %.3f vs %.3f, rho %.2f, %.0fs", haas.mean_r1,
                fixed.mean_r1, haas.alignment_iou.value_or(0), fixed.alignment_iou.value_or(0), rho, seconds);
  o.detail += (o.detail.empty() ? "" : "; ") + std::string(buf);
  return o;
}

Outcome augmentation_geometry() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0, 1);
  Image img(512, 512);
  for (auto& v : img.pixels()) v = u(rng);

  const Image canvas = mirror_pad(img, 100);
  o.require(canvas.height() == 712 && canvas.width() == 712, "canvas 712x712");
  bool center = true;
  for (int y = 0; y < 512 && center; ++y) {
    for (int x = 0; x < 512 && center; ++x) {
      for (int ch = 0; ch < 3; ++ch) center &= canvas.at(y + 100, x + 100, ch) == img.at(y, x, ch);
    }
  }
  o.require(center, "canvas center equals original");
  bool mirrored = true;
  for (int k = 1; k <= 100 && mirrored; ++k) {
    for (int x = 0; x < 512; ++x) mirrored &= canvas.at(100 - k, x + 100, 0) == img.at(k, x, 0);
  }
  o.require(mirrored, "top strip mirrors without edge repeat");

  const Image cropped = crop_ring(img, 100);
  o.require(cropped.height() == 312 && cropped.width() == 312, "crop 312x312");
  bool inside = true;
  for (int y = 0; y < 312 && inside; ++y) {
    for (int x = 0; x < 312 && inside; ++x) {
      for (int ch = 0; ch < 3; ++ch) inside &= cropped.at(y, x, ch) == img.at(y + 100, x + 100, ch);
    }
  }
  o.require(inside, "crop equals original[100..412)");
  o.require(simulate_height(img, 100).height() == 512 && simulate_height(img, -100).width() == 512,
            "output resolution");
  o.require(adjusted_height(256, 150, 0.7) == 361.0, "adjusted_height(256,150)");
  o.require(adjusted_height(123.5, -150, 0.7) == 18.5, "adjusted_height(123.5,-150)");
  return o;
}

}  // namespace

int main() {
  struct Check {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Check> checks{
      {1, "geometry exactness", geometry_exactness},
      {2, "bound arithmetic", bound_arithmetic},
      {3, "bound soundness", bound_soundness},
      {4, "SGRS algebra", sgrs_algebra},
      {5, "gradient check", gradient_check},
      {6, "retrieval oracle", retrieval_oracle},
      {7, "synthetic scale law", scale_law},
      {8, "height-aware trend", height_aware_trend},
      {9, "augmentation geometry", augmentation_geometry},
  };
  const char* only = std::getenv("SALPN_ACCEPT_ONLY");
  int failures = 0;
  for (const auto& c : checks) {
    if (only && *only && std::atoi(only) != c.id) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s [%d] %s (%.0f ms)%s%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, ms,
                o.detail.empty() ? "" : ": ", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
