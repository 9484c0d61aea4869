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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "salpn/geometry.h"

namespace salpn {
namespace {

constexpr double kSat = 189.75;

TEST(ScaleFactor, Examples) {
  EXPECT_EQ(scale_factor(189.75, kSat, 14.0), 0);
  EXPECT_EQ(scale_factor(256, kSat, 14.0), 5);
  EXPECT_EQ(scale_factor(123.5, kSat, 14.0), -5);
}

TEST(ScaleFactor, HalfRoundsAwayFromZero) {
  // (h - s) / s * alpha = +-0.5 exactly.
  EXPECT_EQ(scale_factor(150, 100, 1.0), 1);
  EXPECT_EQ(scale_factor(50, 100, 1.0), -1);
  EXPECT_EQ(scale_factor(125, 100, 6.0), 2);  // 1.5
  EXPECT_EQ(scale_factor(75, 100, 6.0), -2);
}

TEST(ScaleFactor, MonotoneInHeight) {
  for (double alpha : {0.0, 3.5, 14.0, 16.5}) {
    int prev = scale_factor(18.5, kSat, alpha);
    for (double h = 18.5; h <= 361.0; h += 0.25) {
      const int t = scale_factor(h, kSat, alpha);
      EXPECT_GE(t, prev) << "h=" << h << " alpha=" << alpha;
      prev = t;
    }
  }
}

TEST(ScaleFactor, DependsOnlyOnHeightRatio) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> h(20, 360), k(0.01, 50), a(0, 16);
  for (int i = 0; i < 1000; ++i) {
    const double hd = h(rng), scale = k(rng), alpha = a(rng);
    const int t = scale_factor(hd, kSat, alpha);
    const int scaled = scale_factor(hd * scale, kSat * scale, alpha);
    // Away from rounding midpoints the ratio alone fixes theta.
    const double raw = (hd - kSat) / kSat * alpha;
    if (std::abs(std::abs(raw - std::trunc(raw)) - 0.5) > 1e-9) EXPECT_EQ(t, scaled);
  }
}

TEST(AlphaBounds, PublishedRange) {
  const AlphaBounds b = alpha_bounds(kSat, 361, 18.5, 4, 128);
  EXPECT_NEAR(b.shrink, 15 * kSat / 171.25, 1e-12);
  EXPECT_NEAR(b.expand, 48 * kSat / 171.25, 1e-12);
  EXPECT_NEAR(b.shrink, 16.62, 0.01);
  EXPECT_NEAR(b.expand, 53.19, 0.01);
  EXPECT_TRUE(b.admits(14));
  EXPECT_TRUE(b.admits(16));
  EXPECT_FALSE(b.admits(17));
}

TEST(AlphaBounds, NarrowRange) {
  const AlphaBounds b = alpha_bounds(kSat, 256, 123.5, 4, 128);
  EXPECT_NEAR(b.shrink, 42.96, 0.01);
  EXPECT_NEAR(b.expand, 137.48, 0.01);
}

TEST(AlphaBounds, SinglePartNeverExpands) {
  EXPECT_EQ(alpha_bounds(kSat, 361, 18.5, 1, 128).expand, 0.0);
}

TEST(AlphaBounds, DegenerateSideIsUnbounded) {
  const AlphaBounds b = alpha_bounds(kSat, kSat, 18.5, 4, 128);
  EXPECT_TRUE(std::isinf(b.shrink));
  EXPECT_FALSE(std::isinf(b.expand));
  EXPECT_THROW(alpha_bounds(kSat, 100, 18.5, 4, 128), std::invalid_argument);
}

TEST(HeightModel, ValidatesAlpha) {
  EXPECT_EQ(HeightModel(256, kSat, 14, 361, 18.5, 4, 128).theta(), 5);
  EXPECT_THROW(HeightModel(256, kSat, 17, 361, 18.5, 4, 128), std::invalid_argument);
  EXPECT_THROW(HeightModel(400, kSat, 14, 361, 18.5, 4, 128), std::invalid_argument);
  EXPECT_THROW(HeightModel(256, kSat, -1, 361, 18.5, 4, 128), std::invalid_argument);
}

TEST(Plans, SpsExamples) {
  EXPECT_EQ(plan_sps(128, 4).sides(), (std::vector<int>{32, 64, 96, 128}));
  EXPECT_EQ(plan_sps(128, 3).sides(), (std::vector<int>{43, 85, 128}));
  const PartitionPlan one = plan_sps(128, 1);
  ASSERT_EQ(one.parts.size(), 1u);
  EXPECT_EQ(one.parts[0], (SquareRegion{0, 0, 128}));
}

TEST(Plans, HaasExamples) {
  const PartitionPlan shrink = plan_haas(128, 4, 5);
  EXPECT_EQ(shrink.sides(), (std::vector<int>{22, 54, 86, 118}));
  EXPECT_FALSE(shrink.clamped());
  EXPECT_FALSE(shrink.warning);

  const PartitionPlan expand = plan_haas(128, 4, -5);
  EXPECT_EQ(expand.sides(), (std::vector<int>{42, 74, 106, 128}));
  EXPECT_EQ(expand.part_clamped, (std::vector<bool>{false, false, false, true}));
  EXPECT_TRUE(expand.clamped());
  EXPECT_FALSE(expand.warning);
}

TEST(Plans, OffsetsAreFloored) {
  const PartitionPlan p = plan_sps(128, 3);
  EXPECT_EQ(p.parts[0], (SquareRegion{42, 42, 43}));  // (128 - 43) / 2 = 42.5
  EXPECT_EQ(p.parts[1], (SquareRegion{21, 21, 85}));
}

TEST(Plans, OvershootWarns) {
  EXPECT_TRUE(plan_haas(128, 4, 16).warning);  // 32 - 32 = 0 < 2
  EXPECT_FALSE(plan_haas(128, 4, 15).warning);  // 32 - 30 = 2
  EXPECT_EQ(plan_haas(128, 4, 16).sides()[0], 2);
  EXPECT_TRUE(plan_haas(128, 4, -49).warning);  // innermost 130 > 128
  EXPECT_FALSE(plan_haas(128, 4, -48).warning);
}

TEST(Plans, ZeroThetaIsSps) {
  for (int s : {64, 128, 256}) {
    for (int n = 1; n <= 8; ++n) EXPECT_EQ(plan_haas(s, n, 0), plan_sps(s, n)) << s << " " << n;
  }
}

TEST(Plans, NestedAndConcentric) {
  for (int theta = -48; theta <= 15; ++theta) {
    for (int n = 1; n <= 6; ++n) {
      const PartitionPlan p = plan_haas(128, n, theta);
      for (std::size_t i = 0; i < p.parts.size(); ++i) {
        const SquareRegion& r = p.parts[i];
        EXPECT_GE(r.row, 0);
        EXPECT_LE(r.row + r.side, 128);
        const double center = r.row + r.side / 2.0;
        EXPECT_LE(std::abs(center - 64.0), 1.0);
        if (i > 0) EXPECT_TRUE(r.contains(p.parts[i - 1]));
      }
    }
  }
}

TEST(Plans, RejectsBadArguments) {
  EXPECT_THROW(plan_sps(128, 0), std::invalid_argument);
  EXPECT_THROW(plan_sps(8, 5), std::invalid_argument);
}

// Every admissible alpha keeps every height in range warning-free.
TEST(Plans, BoundSoundness) {
  const AlphaBounds b = alpha_bounds(kSat, 361, 18.5, 4, 128);
  std::vector<double> heights;
  for (double h = 18.5; h <= 361.0; h += 1.0) heights.push_back(h);
  heights.push_back(361.0);
  int checked = 0;
  for (double alpha = 0.0; alpha <= b.limit(); alpha += 0.5) {
    for (double h : heights) {
      EXPECT_FALSE(plan_haas(128, 4, scale_factor(h, kSat, alpha)).warning)
          << "h=" << h << " alpha=" << alpha;
      ++checked;
    }
  }
  EXPECT_GT(checked, 10000);
}

TEST(Plans, BoundIsNotVacuous) {
  const double alpha = alpha_bounds(kSat, 361, 18.5, 4, 128).shrink + 1.0;
  EXPECT_TRUE(plan_haas(128, 4, scale_factor(361, kSat, alpha)).warning);
}

TEST(Rings, CountsAndDisjointness) {
  const auto rings = plan_square_ring(128, 4);
  ASSERT_EQ(rings.size(), 4u);
  const std::vector<long long> expected{1024, 3072, 5120, 7168};
  long long total = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(rings[i].pixel_count(), expected[i]);
    total += rings[i].pixel_count();
  }
  EXPECT_EQ(total, 128 * 128);
  for (int r = 0; r < 128; r += 3) {
    for (int c = 0; c < 128; c += 5) {
      int owners = 0;
      for (const auto& ring : rings) owners += ring.contains(r, c);
      EXPECT_EQ(owners, 1);
    }
  }
  const auto single = plan_square_ring(128, 1);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].pixel_count(), 128 * 128);
}

TEST(Extract, ShapesAndValues) {
  Tensor3 t(2, 128, 128);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(i % 977);
  const auto parts = extract_partitions(t, plan_haas(128, 4, 5));
  ASSERT_EQ(parts.size(), 4u);
  const std::vector<int> sides{22, 54, 86, 118};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(parts[i].channels(), 2);
    EXPECT_EQ(parts[i].height(), sides[i]);
    EXPECT_EQ(parts[i].width(), sides[i]);
  }
  EXPECT_EQ(parts[0].at(1, 0, 0), t.at(1, 53, 53));
  EXPECT_EQ(extract_partitions(t, plan_sps(128, 1))[0], t);
  EXPECT_THROW(extract_partitions(Tensor3(1, 64, 64), plan_sps(128, 4)), std::invalid_argument);
}

TEST(Extract, ConstantTensor) {
  for (const auto& p : extract_partitions(Tensor3(1, 64, 64, 2.5f), plan_haas(64, 3, -4))) {
    for (float v : p.data()) EXPECT_EQ(v, 2.5f);
  }
}

TEST(PlanJson, RoundTrip) {
  const PartitionPlan p = plan_haas(128, 4, -5);
  const auto j = to_json(p);
  EXPECT_EQ(j["map_size"], 128);
  EXPECT_EQ(j["theta"], -5);
  EXPECT_EQ(j["clamped"], true);
  EXPECT_EQ(j["parts"][3]["side"], 128);
  EXPECT_EQ(plan_from_json(j), p);
}

}  // namespace
}  // namespace salpn
