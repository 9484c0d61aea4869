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

#include "salpn/tensor.h"

namespace salpn {

// Meters of equivalent altitude per pixel of padding or cropping at 512 px.
inline constexpr double kDefaultLambdaAug = 0.7;

struct HeightAugmentation {
  int delta_p = 0;
  double lambda_aug = kDefaultLambdaAug;
};

// Reflect-pads `pad` pixels on every side without repeating the edge row or
// column. The result is (h + 2 pad) x (w + 2 pad).
Image mirror_pad(const Image& img, int pad);

// Removes a ring `width` pixels wide; the result is the central
// (h - 2 width) x (w - 2 width) window. Throws unless 2 width < min(h, w).
Image crop_ring(const Image& img, int width);

// Pads (delta_p > 0) or crops (delta_p < 0), then resizes back to the input
// resolution. delta_p == 0 is a plain same-size resize.
Image simulate_height(const Image& img, int delta_p);

// h_drone + lambda_aug * delta_p; throws when the result is not positive.
double adjusted_height(double h_drone, int delta_p, double lambda_aug = kDefaultLambdaAug);

}  // namespace salpn
