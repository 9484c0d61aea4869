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

#include "salpn/augment.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace salpn {
namespace {

// Index reflection about the edge samples (edge not repeated): -1 -> 1.
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Image mirror_pad(const Image& img, int pad) {
  if (pad < 0) throw std::invalid_argument("mirror_pad: pad must be >= 0");
  const int h = img.height() + 2 * pad;
  const int w = img.width() + 2 * pad;
  Image out(h, w);
  for (int y = 0; y < h; ++y) {
    const int sy = reflect(y - pad, img.height());
    for (int x = 0; x < w; ++x) {
      const int sx = reflect(x - pad, img.width());
      for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = img.at(sy, sx, ch);
    }
  }
  return out;
}

Image crop_ring(const Image& img, int width) {
  if (width < 0) throw std::invalid_argument("crop_ring: width must be >= 0");
  if (2 * width >= std::min(img.height(), img.width())) {
    throw std::invalid_argument("crop_ring: ring width " + std::to_string(width) +
                                " leaves no pixels of a " + std::to_string(img.height()) + "x" +
                                std::to_string(img.width()) + " image");
  }
  return crop(img, width, width, img.height() - 2 * width, img.width() - 2 * width);
}

Image simulate_height(const Image& img, int delta_p) {
  if (delta_p > 0) return resize(mirror_pad(img, delta_p), img.height(), img.width());
  if (delta_p < 0) return resize(crop_ring(img, -delta_p), img.height(), img.width());
  return resize(img, img.height(), img.width());
}

double adjusted_height(double h_drone, int delta_p, double lambda_aug) {
  const double h = h_drone + lambda_aug * delta_p;
  if (!(h > 0.0)) {
    throw std::invalid_argument("adjusted_height: " + std::to_string(h_drone) + " + " +
                                std::to_string(lambda_aug) + " * " + std::to_string(delta_p) +
                                " is not a positive height");
  }
  return h;
}

}  // namespace salpn
