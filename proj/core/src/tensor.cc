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

#include "salpn/tensor.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace salpn {
namespace {

void check_dims(int a, int b, int c, const char* what) {
  if (a <= 0 || b <= 0 || c <= 0) {
    throw std::invalid_argument(std::string(what) + ": dimensions must be positive, got " +
                                std::to_string(a) + "x" + std::to_string(b) + "x" +
                                std::to_string(c));
  }
}

// Source coordinate for output index `dst` when scaling by in/out with
// pixel centers aligned. Returns the two taps and the weight of the second.
struct Taps {
  int i0;
  int i1;
  double w1;
};

Taps bilinear_taps(int dst, int in_size, int out_size) {
  const double scale = static_cast<double>(in_size) / out_size;
  double src = (dst + 0.5) * scale - 0.5;
  if (src < 0.0) src = 0.0;
  int i0 = static_cast<int>(std::floor(src));
  if (i0 > in_size - 1) i0 = in_size - 1;
  const int i1 = std::min(i0 + 1, in_size - 1);
  double w1 = src - i0;
  if (i1 == i0) w1 = 0.0;
  return {i0, i1, w1};
}

std::vector<Taps> taps_for(int in_size, int out_size) {
  std::vector<Taps> taps(out_size);
  for (int i = 0; i < out_size; ++i) taps[i] = bilinear_taps(i, in_size, out_size);
  return taps;
}

}  // namespace

Tensor3::Tensor3(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
  check_dims(channels, height, width, "Tensor3");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Tensor3::Tensor3(int channels, int height, int width, std::vector<float> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  check_dims(channels, height, width, "Tensor3");
  if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
    throw std::invalid_argument("Tensor3: data length " + std::to_string(data_.size()) +
                                " does not match shape");
  }
}

Image::Image(int height, int width, float fill) : height_(height), width_(width) {
  check_dims(height, width, 3, "Image");
  pixels_.assign(static_cast<std::size_t>(height) * width * 3, fill);
}

Image::Image(int height, int width, std::vector<float> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  check_dims(height, width, 3, "Image");
  if (pixels_.size() != static_cast<std::size_t>(height) * width * 3) {
    throw std::invalid_argument("Image: pixel buffer does not match shape");
  }
  for (float v : pixels_) {
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("Image: channel value outside [0,1]");
  }
}

BinaryMask::BinaryMask(int height, int width, bool fill) : height_(height), width_(width) {
  check_dims(height, width, 1, "BinaryMask");
  values_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

BinaryMask::BinaryMask(int height, int width, std::vector<unsigned char> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims(height, width, 1, "BinaryMask");
  if (values_.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("BinaryMask: value buffer does not match shape");
  }
  for (auto& v : values_) v = v ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), 1));
}

BinaryMask BinaryMask::complement() const {
  BinaryMask out = *this;
  for (auto& v : out.values_) v = v ? 0 : 1;
  return out;
}

Tensor3 upsample(const Tensor3& t, int factor) {
  if (factor < 1) throw std::invalid_argument("upsample: factor must be >= 1");
  const int out_h = t.height() * factor;
  const int out_w = t.width() * factor;
  Tensor3 out(t.channels(), out_h, out_w);
  const auto ty = taps_for(t.height(), out_h);
  const auto tx = taps_for(t.width(), out_w);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      const auto [y0, y1, wy] = ty[y];
      for (int x = 0; x < out_w; ++x) {
        const auto [x0, x1, wx] = tx[x];
        const double top = (1.0 - wx) * t.at(c, y0, x0) + wx * t.at(c, y0, x1);
        const double bot = (1.0 - wx) * t.at(c, y1, x0) + wx * t.at(c, y1, x1);
        out.at(c, y, x) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

Tensor3 upsample4(const Tensor3& t) { return upsample(t, 4); }

std::vector<float> channel_average(const Tensor3& t) {
  std::vector<float> out(t.channels());
  for (int c = 0; c < t.channels(); ++c) {
    double sum = 0.0;
    for (float v : t.plane(c)) sum += v;
    out[c] = static_cast<float>(sum / static_cast<double>(t.plane_size()));
  }
  return out;
}

MaskedAverage masked_average(const Tensor3& t, const BinaryMask& mask) {
  if (mask.height() != t.height() || mask.width() != t.width()) {
    throw std::invalid_argument("masked_average: mask " + std::to_string(mask.height()) + "x" +
                                std::to_string(mask.width()) + " does not match tensor " +
                                std::to_string(t.height()) + "x" + std::to_string(t.width()));
  }
  MaskedAverage result;
  result.count = mask.count();
  if (result.count == 0) {
    result.values = channel_average(t);
    result.empty = true;
    return result;
  }
  const auto m = mask.values();
  result.values.resize(t.channels());
  for (int c = 0; c < t.channels(); ++c) {
    const auto p = t.plane(c);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (m[i]) sum += p[i];
    }
    result.values[c] = static_cast<float>(sum / static_cast<double>(result.count));
  }
  return result;
}

Tensor3 crop(const Tensor3& t, int row, int col, int side) {
  if (side < 1 || row < 0 || col < 0 || row + side > t.height() || col + side > t.width()) {
    throw std::invalid_argument("crop: window (" + std::to_string(row) + "," +
                                std::to_string(col) + ", side " + std::to_string(side) +
                                ") outside " + std::to_string(t.height()) + "x" +
                                std::to_string(t.width()) + " map");
  }
  Tensor3 out(t.channels(), side, side);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < side; ++y) {
      const auto src = t.plane(c).subspan(static_cast<std::size_t>(row + y) * t.width() + col, side);
      std::copy(src.begin(), src.end(), out.plane(c).begin() + static_cast<std::ptrdiff_t>(y) * side);
    }
  }
  return out;
}

Image resize(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize: target size must be >= 1");
  Image out(out_h, out_w);
  const auto ty = taps_for(img.height(), out_h);
  const auto tx = taps_for(img.width(), out_w);
  for (int y = 0; y < out_h; ++y) {
    const auto [y0, y1, wy] = ty[y];
    for (int x = 0; x < out_w; ++x) {
      const auto [x0, x1, wx] = tx[x];
      for (int ch = 0; ch < 3; ++ch) {
        const double top = (1.0 - wx) * img.at(y0, x0, ch) + wx * img.at(y0, x1, ch);
        const double bot = (1.0 - wx) * img.at(y1, x0, ch) + wx * img.at(y1, x1, ch);
        const double v = (1.0 - wy) * top + wy * bot;
        out.at(y, x, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = img.at(y, img.width() - 1 - x, ch);
    }
  }
  return out;
}

Image crop(const Image& img, int row, int col, int height, int width) {
  if (height < 1 || width < 1 || row < 0 || col < 0 || row + height > img.height() ||
      col + width > img.width()) {
    throw std::invalid_argument("crop: window outside image");
  }
  Image out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = img.at(row + y, col + x, ch);
    }
  }
  return out;
}

}  // namespace salpn
