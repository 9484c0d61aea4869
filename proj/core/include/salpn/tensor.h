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

#include <cstddef>
#include <span>
#include <vector>

namespace salpn {

// Dense channel x height x width feature map, row-major and channel-major.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int channels, int height, int width, float fill = 0.0f);
  Tensor3(int channels, int height, int width, std::vector<float> data);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float at(int c, int y, int x) const { return data_[index(c, y, x)]; }
  float& at(int c, int y, int x) { return data_[index(c, y, x)]; }

  std::span<const float> plane(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }
  std::span<float> plane(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool same_shape(const Tensor3& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// RGB image with channel values in [0, 1], stored as interleaved triples.
class Image {
 public:
  Image() = default;
  Image(int height, int width, float fill = 0.0f);
  Image(int height, int width, std::vector<float> pixels);

  int height() const { return height_; }
  int width() const { return width_; }

  float at(int y, int x, int ch) const { return pixels_[index(y, x, ch)]; }
  float& at(int y, int x, int ch) { return pixels_[index(y, x, ch)]; }

  std::span<const float> pixels() const { return pixels_; }
  std::span<float> pixels() { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int y, int x, int ch) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + ch;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> pixels_;
};

// Spatial 0/1 mask.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, bool fill = false);
  BinaryMask(int height, int width, std::vector<unsigned char> values);

  int height() const { return height_; }
  int width() const { return width_; }
  bool at(int y, int x) const { return values_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int y, int x, bool v) { values_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

  std::span<const unsigned char> values() const { return values_; }
  std::size_t count() const;
  BinaryMask complement() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<unsigned char> values_;
};

struct MaskedAverage {
  std::vector<float> values;
  std::size_t count = 0;  // selected pixels
  bool empty = false;     // true when no pixel was selected and the full mean was returned
};

// x4 bilinear upsampling with pixel-center (align_corners = false) sampling.
Tensor3 upsample4(const Tensor3& t);

// Bilinear upsampling by an integer factor; upsample4 is upsample(t, 4).
Tensor3 upsample(const Tensor3& t, int factor);

std::vector<float> channel_average(const Tensor3& t);

// Per-channel mean over pixels where mask is set. Falls back to the full
// per-channel mean (and sets `empty`) when the mask selects nothing.
MaskedAverage masked_average(const Tensor3& t, const BinaryMask& mask);

// Sub-tensor over a square window; all channels kept.
Tensor3 crop(const Tensor3& t, int row, int col, int side);

// Bilinear resampling with pixel-center convention.
Image resize(const Image& img, int out_h, int out_w);

Image flip_horizontal(const Image& img);
Image crop(const Image& img, int row, int col, int height, int width);

}  // namespace salpn
