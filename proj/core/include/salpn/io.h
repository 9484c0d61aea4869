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
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "salpn/tensor.h"

namespace salpn {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// FMAP1: "FMAP" magic, then u32 LE channels, height, width, then
// channels*height*width LE float32 values in channel-major row-major order.
inline constexpr char kFmapMagic[4] = {'F', 'M', 'A', 'P'};
inline constexpr std::size_t kFmapHeaderBytes = 16;

void write_fmap(std::ostream& out, const Tensor3& t);
Tensor3 read_fmap(std::istream& in);
void write_fmap(const std::filesystem::path& path, const Tensor3& t);
Tensor3 read_fmap(const std::filesystem::path& path);

// 8-bit RGB PNG.
void write_png_rgb(const std::filesystem::path& path, const Image& img);
Image read_png_rgb(const std::filesystem::path& path);

// Grayscale PNG, 8 or 16 bit. Values are raw sample values.
struct GrayImage {
  int height = 0;
  int width = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> values;
};
void write_png_gray(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_png_gray(const std::filesystem::path& path);

// Hex SHA-256 of a byte buffer.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace salpn
