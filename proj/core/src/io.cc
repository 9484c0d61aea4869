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

#include "salpn/io.h"

#include <png.h>
#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace salpn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "FMAP1 I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  std::memcpy(b.data(), &v, 4);
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<char, 4> b{};
  in.read(b.data(), 4);
  if (!in) throw IoError("FMAP: truncated header");
  std::uint32_t v = 0;
  std::memcpy(&v, b.data(), 4);
  return v;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

void png_error_fn(png_structp, png_const_charp msg) { throw IoError(std::string("libpng: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

// Writes rows of `channels` samples at `bit_depth` bits; `rows` holds
// big-endian sample bytes as libpng expects.
void write_png_rows(const std::filesystem::path& path, int height, int width, int color_type,
                    int bit_depth, const std::vector<std::uint8_t>& bytes, std::size_t row_bytes) {
  auto f = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, bytes.data() + static_cast<std::size_t>(y) * row_bytes);
  }
  png_write_end(png, nullptr);
}

struct DecodedPng {
  int height = 0;
  int width = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint8_t> bytes;  // big-endian samples for 16-bit
};

DecodedPng read_png_any(const std::filesystem::path& path, bool want_rgb) {
  auto f = open_file(path, "rb");
  std::array<unsigned char, 8> sig{};
  if (std::fread(sig.data(), 1, 8, f.get()) != 8 || png_sig_cmp(sig.data(), 0, 8) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (depth < 8) png_set_packing(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (want_rgb) {
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  } else if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
    throw IoError(path.string() + ": expected a grayscale PNG");
  }
  png_read_update_info(png, info);

  DecodedPng out;
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.bytes.resize(row_bytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return out;
}

}  // namespace

void write_fmap(std::ostream& out, const Tensor3& t) {
  for (float v : t.data()) {
    if (!std::isfinite(v)) throw IoError("FMAP: refusing to write a non-finite value");
  }
  out.write(kFmapMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(t.channels()));
  put_u32(out, static_cast<std::uint32_t>(t.height()));
  put_u32(out, static_cast<std::uint32_t>(t.width()));
  const auto data = t.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw IoError("FMAP: write failed");
}

Tensor3 read_fmap(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || std::memcmp(magic.data(), kFmapMagic, 4) != 0) throw IoError("FMAP: bad magic");
  const std::uint32_t c = get_u32(in);
  const std::uint32_t h = get_u32(in);
  const std::uint32_t w = get_u32(in);
  if (c == 0 || h == 0 || w == 0) throw IoError("FMAP: zero dimension in header");
  const std::size_t n = static_cast<std::size_t>(c) * h * w;
  std::vector<float> data(n);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw IoError("FMAP: truncated payload");
  for (float v : data) {
    if (!std::isfinite(v)) throw IoError("FMAP: non-finite value in payload");
  }
  return Tensor3(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w), std::move(data));
}

void write_fmap(const std::filesystem::path& path, const Tensor3& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  write_fmap(out, t);
}

Tensor3 read_fmap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_fmap(in);
}

void write_png_rgb(const std::filesystem::path& path, const Image& img) {
  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * 3;
  std::vector<std::uint8_t> bytes(row_bytes * img.height());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(std::lround(px[i] * 255.0f));
  }
  write_png_rows(path, img.height(), img.width(), PNG_COLOR_TYPE_RGB, 8, bytes, row_bytes);
}

Image read_png_rgb(const std::filesystem::path& path) {
  const DecodedPng d = read_png_any(path, true);
  std::vector<float> px(d.bytes.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = d.bytes[i] / 255.0f;
  return Image(d.height, d.width, std::move(px));
}

void write_png_gray(const std::filesystem::path& path, const GrayImage& img) {
  if (img.bit_depth != 8 && img.bit_depth != 16) throw IoError("gray PNG: bit depth must be 8 or 16");
  if (img.values.size() != static_cast<std::size_t>(img.height) * img.width) {
    throw IoError("gray PNG: value buffer does not match shape");
  }
  const int bps = img.bit_depth / 8;
  const std::size_t row_bytes = static_cast<std::size_t>(img.width) * bps;
  std::vector<std::uint8_t> bytes(row_bytes * img.height);
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    const std::uint16_t v = img.values[i];
    if (bps == 1) {
      bytes[i] = static_cast<std::uint8_t>(std::min<std::uint16_t>(v, 255));
    } else {
      bytes[2 * i] = static_cast<std::uint8_t>(v >> 8);
      bytes[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
  }
  write_png_rows(path, img.height, img.width, PNG_COLOR_TYPE_GRAY, img.bit_depth, bytes, row_bytes);
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  const DecodedPng d = read_png_any(path, false);
  GrayImage out;
  out.height = d.height;
  out.width = d.width;
  out.bit_depth = d.bit_depth;
  const std::size_t n = static_cast<std::size_t>(d.height) * d.width;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = d.bit_depth == 16
                        ? static_cast<std::uint16_t>((d.bytes[2 * i] << 8) | d.bytes[2 * i + 1])
                        : d.bytes[i];
  }
  return out;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

std::string sha256_hex(const std::string& text) {
  return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace salpn
