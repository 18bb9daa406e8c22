// Copyright 2026 The xaimos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xaimos/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "xaimos/errors.hpp"

namespace xaimos::raster_io {

namespace {

constexpr char kXmapMagic[4] = {'X', 'M', 'A', 'P'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

bool is_png(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

bool is_xmap(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 16 && std::memcmp(bytes.data(), kXmapMagic, 4) == 0;
}

}  // namespace

std::vector<std::uint8_t> encode_xmap(const Raster<float>& values) {
  std::vector<std::uint8_t> out(kXmapMagic, kXmapMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(values.cols()));
  put_u32(out, static_cast<std::uint32_t>(values.rows()));
  put_u32(out, 0);
  out.reserve(16 + 4 * static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::uint32_t bits;
    const float v = values.data()[i];
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
  return out;
}

Raster<float> decode_xmap(const std::vector<std::uint8_t>& bytes) {
  if (!is_xmap(bytes)) throw ValidationError("not an XMAP raster");
  const std::uint32_t w = get_u32(bytes.data() + 4);
  const std::uint32_t h = get_u32(bytes.data() + 8);
  const std::uint64_t n = static_cast<std::uint64_t>(w) * h;
  if (w == 0 || h == 0 || bytes.size() != 16 + 4 * n) {
    throw ValidationError("XMAP size does not match its header");
  }
  Raster<float> values(h, w);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint32_t bits = get_u32(bytes.data() + 16 + 4 * i);
    std::memcpy(values.data() + i, &bits, 4);
  }
  if (!values.allFinite()) throw ValidationError("XMAP contains non-finite values");
  return values;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw ValidationError(std::string("PNG decode failed: ") + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&img);
    throw ValidationError(std::string("PNG decode failed: ") + img.message);
  }
  Image out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.channels = channels;
  out.pixels.resize(static_cast<Eigen::Index>(img.width) * img.height, channels);
  for (Eigen::Index i = 0; i < out.pixels.size(); ++i) {
    out.pixels.data()[i] = static_cast<float>(buffer[static_cast<std::size_t>(i)]) / 255.0f;
  }
  return out;
}

std::vector<std::uint8_t> quantized_bytes(const Image& image) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(image.pixels.size()));
  for (Eigen::Index i = 0; i < image.pixels.size(); ++i) {
    const float v = std::clamp(image.pixels.data()[i], 0.0f, 1.0f);
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw ValidationError("PNG encode supports 1 or 3 channels");
  }
  const auto raw = quantized_bytes(image);
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, raw.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, raw.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

ExplanationMap load_map(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (is_xmap(bytes)) return ExplanationMap::normalized(decode_xmap(bytes));
  if (is_png(bytes)) {
    const Image img = decode_png(bytes);
    if (img.channels != 1) throw ValidationError(path.string() + ": map PNG must be grayscale");
    Raster<float> values =
        Eigen::Map<const Raster<float>>(img.pixels.data(), img.height, img.width);
    return ExplanationMap::normalized(values);
  }
  throw ValidationError(path.string() + ": unrecognized map format");
}

void save_map(const std::filesystem::path& path, const ExplanationMap& map) {
  write_bytes(path, encode_xmap(map.values()));
}

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (is_png(bytes)) return decode_png(bytes);
  if (is_xmap(bytes)) {
    const Raster<float> values = decode_xmap(bytes);
    Image img;
    img.width = static_cast<int>(values.cols());
    img.height = static_cast<int>(values.rows());
    img.channels = 1;
    img.pixels = Eigen::Map<const Eigen::VectorXf>(values.data(), values.size());
    return img;
  }
  throw ValidationError(path.string() + ": unrecognized image format");
}

}  // namespace xaimos::raster_io
