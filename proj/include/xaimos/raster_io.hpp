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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xaimos/saliency.hpp"

namespace xaimos::raster_io {

// XMAP: 16-byte little-endian header {"XMAP", u32 width, u32 height,
// u32 reserved} followed by width * height little-endian float32 values in
// row-major order.
std::vector<std::uint8_t> encode_xmap(const Raster<float>& values);
Raster<float> decode_xmap(const std::vector<std::uint8_t>& bytes);

// 8-bit PNG, gray or RGB(A) input. Values rescaled to [0, 1].
Image decode_png(const std::vector<std::uint8_t>& bytes);
// 8-bit gray (1 channel) or RGB (3 channels).
std::vector<std::uint8_t> encode_png(const Image& image);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

// Detects XMAP or PNG by magic and min-max normalizes.
ExplanationMap load_map(const std::filesystem::path& path);
void save_map(const std::filesystem::path& path, const ExplanationMap& map);

// PNG, or XMAP read as a single-channel image.
Image load_image(const std::filesystem::path& path);

// Pixel values as they travel on the wire: round(clamp(v, 0, 1) * 255).
std::vector<std::uint8_t> quantized_bytes(const Image& image);

}  // namespace xaimos::raster_io
