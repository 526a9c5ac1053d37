// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "depthkit/tensor.hpp"

namespace depthkit {

/// 8-bit interleaved RGB image, row-major HWC.
struct RawImage {
  int h = 0;
  int w = 0;
  std::vector<uint8_t> pixels;  // size h*w*3

  uint8_t& at(int y, int x, int c) { return pixels[(static_cast<size_t>(y) * w + x) * 3 + c]; }
  uint8_t at(int y, int x, int c) const { return pixels[(static_cast<size_t>(y) * w + x) * 3 + c]; }
};

/// 16-bit single-channel image, row-major.
struct RawDepth16 {
  int h = 0;
  int w = 0;
  std::vector<uint16_t> values;  // size h*w

  uint16_t& at(int y, int x) { return values[static_cast<size_t>(y) * w + x]; }
  uint16_t at(int y, int x) const { return values[static_cast<size_t>(y) * w + x]; }
};

// PNG readers/writers. Readers normalize to the struct layouts above
// (palette/gray/alpha inputs are converted to RGB8; depth must be 8- or
// 16-bit single channel and is widened to 16 bits). All throw DataError.
RawImage read_image_png(const std::filesystem::path& path);
void write_image_png(const std::filesystem::path& path, const RawImage& img);
RawDepth16 read_depth_png16(const std::filesystem::path& path);
void write_depth_png16(const std::filesystem::path& path, const RawDepth16& img);

/// Quantizes metric depth to 16-bit PNG units: round(depth * scale), clamped.
RawDepth16 quantize_depth(const Arr<double>& depth_m, double scale);

/// Meters from PNG units. Zero stays zero (callers treat it as invalid).
Arr<double> dequantize_depth(const RawDepth16& img, double scale);

/// Fixed five-stop color ramp for depth visualization; depth is normalized by
/// d_max. The LUT is pinned so outputs are byte-stable across runs.
RawImage colormap_depth(const Arr<double>& depth_m, double d_max);

}  // namespace depthkit
