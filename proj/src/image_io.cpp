// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "depthkit/errors.hpp"

namespace depthkit {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;

  PngReader() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) throw DataError("libpng init failed");
  }
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;

  PngWriter() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) throw DataError("libpng init failed");
  }
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

bool host_is_little_endian() {
  const uint16_t probe = 1;
  return *reinterpret_cast<const uint8_t*>(&probe) == 1;
}

}  // namespace

RawImage read_image_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  PngReader r;
  if (setjmp(png_jmpbuf(r.png))) throw DataError("corrupt PNG: " + path.string());
  png_init_io(r.png, f.get());
  png_read_info(r.png, r.info);

  // Normalize everything to 8-bit RGB.
  png_set_palette_to_rgb(r.png);
  png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_bit_depth(r.png, r.info) == 16) png_set_strip_16(r.png);
  png_set_strip_alpha(r.png);
  if (png_get_color_type(r.png, r.info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(r.png, r.info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(r.png);
  png_read_update_info(r.png, r.info);

  RawImage img;
  img.h = static_cast<int>(png_get_image_height(r.png, r.info));
  img.w = static_cast<int>(png_get_image_width(r.png, r.info));
  if (png_get_channels(r.png, r.info) != 3)
    throw DataError("expected 3-channel image after conversion: " + path.string());
  img.pixels.resize(static_cast<size_t>(img.h) * img.w * 3);

  std::vector<png_bytep> rows(img.h);
  for (int y = 0; y < img.h; ++y) rows[y] = img.pixels.data() + static_cast<size_t>(y) * img.w * 3;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return img;
}

void write_image_png(const std::filesystem::path& path, const RawImage& img) {
  if (img.pixels.size() != static_cast<size_t>(img.h) * img.w * 3)
    throw ContractError("write_image_png: pixel buffer does not match dims");
  FilePtr f = open_file(path, "wb");
  PngWriter w;
  if (setjmp(png_jmpbuf(w.png))) throw DataError("PNG write failed: " + path.string());
  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, img.w, img.h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  for (int y = 0; y < img.h; ++y)
    png_write_row(w.png, const_cast<png_bytep>(img.pixels.data() + static_cast<size_t>(y) * img.w * 3));
  png_write_end(w.png, nullptr);
}

RawDepth16 read_depth_png16(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  PngReader r;
  if (setjmp(png_jmpbuf(r.png))) throw DataError("corrupt PNG: " + path.string());
  png_init_io(r.png, f.get());
  png_read_info(r.png, r.info);

  const int color = png_get_color_type(r.png, r.info);
  if (color != PNG_COLOR_TYPE_GRAY)
    throw DataError("depth PNG must be single-channel grayscale: " + path.string());
  const int bit_depth = png_get_bit_depth(r.png, r.info);
  if (bit_depth < 16) png_set_expand_gray_1_2_4_to_8(r.png);
  if (bit_depth == 16 && host_is_little_endian()) png_set_swap(r.png);
  png_read_update_info(r.png, r.info);

  RawDepth16 img;
  img.h = static_cast<int>(png_get_image_height(r.png, r.info));
  img.w = static_cast<int>(png_get_image_width(r.png, r.info));
  img.values.resize(static_cast<size_t>(img.h) * img.w);

  if (bit_depth == 16) {
    std::vector<png_bytep> rows(img.h);
    for (int y = 0; y < img.h; ++y)
      rows[y] = reinterpret_cast<png_bytep>(img.values.data() + static_cast<size_t>(y) * img.w);
    png_read_image(r.png, rows.data());
  } else {
    std::vector<uint8_t> row8(static_cast<size_t>(img.w));
    std::vector<png_bytep> rows(img.h);
    std::vector<std::vector<uint8_t>> buf(img.h, row8);
    for (int y = 0; y < img.h; ++y) rows[y] = buf[y].data();
    png_read_image(r.png, rows.data());
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) img.at(y, x) = buf[y][x];
  }
  png_read_end(r.png, nullptr);
  return img;
}

void write_depth_png16(const std::filesystem::path& path, const RawDepth16& img) {
  if (img.values.size() != static_cast<size_t>(img.h) * img.w)
    throw ContractError("write_depth_png16: value buffer does not match dims");
  FilePtr f = open_file(path, "wb");
  PngWriter w;
  if (setjmp(png_jmpbuf(w.png))) throw DataError("PNG write failed: " + path.string());
  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, img.w, img.h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  if (host_is_little_endian()) png_set_swap(w.png);
  for (int y = 0; y < img.h; ++y)
    png_write_row(w.png, reinterpret_cast<png_bytep>(const_cast<uint16_t*>(
                             img.values.data() + static_cast<size_t>(y) * img.w)));
  png_write_end(w.png, nullptr);
}

RawDepth16 quantize_depth(const Arr<double>& depth_m, double scale) {
  RawDepth16 out;
  out.h = static_cast<int>(depth_m.rows());
  out.w = static_cast<int>(depth_m.cols());
  out.values.resize(static_cast<size_t>(out.h) * out.w);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double v = std::round(depth_m(y, x) * scale);
      if (v < 0) v = 0;
      if (v > 65535) v = 65535;
      out.at(y, x) = static_cast<uint16_t>(v);
    }
  return out;
}

Arr<double> dequantize_depth(const RawDepth16& img, double scale) {
  Arr<double> out(img.h, img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) out(y, x) = img.at(y, x) / scale;
  return out;
}

RawImage colormap_depth(const Arr<double>& depth_m, double d_max) {
  // Near-to-far ramp: dark blue, cyan, green, yellow, warm red.
  static constexpr double stops[5][3] = {
      {0.05, 0.03, 0.35}, {0.05, 0.65, 0.85}, {0.10, 0.80, 0.25}, {0.95, 0.90, 0.10},
      {0.85, 0.15, 0.10}};
  RawImage img;
  img.h = static_cast<int>(depth_m.rows());
  img.w = static_cast<int>(depth_m.cols());
  img.pixels.resize(static_cast<size_t>(img.h) * img.w * 3);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double t = depth_m(y, x) / d_max;
      if (t < 0) t = 0;
      if (t > 1) t = 1;
      const double pos = t * 4.0;
      const int i = std::min(3, static_cast<int>(pos));
      const double f = pos - i;
      for (int c = 0; c < 3; ++c) {
        const double v = stops[i][c] * (1.0 - f) + stops[i + 1][c] * f;
        img.at(y, x, c) = static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  return img;
}

}  // namespace depthkit
