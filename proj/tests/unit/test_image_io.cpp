// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "depthkit/image_io.hpp"
#include "depthkit/rng.hpp"
#include "tempdir.hpp"

using namespace depthkit;

TEST_CASE("8-bit RGB PNG round trip is exact") {
  test::TempDir dir("png8");
  Rng rng(1);
  RawImage img;
  img.h = 13;
  img.w = 17;
  img.pixels.resize(13 * 17 * 3);
  for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.uniform_int(0, 255));
  write_image_png(dir / "a.png", img);
  RawImage back = read_image_png(dir / "a.png");
  CHECK(back.h == 13);
  CHECK(back.w == 17);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("16-bit depth PNG round trip is exact") {
  test::TempDir dir("png16");
  Rng rng(2);
  RawDepth16 img;
  img.h = 9;
  img.w = 21;
  img.values.resize(9 * 21);
  for (auto& v : img.values) v = static_cast<uint16_t>(rng.uniform_int(0, 65535));
  write_depth_png16(dir / "d.png", img);
  RawDepth16 back = read_depth_png16(dir / "d.png");
  CHECK(back.h == 9);
  CHECK(back.w == 21);
  CHECK(back.values == img.values);
}

TEST_CASE("reading an RGB image as depth is rejected") {
  test::TempDir dir("pngmix");
  RawImage img;
  img.h = 4;
  img.w = 4;
  img.pixels.assign(48, 100);
  write_image_png(dir / "rgb.png", img);
  CHECK_THROWS_AS(read_depth_png16(dir / "rgb.png"), DataError);
  CHECK_THROWS_AS(read_image_png(dir / "missing.png"), DataError);
}

TEST_CASE("depth quantization round-trips within 1/scale") {
  const double scale = 1000.0;
  Rng rng(3);
  Arr<double> depth(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) depth(y, x) = rng.uniform(0.05, 10.0);
  Arr<double> back = dequantize_depth(quantize_depth(depth, scale), scale);
  CHECK(((back - depth).abs() <= 1.0 / scale).all());
  // round() actually lands within half a unit
  CHECK(((back - depth).abs() <= 0.5 / scale + 1e-12).all());
}

TEST_CASE("quantization clamps out-of-range values") {
  Arr<double> depth(1, 3);
  depth << -2.0, 1.0, 1e9;
  auto q = quantize_depth(depth, 1000.0);
  CHECK(q.at(0, 0) == 0);
  CHECK(q.at(0, 1) == 1000);
  CHECK(q.at(0, 2) == 65535);
}

TEST_CASE("colormap output matches input dims and is deterministic") {
  Arr<double> depth = Arr<double>::Constant(6, 11, 3.0);
  depth(0, 0) = 0.0;
  depth(5, 10) = 10.0;
  RawImage a = colormap_depth(depth, 10.0);
  RawImage b = colormap_depth(depth, 10.0);
  CHECK(a.h == 6);
  CHECK(a.w == 11);
  CHECK(a.pixels == b.pixels);
  // near maps cool, far maps warm
  CHECK(a.at(0, 0, 2) > a.at(0, 0, 0));
  CHECK(a.at(5, 10, 0) > a.at(5, 10, 2));
}
