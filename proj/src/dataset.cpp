// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace depthkit {

DatasetProfile profile_by_name(const std::string& name) {
  DatasetProfile p;
  p.name = name;
  if (name == "indoor") {
    // NYU-style conventions; defaults above already match.
  } else if (name == "outdoor") {
    p.depth_png_scale = 256.0;
    p.cap = 80.0;
    p.crop = EvalCrop::kGarg;
    p.input_height = 352;
    p.input_width = 1216;
    p.d_max = 80.0;
  } else if (name == "sunrgbd") {
    p.cap = 8.0;
  } else if (name == "ibims") {
    p.cap = 10.0;
  } else if (name == "diode_indoor") {
    p.cap = 10.0;
  } else if (name == "hypersim") {
    p.cap = 80.0;
    p.d_max = 80.0;
  } else if (name == "toy") {
    p.input_height = 64;
    p.input_width = 64;
  } else {
    throw ConfigError("unknown dataset profile '" + name + "'");
  }
  return p;
}

DatasetProfile resolve_profile(const RunConfig& cfg) {
  DatasetProfile p = profile_by_name(cfg.profile);
  if (cfg.depth_png_scale > 0) p.depth_png_scale = cfg.depth_png_scale;
  if (cfg.cap > 0) p.cap = cfg.cap;
  p.d_min = cfg.d_min;
  if (!cfg.crop.empty()) p.crop = eval_crop_from_string(cfg.crop);
  if (cfg.input_height > 0) p.input_height = static_cast<int>(cfg.input_height);
  if (cfg.input_width > 0) p.input_width = static_cast<int>(cfg.input_width);
  if (cfg.d_max > 0) p.d_max = cfg.d_max;
  return p;
}

std::vector<SplitEntry> read_split_listing(const std::filesystem::path& listing) {
  std::ifstream in(listing);
  if (!in) throw DataError("cannot open split listing " + listing.string());
  std::vector<SplitEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    SplitEntry e;
    std::string extra;
    if (!(ls >> e.image_path)) continue;  // blank line
    if (e.image_path[0] == '#') continue;
    if (!(ls >> e.depth_path))
      throw DataError("split listing " + listing.string() + " line " + std::to_string(lineno) +
                      ": expected 'image_path depth_path [scene_index]'");
    std::string scene;
    if (ls >> scene) {
      int idx = 0;
      auto res = std::from_chars(scene.data(), scene.data() + scene.size(), idx);
      if (res.ec != std::errc{} || res.ptr != scene.data() + scene.size())
        throw DataError("split listing " + listing.string() + " line " + std::to_string(lineno) +
                        ": scene index '" + scene + "' is not an integer");
      e.scene_index = idx;
    }
    if (ls >> extra)
      throw DataError("split listing " + listing.string() + " line " + std::to_string(lineno) +
                      ": trailing tokens");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string sample_id_from_path(const std::string& image_path) {
  return std::filesystem::path(image_path).stem().string();
}

// ---------------------------------------------------------------------------
// Sizing policy
// ---------------------------------------------------------------------------

namespace {

struct CropBox {
  int y0, x0, h, w;
};

CropBox center_crop_box(int h, int w, int th, int tw) {
  int ch, cw;
  if (h >= th && w >= tw) {
    ch = th;  // frame is larger in both dims: plain center crop, no resize
    cw = tw;
  } else if (static_cast<long long>(h) * tw <= static_cast<long long>(w) * th) {
    ch = h;  // height-limited: crop width to the target aspect
    cw = std::max(1, static_cast<int>(static_cast<long long>(h) * tw / th));
  } else {
    cw = w;
    ch = std::max(1, static_cast<int>(static_cast<long long>(w) * th / tw));
  }
  return {(h - ch) / 2, (w - cw) / 2, ch, cw};
}

}  // namespace

std::pair<int, int> SizingPolicy::output_dims(int h, int w) const {
  if (target_h > 0 && target_w > 0) return {target_h, target_w};
  const int fh = (h / 32) * 32, fw = (w / 32) * 32;
  if (fh == 0 || fw == 0)
    throw DataError("image " + std::to_string(h) + "x" + std::to_string(w) +
                    " too small for 32-divisible sizing");
  return {fh, fw};
}

RawImage SizingPolicy::apply(const RawImage& img) const {
  const auto [th, tw] = output_dims(img.h, img.w);
  const CropBox box = center_crop_box(img.h, img.w, th, tw);
  RawImage out;
  out.h = th;
  out.w = tw;
  out.pixels.resize(static_cast<size_t>(th) * tw * 3);
  for (int y = 0; y < th; ++y) {
    // bilinear sample positions within the crop box (identity when box == target)
    const double sy = box.h == th ? y : (y + 0.5) * box.h / th - 0.5;
    const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, box.h - 1);
    const int y1 = std::min(y0 + 1, box.h - 1);
    const double fy = std::clamp(sy - y0, 0.0, 1.0);
    for (int x = 0; x < tw; ++x) {
      const double sx = box.w == tw ? x : (x + 0.5) * box.w / tw - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, box.w - 1);
      const int x1 = std::min(x0 + 1, box.w - 1);
      const double fx = std::clamp(sx - x0, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        const double v =
            (1 - fy) * ((1 - fx) * img.at(box.y0 + y0, box.x0 + x0, c) +
                        fx * img.at(box.y0 + y0, box.x0 + x1, c)) +
            fy * ((1 - fx) * img.at(box.y0 + y1, box.x0 + x0, c) +
                  fx * img.at(box.y0 + y1, box.x0 + x1, c));
        out.at(y, x, c) = static_cast<uint8_t>(std::lround(v));
      }
    }
  }
  return out;
}

Arr<double> SizingPolicy::apply_depth(const Arr<double>& depth) const {
  const auto [th, tw] = output_dims(static_cast<int>(depth.rows()), static_cast<int>(depth.cols()));
  const CropBox box =
      center_crop_box(static_cast<int>(depth.rows()), static_cast<int>(depth.cols()), th, tw);
  Arr<double> out(th, tw);
  for (int y = 0; y < th; ++y) {
    const int sy = box.h == th ? y : std::min(box.h - 1, static_cast<int>((y + 0.5) * box.h / th));
    for (int x = 0; x < tw; ++x) {
      const int sx =
          box.w == tw ? x : std::min(box.w - 1, static_cast<int>((x + 0.5) * box.w / tw));
      out(y, x) = depth(box.y0 + sy, box.x0 + sx);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sample loader
// ---------------------------------------------------------------------------

SampleLoader::SampleLoader(std::filesystem::path root, std::vector<SplitEntry> entries,
                           DatasetProfile profile, bool apply_eval_crop)
    : root_(std::move(root)),
      entries_(std::move(entries)),
      profile_(std::move(profile)),
      sizing_{profile_.input_height, profile_.input_width},
      apply_eval_crop_(apply_eval_crop) {}

DepthSample SampleLoader::load(size_t index) const {
  if (index >= entries_.size()) throw ContractError("SampleLoader: index out of range");
  const SplitEntry& e = entries_[index];
  DepthSample s;
  s.id = sample_id_from_path(e.image_path);
  s.scene_index = e.scene_index;
  try {
    const RawImage raw = read_image_png(root_ / e.image_path);
    s.image = normalize_image<double>(sizing_.apply(raw));
    const RawDepth16 dpng = read_depth_png16(root_ / e.depth_path);
    if (dpng.h != raw.h || dpng.w != raw.w)
      throw DataError("image and depth dims differ (" + std::to_string(raw.h) + "x" +
                      std::to_string(raw.w) + " vs " + std::to_string(dpng.h) + "x" +
                      std::to_string(dpng.w) + ")");
    // Zero PNG values are sensor dropouts; / scale keeps them at 0 where the
    // d_min bound in the mask excludes them.
    s.gt_depth = sizing_.apply_depth(dequantize_depth(dpng, profile_.depth_png_scale));
    s.mask = build_mask(*s.gt_depth, profile_.d_min, profile_.cap,
                        apply_eval_crop_ ? profile_.crop : EvalCrop::kNone);
  } catch (const Error& err) {
    throw DataError("sample '" + s.id + "': " + err.what());
  }
  return s;
}

void parallel_for_indices(size_t n, int workers, const std::function<void(size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(n));
  pool.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace depthkit
