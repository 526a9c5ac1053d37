// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic image -> latent front half of the pipeline: a fixed
// downsample-by-8 encoder contract with a toy convolutional implementation.
#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "depthkit/diffusion.hpp"
#include "depthkit/image_io.hpp"
#include "depthkit/nn/layers.hpp"
#include "depthkit/tensor.hpp"

namespace depthkit {

/// RGB image in [0,1], dims divisible by 32.
template <typename Scalar>
struct Image {
  Tensor<Scalar> data;  // 3 x (h*w)
};

template <typename Scalar>
void validate_image_dims(const Tensor<Scalar>& t, const char* what) {
  if (t.channels() != 3) throw DataError(std::string(what) + ": image must have 3 channels");
  if (t.h % 32 != 0 || t.w % 32 != 0)
    throw DataError(std::string(what) + ": dims " + std::to_string(t.h) + "x" +
                    std::to_string(t.w) +
                    " not divisible by 32; pad or crop the input first");
}

/// Scales an 8-bit RGB image to [0,1]. Per-channel standardization is not
/// applied here; the classifier path standardizes internally.
template <typename Scalar>
Image<Scalar> normalize_image(const RawImage& raw) {
  if (raw.pixels.size() != static_cast<size_t>(raw.h) * raw.w * 3)
    throw DataError("normalize_image: expected a 3-channel 8-bit image");
  Image<Scalar> img;
  img.data = Tensor<Scalar>(3, raw.h, raw.w);
  for (int y = 0; y < raw.h; ++y)
    for (int x = 0; x < raw.w; ++x)
      for (int c = 0; c < 3; ++c)
        img.data.at(c, y, x) = static_cast<Scalar>(raw.at(y, x, c)) / Scalar(255);
  return img;
}

/// Image -> latent map with fixed downsample factor 8. Deterministic: the
/// latent is the posterior mean, never a sample.
template <typename Scalar>
class Encoder : public nn::Module<Scalar> {
 public:
  virtual Latent<Scalar> encode(const Image<Scalar>& img, bool cache = true) = 0;
  virtual Tensor<Scalar> backward(const Tensor<Scalar>& grad_latent) = 0;
  virtual int latent_channels() const = 0;
};

/// Three stride-2 convolution stages; output channels default to 4.
template <typename Scalar>
class ToyEncoder final : public Encoder<Scalar> {
 public:
  ToyEncoder(int latent_channels, int width, Rng& rng, const std::string& name = "encoder")
      : latent_channels_(latent_channels),
        conv1_(name + ".conv1", 3, width, 3, 2, 1, rng),
        conv2_(name + ".conv2", width, 2 * width, 3, 2, 1, rng),
        conv3_(name + ".conv3", 2 * width, latent_channels, 3, 2, 1, rng) {}

  Latent<Scalar> encode(const Image<Scalar>& img, bool cache = true) override {
    validate_image_dims(img.data, "encode");
    Latent<Scalar> z;
    z.source_h = img.data.h;
    z.source_w = img.data.w;
    z.data = conv3_.forward(
        act2_.forward(conv2_.forward(act1_.forward(conv1_.forward(img.data, cache), cache), cache),
                      cache),
        cache);
    return z;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_latent) override {
    return conv1_.backward(act1_.backward(conv2_.backward(act2_.backward(conv3_.backward(grad_latent)))));
  }

  int latent_channels() const override { return latent_channels_; }

  void collect_params(std::vector<nn::Parameter<Scalar>*>& out) override {
    conv1_.collect_params(out);
    conv2_.collect_params(out);
    conv3_.collect_params(out);
  }

 private:
  int latent_channels_;
  nn::Conv2d<Scalar> conv1_;
  nn::ActCache<Scalar> act1_{nn::Activation::kSiLU};
  nn::Conv2d<Scalar> conv2_;
  nn::ActCache<Scalar> act2_{nn::Activation::kSiLU};
  nn::Conv2d<Scalar> conv3_;
};

}  // namespace depthkit
