// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "depthkit/diffusion.hpp"
#include "gradcheck.hpp"

using namespace depthkit;

TEST_CASE("single-step schedule") {
  auto s = make_noise_schedule(1, 0.1, 0.1, ScheduleKind::kLinear);
  REQUIRE(s.steps() == 1);
  CHECK(s.betas[0] == doctest::Approx(0.1));
  CHECK(s.alpha_bars[0] == doctest::Approx(0.9));
}

TEST_CASE("two-step linear schedule: hand product") {
  auto s = make_noise_schedule(2, 0.1, 0.2, ScheduleKind::kLinear);
  CHECK(s.betas[0] == doctest::Approx(0.1));
  CHECK(s.betas[1] == doctest::Approx(0.2));
  CHECK(s.alpha_bars[0] == doctest::Approx(0.9));
  CHECK(s.alpha_bars[1] == doctest::Approx(0.72));  // 0.9 * 0.8
}

TEST_CASE("default scaled_linear schedule matches an independent product") {
  auto s = make_noise_schedule(1000, 0.00085, 0.012, ScheduleKind::kScaledLinear);
  // Independent recomputation: interpolate sqrt(beta), multiply up the alphas.
  double prod = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const double r = std::sqrt(0.00085) + (std::sqrt(0.012) - std::sqrt(0.00085)) * i / 999.0;
    prod *= 1.0 - r * r;
    CHECK(s.alpha_bars[static_cast<size_t>(i)] == doctest::Approx(prod).epsilon(1e-12));
  }
  for (int i = 1; i < 1000; ++i) CHECK(s.alpha_bars[i] < s.alpha_bars[i - 1]);
  CHECK(s.alpha_bars.back() > 0.0);
  CHECK(s.alpha_bars.back() < 0.01);
}

TEST_CASE("schedule rejects bad configuration") {
  CHECK_THROWS_AS(make_noise_schedule(0, 0.1, 0.2, ScheduleKind::kLinear), ConfigError);
  CHECK_THROWS_AS(make_noise_schedule(-3, 0.1, 0.2, ScheduleKind::kLinear), ConfigError);
  CHECK_THROWS_AS(make_noise_schedule(10, 0.0, 0.2, ScheduleKind::kLinear), ConfigError);
  CHECK_THROWS_AS(make_noise_schedule(10, 0.3, 0.2, ScheduleKind::kLinear), ConfigError);
  CHECK_THROWS_AS(make_noise_schedule(10, 0.1, 1.0, ScheduleKind::kLinear), ConfigError);
}

TEST_CASE("alpha_bar monotonicity across random configurations") {
  // Ranges are bounded so alpha_bar stays above the double-precision floor
  // where 1 - alpha_bar saturates and strictness is unobservable.
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const int T = rng.uniform_int(1, 100);
    double b0 = rng.uniform(1e-5, 0.15);
    double b1 = rng.uniform(b0, 0.2);
    const auto kind = trial % 2 == 0 ? ScheduleKind::kLinear : ScheduleKind::kScaledLinear;
    auto s = make_noise_schedule(T, b0, b1, kind);
    for (int t = 0; t < T; ++t) {
      CHECK(s.alpha_bars[t] > 0.0);
      CHECK(s.alpha_bars[t] <= 1.0);
      if (t > 0) {
        CHECK(s.alpha_bars[t] < s.alpha_bars[t - 1]);
        CHECK(std::sqrt(1.0 - s.alpha_bars[t]) > std::sqrt(1.0 - s.alpha_bars[t - 1]));
      }
    }
  }
}

namespace {

Latent<double> make_latent(int c, int h, int w, uint64_t seed) {
  Rng rng(seed);
  Latent<double> z;
  z.data = Tensor<double>::random_normal(c, h, w, rng);
  z.source_h = h * 8;
  z.source_w = w * 8;
  return z;
}

}  // namespace

TEST_CASE("q_sample: zero input passes noise through exactly") {
  auto sched = make_noise_schedule(10, 0.1, 0.2, ScheduleKind::kLinear);
  Latent<double> z0 = make_latent(4, 4, 4, 1);
  z0.data.data.setZero();
  Rng rng(2);
  Tensor<double> eps = Tensor<double>::random_normal(4, 4, 4, rng);
  auto zt = q_sample(z0, 5, eps, sched);
  const double f = std::sqrt(1.0 - sched.alpha_bar(5));
  CHECK((zt.data.data - f * eps.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("q_sample: negligible noise keeps the signal") {
  auto sched = make_noise_schedule(4, 1e-9, 1e-9, ScheduleKind::kLinear);
  Latent<double> z0 = make_latent(2, 4, 4, 3);
  Rng rng(4);
  Tensor<double> eps = Tensor<double>::random_normal(2, 4, 4, rng);
  auto zt = q_sample(z0, 3, eps, sched);
  // exact triangle bound: |z_t - z0| <= (1 - sqrt(ab))|z0| + sqrt(1-ab)|eps|
  const double ab = sched.alpha_bar(3);
  const double bound =
      (1.0 - std::sqrt(ab)) * z0.data.data.norm() + std::sqrt(1.0 - ab) * eps.data.norm();
  CHECK((zt.data.data - z0.data.data).norm() <= bound + 1e-12);
}

TEST_CASE("q_sample scalar arithmetic at alpha_bar = 0.72") {
  auto sched = make_noise_schedule(2, 0.1, 0.2, ScheduleKind::kLinear);
  Latent<double> z0;
  z0.data = Tensor<double>(1, 1, 1);
  z0.data.data(0, 0) = 1.0;
  Tensor<double> eps(1, 1, 1);
  eps.data(0, 0) = 1.0;
  auto zt = q_sample(z0, 1, eps, sched);
  CHECK(zt.data.data(0, 0) == doctest::Approx(1.3776783996367751).epsilon(1e-12));
}

TEST_CASE("q_sample is jointly linear in (z0, eps)") {
  auto sched = make_noise_schedule(7, 0.05, 0.3, ScheduleKind::kScaledLinear);
  Latent<double> a = make_latent(3, 4, 4, 10), b = make_latent(3, 4, 4, 11);
  Rng rng(12);
  Tensor<double> ea = Tensor<double>::random_normal(3, 4, 4, rng);
  Tensor<double> eb = Tensor<double>::random_normal(3, 4, 4, rng);
  Latent<double> sum = a;
  sum.data.data = a.data.data + 2.5 * b.data.data;
  Tensor<double> esum = ea;
  esum.data = ea.data + 2.5 * eb.data;
  auto lhs = q_sample(sum, 4, esum, sched);
  auto ra = q_sample(a, 4, ea, sched);
  auto rb = q_sample(b, 4, eb, sched);
  Mat<double> rhs = ra.data.data + 2.5 * rb.data.data;
  CHECK((lhs.data.data - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("q_sample contract errors") {
  auto sched = make_noise_schedule(5, 0.1, 0.2, ScheduleKind::kLinear);
  Latent<double> z0 = make_latent(2, 4, 4, 20);
  Rng rng(21);
  Tensor<double> eps_bad = Tensor<double>::random_normal(2, 4, 2, rng);
  CHECK_THROWS_AS(q_sample(z0, 1, eps_bad, sched), ContractError);
  Tensor<double> eps = Tensor<double>::random_normal(2, 4, 4, rng);
  CHECK_THROWS_AS(q_sample(z0, 5, eps, sched), ContractError);
  CHECK_THROWS_AS(q_sample(z0, -1, eps, sched), ContractError);
}

TEST_CASE("q_sample variance law over 1e5 unit-variance draws") {
  auto sched = make_noise_schedule(100, 0.001, 0.05, ScheduleKind::kLinear);
  const int t = 60;
  const int n = 100000;
  Rng rng(777);
  double sum = 0, sum_sq = 0;
  const double sa = std::sqrt(sched.alpha_bar(t));
  const double sb = std::sqrt(1.0 - sched.alpha_bar(t));
  for (int i = 0; i < n; ++i) {
    const double z = sa * rng.normal() + sb * rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double se = std::sqrt(2.0 / (n - 1));  // stderr of unit-normal sample variance
  CHECK(std::abs(var - 1.0) < 3.0 * se);
}

// ---------------------------------------------------------------------------

TEST_CASE("toy denoiser: pyramid shapes from a 64x64 latent") {
  Rng rng(30);
  ToyUNetConfig cfg;
  cfg.e = 8;
  cfg.levels = 3;
  ToyUNet<double> unet(cfg, rng);
  Latent<double> z = make_latent(4, 64, 64, 31);
  ContextEmbedding<double> ctx(Mat<double>::Random(kContextWidth, 1));
  auto pyr = extract_features(z, 1, ctx, unet, false);
  REQUIRE(pyr.size() == 3);
  CHECK(pyr[0].h == 32);
  CHECK(pyr[0].w == 32);
  CHECK(pyr[0].channels() == 8);
  CHECK(pyr[1].h == 16);
  CHECK(pyr[1].channels() == 16);
  CHECK(pyr[2].h == 8);
  CHECK(pyr[2].channels() == 32);

  auto specs = unet.level_shapes(64, 64);
  for (size_t i = 0; i < pyr.size(); ++i) {
    CHECK(specs[i].c == pyr[i].channels());
    CHECK(specs[i].h == pyr[i].h);
    CHECK(specs[i].w == pyr[i].w);
  }
}

TEST_CASE("toy denoiser is deterministic and context-sensitive") {
  Rng rng(40);
  ToyUNetConfig cfg;
  cfg.e = 8;
  ToyUNet<double> unet(cfg, rng);
  Latent<double> z = make_latent(4, 16, 16, 41);
  ContextEmbedding<double> c1(Mat<double>::Random(kContextWidth, 1));
  ContextEmbedding<double> c2(Mat<double>::Random(kContextWidth, 1));

  auto p1 = extract_features(z, 1, c1, unet, false);
  auto p1_again = extract_features(z, 1, c1, unet, false);
  for (size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].data == p1_again[i].data);

  auto p2 = extract_features(z, 1, c2, unet, false);
  bool any_diff = false;
  for (size_t i = 0; i < p1.size(); ++i) any_diff |= (p1[i].data != p2[i].data);
  CHECK(any_diff);
}

TEST_CASE("denoiser rejects mismatched conditioning width") {
  Rng rng(50);
  ToyUNetConfig cfg;
  cfg.e = 8;
  cfg.ctx_dim = 16;  // deliberately narrower than the standard context
  ToyUNet<double> unet(cfg, rng);
  Latent<double> z = make_latent(4, 16, 16, 51);
  ContextEmbedding<double> ctx(Mat<double>::Random(kContextWidth, 1));
  CHECK_THROWS_AS(extract_features(z, 1, ctx, unet, false), ContractError);
}

TEST_CASE("toy denoiser end-to-end gradients") {
  Rng rng(60);
  ToyUNetConfig cfg;
  cfg.e = 8;
  cfg.levels = 3;
  ToyUNet<double> unet(cfg, rng);
  Rng data_rng(61);
  Tensor<double> z = Tensor<double>::random_normal(4, 8, 8, data_rng);
  Mat<double> ctx = Mat<double>::Random(kContextWidth, 1);

  // Fixed random functional over all pyramid levels.
  std::vector<Tensor<double>> ws;
  for (auto& s : unet.level_shapes(8, 8))
    ws.push_back(Tensor<double>::random_normal(s.c, s.h, s.w, data_rng));

  auto loss = [&] {
    auto pyr = unet.forward(z, 1, ctx, false);
    double acc = 0;
    for (size_t i = 0; i < pyr.size(); ++i)
      acc += (pyr[i].data.array() * ws[i].data.array()).sum();
    return acc;
  };

  unet.zero_grad();
  unet.forward(z, 1, ctx);
  auto [gz, gctx] = unet.backward(ws);

  CHECK(test::max_param_grad_violation(unet.parameters(), loss, 1e-6, 6, 1e-4, 1e-6) <= 1.0);
  CHECK(test::max_tensor_grad_violation(z, gz, loss, 1e-6, 48, 1e-4, 1e-6) <= 1.0);
  CHECK(test::max_grad_violation(ctx.data(), gctx.data(), ctx.size(), loss, 1e-6, 48, 1e-4, 1e-6) <= 1.0);
}

// ---------------------------------------------------------------------------

TEST_CASE("aggregation shape contract at paper scale") {
  // Pyramid levels for a 512x512 source: {H/16, H/32, H/64} = {32, 16, 8}.
  Rng rng(70);
  const int e = 192;
  FeatureAggregator<double> agg("agg", {e, 2 * e, 4 * e}, e, rng);
  std::vector<Tensor<double>> pyr;
  pyr.push_back(Tensor<double>::random_normal(e, 32, 32, rng, 0.1));
  pyr.push_back(Tensor<double>::random_normal(2 * e, 16, 16, rng, 0.1));
  pyr.push_back(Tensor<double>::random_normal(4 * e, 8, 8, rng, 0.1));
  auto out = agg.forward(pyr, 512, 512, false);
  CHECK(out.data.channels() == 1536);
  CHECK(out.data.h == 16);
  CHECK(out.data.w == 16);
  CHECK(aggregate_output_shape(e, 512, 512) == ChwShape{1536, 16, 16});
}

TEST_CASE("aggregation at toy scale and the 8e shape law") {
  Rng rng(71);
  for (int e : {8, 3}) {
    FeatureAggregator<double> agg("agg", {e, 2 * e, 4 * e}, e, rng);
    std::vector<Tensor<double>> pyr;
    pyr.push_back(Tensor<double>::random_normal(e, 4, 4, rng));
    pyr.push_back(Tensor<double>::random_normal(2 * e, 2, 2, rng));
    pyr.push_back(Tensor<double>::random_normal(4 * e, 1, 1, rng));
    auto out = agg.forward(pyr, 64, 64, false);
    CHECK(out.data.channels() == 8 * e);
    CHECK(out.data.h == 2);
    CHECK(out.data.w == 2);
  }
}

TEST_CASE("single-level identity aggregation") {
  Rng rng(72);
  const int e = 2;
  FeatureAggregator<double> agg("agg", {8 * e}, e, rng);
  agg.projection().weight().value = Mat<double>::Identity(8 * e, 8 * e);
  agg.projection().bias().value.setZero();
  Tensor<double> lvl = Tensor<double>::random_normal(8 * e, 2, 2, rng);
  auto out = agg.forward({lvl}, 64, 64, false);
  CHECK(out.data.data == lvl.data);
}

TEST_CASE("aggregation contract errors") {
  Rng rng(73);
  FeatureAggregator<double> agg("agg", {4}, 1, rng);
  CHECK_THROWS_AS(agg.forward({}, 64, 64, false), ContractError);
  // 3x3 level cannot reach a 2x2 target by an integer factor.
  Tensor<double> bad = Tensor<double>::random_normal(4, 3, 3, rng);
  CHECK_THROWS_AS(agg.forward({bad}, 64, 64, false), ContractError);
}

TEST_CASE("aggregation gradients") {
  Rng rng(74);
  const int e = 4;
  FeatureAggregator<double> agg("agg", {e, 2 * e}, e, rng);
  std::vector<Tensor<double>> pyr;
  pyr.push_back(Tensor<double>::random_normal(e, 4, 4, rng));
  pyr.push_back(Tensor<double>::random_normal(2 * e, 2, 2, rng));
  Tensor<double> w = Tensor<double>::random_normal(8 * e, 2, 2, rng);

  auto loss = [&] {
    return (agg.forward(pyr, 64, 64, false).data.data.array() * w.data.array()).sum();
  };
  agg.zero_grad();
  agg.forward(pyr, 64, 64);
  auto grads = agg.backward(w);

  CHECK(test::max_param_grad_violation(agg.parameters(), loss) <= 1.0);
  CHECK(test::max_tensor_grad_violation(pyr[0], grads[0], loss) <= 1.0);
  CHECK(test::max_tensor_grad_violation(pyr[1], grads[1], loss) <= 1.0);
}
