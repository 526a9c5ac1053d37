// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end pipeline composition and the in-process command layer.

#include <doctest.h>

#include <fstream>

#include "depthkit/commands.hpp"
#include "depthkit/evaluation.hpp"
#include "depthkit/pipeline.hpp"
#include "depthkit/synthetic.hpp"
#include "depthkit/trainer.hpp"
#include "tempdir.hpp"

using namespace depthkit;

namespace {

void write_toy_config(const std::filesystem::path& path, const std::string& extra = {}) {
  std::ofstream out(path);
  out << "toy_profile = true\nepochs = 1\nmax_steps = 2\nbatch_size = 4\nseed = 11\n" << extra;
}

DepthSample synth_sample(int i = 0) {
  SyntheticScene sc = make_synthetic_scene(64, i, 4, 31);
  DepthSample s;
  s.id = "p" + std::to_string(i);
  s.image = sc.image;
  s.gt_depth = sc.depth;
  s.mask = build_mask(sc.depth, 1e-3, 10.0);
  s.scene_index = sc.scene_index;
  return s;
}

}  // namespace

TEST_CASE("prediction trace pins every stage shape of the factorization") {
  RunConfig cfg = RunConfig::from_string("toy_profile = true\nseed = 3\n");
  DepthModel model(cfg);
  Pipeline pipeline(model);
  DepthSample s = synth_sample();
  PredictionResult r = pipeline.predict(s);
  verify_trace(r.trace, model, 64, 64);
  CHECK(r.trace.latent == ChwShape{4, 8, 8});
  CHECK(r.trace.aggregated == ChwShape{64, 2, 2});
  CHECK(r.trace.decoded == ChwShape{8, 64, 64});
  CHECK(r.trace.depth == ChwShape{1, 64, 64});
  REQUIRE(r.trace.pyramid.size() == 3);
  CHECK(r.trace.pyramid[0] == ChwShape{8, 4, 4});
  CHECK(r.trace.pyramid[2] == ChwShape{32, 1, 1});
  CHECK(r.depth.minCoeff() > 0.0);
  CHECK(r.depth.maxCoeff() < model.decoder_config().d_max);

  // a tampered trace is rejected
  PipelineTrace bad = r.trace;
  bad.aggregated.c += 1;
  CHECK_THROWS_AS(verify_trace(bad, model, 64, 64), ContractError);
}

TEST_CASE("prediction is deterministic") {
  RunConfig cfg = RunConfig::from_string("toy_profile = true\nseed = 4\n");
  DepthModel model(cfg);
  Pipeline pipeline(model);
  DepthSample s = synth_sample(1);
  Arr<double> a = pipeline.predict(s).depth;
  Arr<double> b = pipeline.predict(s).depth;
  CHECK((a == b).all());
}

TEST_CASE("evaluation harness: oracle injection gives perfect metrics") {
  test::TempDir dir("eval_oracle");
  SyntheticDatasetSpec spec;
  spec.count = 4;
  write_synthetic_dataset(dir / "data", spec);
  RunConfig cfg = RunConfig::from_string("toy_profile = true\neval_oracle_inject = true\n");
  DepthModel model(cfg);
  SampleLoader loader(dir / "data", read_split_listing(dir / "data" / "test.txt"),
                      resolve_profile(cfg), true);
  EvalOutcome outcome = evaluate_split(model, loader, dir / "out");
  CHECK(outcome.aggregate.delta1 == doctest::Approx(1.0));
  CHECK(outcome.aggregate.abs_rel == doctest::Approx(0.0));
  CHECK(outcome.n_evaluated == 4);
  CHECK(std::filesystem::exists(dir / "out" / "per_sample.csv"));
  CHECK(std::filesystem::exists(dir / "out" / "summary.json"));

  // summary round-trips through the baseline reader
  MetricReport back = read_report_json(dir / "out" / "summary.json");
  CHECK(back.delta1 == doctest::Approx(1.0));
}

TEST_CASE("evaluation skips samples whose pixels all exceed the cap") {
  test::TempDir dir("eval_skip");
  SyntheticDatasetSpec spec;
  spec.count = 3;
  write_synthetic_dataset(dir / "data", spec);
  // rewrite one depth map beyond the 10m cap
  RawDepth16 far;
  far.h = 64;
  far.w = 64;
  far.values.assign(64 * 64, 12000);  // 12m at scale 1000
  write_depth_png16(dir / "data" / "depths" / "s001.png", far);

  RunConfig cfg = RunConfig::from_string("toy_profile = true\neval_oracle_inject = true\n");
  DepthModel model(cfg);
  SampleLoader loader(dir / "data", read_split_listing(dir / "data" / "test.txt"),
                      resolve_profile(cfg), true);
  EvalOutcome outcome = evaluate_split(model, loader, dir / "out");
  CHECK(outcome.n_evaluated == 2);
  CHECK(outcome.n_skipped == 1);
  REQUIRE(outcome.skipped_ids.size() == 1);
  CHECK(outcome.skipped_ids[0] == "s001");
}

TEST_CASE("default epoch budget is honored in the training log") {
  test::TempDir dir("cli_epochs");
  SyntheticDatasetSpec spec;
  spec.count = 8;
  write_synthetic_dataset(dir / "data", spec);
  {
    // default epochs (25) with the toy batch size of 4: 2 steps/epoch
    std::ofstream out(dir / "toy.conf");
    out << "toy_profile = true\nseed = 2\n"
        << "aug_flip_prob = 0\naug_hue_max = 0\naug_brightness_max = 0\naug_cutdepth_p = 0\n";
  }
  CommandOptions opts;
  opts.config_path = dir / "toy.conf";
  opts.data_root = dir / "data";
  opts.out_dir = dir / "run";
  REQUIRE(cmd_train(opts) == 0);
  std::ifstream log(dir / "run" / "train.log");
  int lines = 0;
  std::string line;
  while (std::getline(log, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 25 * 2);
}

TEST_CASE("evaluate_split computes mRI against a supplied baseline report") {
  test::TempDir dir("eval_mri_e2e");
  SyntheticDatasetSpec spec;
  spec.count = 3;
  write_synthetic_dataset(dir / "data", spec);
  {
    std::ofstream out(dir / "baseline.json");
    out << R"({"delta1": 0.5, "abs_rel": 0.4, "rmse": 2.0})";
  }
  RunConfig cfg = RunConfig::from_string("toy_profile = true\neval_oracle_inject = true\n");
  DepthModel model(cfg);
  SampleLoader loader(dir / "data", read_split_listing(dir / "data" / "test.txt"),
                      resolve_profile(cfg), true);
  EvalOutcome outcome = evaluate_split(model, loader, dir / "out", dir / "baseline.json");
  // oracle injection is perfect: improvements (1.0, 1.0, 1.0) -> mRI = 1
  REQUIRE(outcome.mri.has_value());
  CHECK(*outcome.mri == doctest::Approx(1.0));
  MetricReport summary = read_report_json(dir / "out" / "summary.json");
  CHECK(summary.delta1 == doctest::Approx(1.0));
}

TEST_CASE("mRI against a written baseline report") {
  test::TempDir dir("eval_mri");
  // hand-written baseline with the mRI fields
  {
    std::ofstream out(dir / "baseline.json");
    out << R"({"delta1": 0.5, "abs_rel": 0.4, "rmse": 2.0})";
  }
  MetricReport base = read_report_json(dir / "baseline.json");
  CHECK(base.delta1 == doctest::Approx(0.5));
  MetricReport ours;
  ours.delta1 = 0.6;
  ours.abs_rel = 0.3;
  ours.rmse = 1.5;
  // (0.2 + 0.25 + 0.25) / 3
  CHECK(mean_relative_improvement(ours, base) == doctest::Approx(0.7 / 3.0));
}

TEST_CASE("cmd_train then cmd_evaluate and cmd_predict round trip") {
  test::TempDir dir("cli_roundtrip");
  SyntheticDatasetSpec spec;
  spec.count = 8;
  write_synthetic_dataset(dir / "data", spec);
  write_toy_config(dir / "toy.conf");

  CommandOptions opts;
  opts.config_path = dir / "toy.conf";
  opts.data_root = dir / "data";
  opts.out_dir = dir / "run";
  CHECK(cmd_train(opts) == 0);
  CHECK(std::filesystem::exists(dir / "run" / "checkpoint.dkc"));
  CHECK(std::filesystem::exists(dir / "run" / "train.log"));

  CommandOptions eval_opts;
  eval_opts.checkpoint = dir / "run" / "checkpoint.dkc";
  eval_opts.data_root = dir / "data";
  eval_opts.out_dir = dir / "eval";
  CHECK(cmd_evaluate(eval_opts) == 0);
  CHECK(std::filesystem::exists(dir / "eval" / "summary.json"));

  CommandOptions pred_opts;
  pred_opts.checkpoint = dir / "run" / "checkpoint.dkc";
  pred_opts.out_dir = dir / "pred";
  pred_opts.trace = true;
  CHECK(cmd_predict(pred_opts, {dir / "data" / "images" / "s000.png"}) == 0);
  CHECK(std::filesystem::exists(dir / "pred" / "s000_depth16.png"));
  CHECK(std::filesystem::exists(dir / "pred" / "s000_color.png"));

  // predicted PNG round-trips through the loader quantization
  RawDepth16 png = read_depth_png16(dir / "pred" / "s000_depth16.png");
  CHECK(png.h == 64);
  CHECK(png.w == 64);

  // two runs produce byte-identical prediction files
  CommandOptions pred2 = pred_opts;
  pred2.out_dir = dir / "pred2";
  CHECK(cmd_predict(pred2, {dir / "data" / "images" / "s000.png"}) == 0);
  auto read_bytes = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(read_bytes(dir / "pred" / "s000_depth16.png") ==
        read_bytes(dir / "pred2" / "s000_depth16.png"));
}

TEST_CASE("exit codes: config 2, data 3") {
  test::TempDir dir("cli_codes");
  SyntheticDatasetSpec spec;
  spec.count = 4;
  write_synthetic_dataset(dir / "data", spec);

  {
    std::ofstream out(dir / "bad.conf");
    out << "no_such_key = 1\n";
  }
  CommandOptions opts;
  opts.config_path = dir / "bad.conf";
  opts.data_root = dir / "data";
  opts.out_dir = dir / "run";
  CHECK(cmd_train(opts) == 2);

  write_toy_config(dir / "toy.conf");
  CommandOptions missing;
  missing.config_path = dir / "toy.conf";
  missing.data_root = dir / "nowhere";
  missing.out_dir = dir / "run";
  CHECK(cmd_train(missing) == 3);

  CommandOptions bad_ckpt;
  bad_ckpt.checkpoint = dir / "missing.dkc";
  bad_ckpt.data_root = dir / "data";
  bad_ckpt.out_dir = dir / "eval";
  CHECK(cmd_evaluate(bad_ckpt) == 3);
}

TEST_CASE("predict continues past unreadable images and reports failure") {
  test::TempDir dir("cli_predict_err");
  SyntheticDatasetSpec spec;
  spec.count = 2;
  write_synthetic_dataset(dir / "data", spec);
  write_toy_config(dir / "toy.conf");
  CommandOptions opts;
  opts.config_path = dir / "toy.conf";
  opts.data_root = dir / "data";
  opts.out_dir = dir / "run";
  REQUIRE(cmd_train(opts) == 0);

  CommandOptions pred;
  pred.checkpoint = dir / "run" / "checkpoint.dkc";
  pred.out_dir = dir / "pred";
  const int rc = cmd_predict(pred, {dir / "data" / "images" / "s000.png", dir / "ghost.png"});
  CHECK(rc == 3);  // one input failed
  CHECK(std::filesystem::exists(dir / "pred" / "s000_depth16.png"));  // the other succeeded
}

TEST_CASE("ablation runner: cide/one_hot/precomputed all complete") {
  test::TempDir dir("cli_ablate");
  SyntheticDatasetSpec spec;
  spec.count = 4;
  write_synthetic_dataset(dir / "data", spec);
  write_toy_config(dir / "toy.conf", "max_steps = 1\n");

  CommandOptions opts;
  opts.config_path = dir / "toy.conf";
  opts.data_root = dir / "data";
  opts.out_dir = dir / "ablate";
  opts.variant = "all";
  CHECK(cmd_ablate_conditioning(opts) == 0);
  std::ifstream table(dir / "ablate" / "ablation.csv");
  std::string header, row;
  std::getline(table, header);
  CHECK(header == "variant,rmse,abs_rel,delta1");
  int rows = 0;
  while (std::getline(table, row))
    if (!row.empty()) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("one_hot ablation on a split without scene labels is refused") {
  test::TempDir dir("cli_ablate_noscene");
  SyntheticDatasetSpec spec;
  spec.count = 4;
  write_synthetic_dataset(dir / "data", spec);
  // strip the scene column
  {
    auto entries = read_split_listing(dir / "data" / "train.txt");
    std::ofstream out(dir / "data" / "train.txt");
    for (auto& e : entries) out << e.image_path << ' ' << e.depth_path << "\n";
    std::filesystem::copy_file(dir / "data" / "train.txt", dir / "data" / "test.txt",
                               std::filesystem::copy_options::overwrite_existing);
  }
  write_toy_config(dir / "toy.conf", "max_steps = 1\n");
  CommandOptions opts;
  opts.config_path = dir / "toy.conf";
  opts.data_root = dir / "data";
  opts.out_dir = dir / "ablate";
  opts.variant = "one_hot";
  CHECK(cmd_ablate_conditioning(opts) == 3);
}
