// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/commands.hpp"

#include <cstdio>
#include <fstream>

#include "depthkit/evaluation.hpp"
#include "depthkit/pipeline.hpp"
#include "depthkit/trainer.hpp"

namespace depthkit {

namespace {

RunConfig load_config(const CommandOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig::from_string("", /*apply_env=*/true)
                                           : RunConfig::from_file(opts.config_path, true);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.profile.empty()) cfg.profile = opts.profile;
  cfg.validate();
  return cfg;
}

RunConfig config_from_checkpoint(const Checkpoint& ckpt, const CommandOptions& opts) {
  RunConfig cfg = RunConfig::from_string(ckpt.config_text);
  if (!opts.profile.empty()) cfg.profile = opts.profile;
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  return cfg;
}

SampleLoader make_loader(const RunConfig& cfg, const std::filesystem::path& data_root,
                         const std::string& split_name, bool eval_crop) {
  const auto listing = data_root / split_name;
  auto entries = read_split_listing(listing);
  if (entries.empty()) throw DataError("split listing " + listing.string() + " is empty");
  return SampleLoader(data_root, std::move(entries), resolve_profile(cfg), eval_crop);
}

int guarded(const char* what, const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: error: %s\n", what, e.what());
    return exit_code_for(e);
  }
}

void print_summary(const EvalOutcome& outcome) {
  const MetricReport& r = outcome.aggregate;
  std::printf("samples=%zu skipped=%zu\n", outcome.n_evaluated, outcome.n_skipped);
  std::printf("abs_rel=%.6f sq_rel=%.6f rmse=%.6f rmse_log=%.6f log10=%.6f\n", r.abs_rel, r.sq_rel,
              r.rmse, r.rmse_log, r.log10);
  std::printf("delta1=%.6f delta2=%.6f delta3=%.6f n_pixels=%ld\n", r.delta1, r.delta2, r.delta3,
              r.n_pixels);
  if (outcome.mri) std::printf("mRI=%.4f (%.1f%%)\n", *outcome.mri, *outcome.mri * 100.0);
}

}  // namespace

int cmd_train(const CommandOptions& opts) {
  return guarded("train", [&] {
    const RunConfig cfg = load_config(opts);
    DepthModel model(cfg);
    SampleLoader loader = make_loader(cfg, opts.data_root, cfg.train_split, /*eval_crop=*/false);
    const TrainRunResult result = run_training(model, loader, opts.out_dir);
    std::printf("train: %ld steps, loss %.6f -> %.6f, checkpoint %s\n", result.steps,
                result.first_loss, result.last_loss, result.checkpoint_path.string().c_str());
    return 0;
  });
}

int cmd_evaluate(const CommandOptions& opts) {
  return guarded("evaluate", [&] {
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    const RunConfig cfg = config_from_checkpoint(ckpt, opts);
    DepthModel model(cfg);
    Trainer trainer(model, 1);  // parameter restore path
    trainer.restore(ckpt, opts.allow_config_mismatch || !opts.profile.empty());
    const std::string split = opts.split.empty() ? cfg.eval_split : opts.split;
    SampleLoader loader = make_loader(cfg, opts.data_root, split, /*eval_crop=*/true);
    const EvalOutcome outcome = evaluate_split(model, loader, opts.out_dir, opts.baseline_report);
    print_summary(outcome);
    return 0;
  });
}

int cmd_predict(const CommandOptions& opts, const std::vector<std::filesystem::path>& images) {
  return guarded("predict", [&] {
    if (images.empty()) throw DataError("predict: no input images");
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    const RunConfig cfg = config_from_checkpoint(ckpt, opts);
    DepthModel model(cfg);
    Trainer trainer(model, 1);
    trainer.restore(ckpt, opts.allow_config_mismatch || !opts.profile.empty());
    const DatasetProfile prof = model.profile();
    const SizingPolicy sizing{prof.input_height, prof.input_width};
    Pipeline pipeline(model);
    std::filesystem::create_directories(opts.out_dir);

    size_t failures = 0;
    for (const auto& path : images) {
      try {
        DepthSample sample;
        sample.id = sample_id_from_path(path.string());
        sample.image = normalize_image<double>(sizing.apply(read_image_png(path)));
        PredictionResult result = pipeline.predict(sample);
        if (opts.trace) {
          verify_trace(result.trace, model, sample.image.data.h, sample.image.data.w);
          std::printf("%s: latent [%d,%d,%d] ctx_tokens %d agg [%d,%d,%d] depth [%d,%d,%d]\n",
                      sample.id.c_str(), result.trace.latent.c, result.trace.latent.h,
                      result.trace.latent.w, result.trace.context_tokens,
                      result.trace.aggregated.c, result.trace.aggregated.h,
                      result.trace.aggregated.w, result.trace.depth.c, result.trace.depth.h,
                      result.trace.depth.w);
        }
        write_depth_png16(opts.out_dir / (sample.id + "_depth16.png"),
                          quantize_depth(result.depth, prof.depth_png_scale));
        write_image_png(opts.out_dir / (sample.id + "_color.png"),
                        colormap_depth(result.depth, prof.d_max));
      } catch (const Error& e) {
        std::fprintf(stderr, "predict: %s: %s (continuing)\n", path.string().c_str(), e.what());
        ++failures;
      }
    }
    if (failures > 0) {
      std::fprintf(stderr, "predict: %zu of %zu inputs failed\n", failures, images.size());
      return 3;
    }
    return 0;
  });
}

int cmd_ablate_conditioning(const CommandOptions& opts) {
  return guarded("ablate-conditioning", [&] {
    std::vector<std::string> variants;
    if (opts.variant.empty() || opts.variant == "all")
      variants = {"cide", "one_hot", "precomputed"};
    else
      variants = {opts.variant};

    std::filesystem::create_directories(opts.out_dir);
    std::ofstream table(opts.out_dir / "ablation.csv");
    table << "variant,rmse,abs_rel,delta1\n";
    std::printf("variant        RMSE      Abs Rel   delta1\n");

    for (const std::string& variant : variants) {
      RunConfig cfg = load_config(opts);
      cfg.conditioning = variant;
      if (variant == "precomputed" && cfg.conditioning_vectors.empty())
        cfg.conditioning_vectors = (opts.data_root / "vectors.txt").string();
      cfg.validate();
      DepthModel model(cfg);
      const auto run_dir = opts.out_dir / variant;
      SampleLoader train_loader =
          make_loader(cfg, opts.data_root, cfg.train_split, /*eval_crop=*/false);
      run_training(model, train_loader, run_dir);
      SampleLoader eval_loader =
          make_loader(cfg, opts.data_root, cfg.eval_split, /*eval_crop=*/true);
      const EvalOutcome outcome = evaluate_split(model, eval_loader, run_dir, {});
      table << variant << ',' << outcome.aggregate.rmse << ',' << outcome.aggregate.abs_rel << ','
            << outcome.aggregate.delta1 << '\n';
      std::printf("%-14s %-9.4f %-9.4f %-9.4f\n", variant.c_str(), outcome.aggregate.rmse,
                  outcome.aggregate.abs_rel, outcome.aggregate.delta1);
    }
    return 0;
  });
}

}  // namespace depthkit
