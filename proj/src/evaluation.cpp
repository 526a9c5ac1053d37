// Copyright (c) 2026 The depthkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "depthkit/evaluation.hpp"

#include <json.hpp>

#include <fstream>

#include "depthkit/pipeline.hpp"

namespace depthkit {

namespace {

struct PooledAccumulator {
  double abs_rel = 0, sq_rel = 0, se = 0, se_log = 0, l10 = 0;
  long d1 = 0, d2 = 0, d3 = 0, n = 0;

  void add(const Arr<double>& pred, const Arr<double>& gt, const MaskArray& mask) {
    for (Eigen::Index y = 0; y < pred.rows(); ++y)
      for (Eigen::Index x = 0; x < pred.cols(); ++x) {
        if (!mask(y, x)) continue;
        const double p = pred(y, x), g = gt(y, x);
        const double diff = p - g;
        abs_rel += std::abs(diff) / g;
        sq_rel += diff * diff / g;
        se += diff * diff;
        const double dl = std::log(p) - std::log(g);
        se_log += dl * dl;
        l10 += std::abs(std::log10(p) - std::log10(g));
        const double ratio = std::max(p / g, g / p);
        if (ratio < 1.25) ++d1;
        if (ratio < 1.25 * 1.25) ++d2;
        if (ratio < 1.25 * 1.25 * 1.25) ++d3;
        ++n;
      }
  }

  MetricReport report() const {
    if (n == 0) throw DataError("no valid pixels across the whole split");
    MetricReport r;
    r.n_pixels = n;
    r.abs_rel = abs_rel / n;
    r.sq_rel = sq_rel / n;
    r.rmse = std::sqrt(se / n);
    r.rmse_log = std::sqrt(se_log / n);
    r.log10 = l10 / n;
    r.delta1 = static_cast<double>(d1) / n;
    r.delta2 = static_cast<double>(d2) / n;
    r.delta3 = static_cast<double>(d3) / n;
    return r;
  }
};

void write_csv_header(std::ofstream& csv) {
  csv << "id,n_pixels,abs_rel,sq_rel,rmse,rmse_log,log10,delta1,delta2,delta3\n";
}

void write_csv_row(std::ofstream& csv, const std::string& id, const MetricReport& r) {
  csv << id << ',' << r.n_pixels << ',' << r.abs_rel << ',' << r.sq_rel << ',' << r.rmse << ','
      << r.rmse_log << ',' << r.log10 << ',' << r.delta1 << ',' << r.delta2 << ',' << r.delta3
      << '\n';
}

}  // namespace

EvalOutcome evaluate_split(DepthModel& model, const SampleLoader& loader,
                           const std::filesystem::path& out_dir,
                           const std::optional<std::filesystem::path>& baseline_report) {
  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir / "per_sample.csv");
  if (!csv) throw DataError("cannot write to " + out_dir.string());
  write_csv_header(csv);

  const RunConfig& cfg = model.config();
  const DatasetProfile& prof = loader.profile();
  Pipeline pipeline(model);

  EvalOutcome outcome;
  std::vector<MetricReport> per_image;
  PooledAccumulator pooled;
  for (size_t i = 0; i < loader.size(); ++i) {
    const DepthSample sample = loader.load(i);
    if (!sample.gt_depth) throw DataError("sample '" + sample.id + "' has no ground truth");
    const MaskArray mask = build_mask(*sample.gt_depth, prof.d_min, prof.cap, prof.crop);
    if (!mask.any()) {
      std::fprintf(stderr, "warning: sample '%s' has no valid pixels under cap %.3g; excluded\n",
                   sample.id.c_str(), prof.cap);
      outcome.skipped_ids.push_back(sample.id);
      ++outcome.n_skipped;
      continue;
    }
    const Arr<double> pred =
        cfg.eval_oracle_inject ? *sample.gt_depth : pipeline.predict(sample).depth;
    const MetricReport r = compute_metrics<double>(pred, *sample.gt_depth, mask);
    write_csv_row(csv, sample.id, r);
    per_image.push_back(r);
    pooled.add(pred, *sample.gt_depth, mask);
    ++outcome.n_evaluated;
  }
  if (per_image.empty()) throw DataError("no evaluable samples in the split");

  if (cfg.per_image_metrics) {
    MetricReport agg;
    for (const auto& r : per_image) {
      agg.abs_rel += r.abs_rel;
      agg.sq_rel += r.sq_rel;
      agg.rmse += r.rmse;
      agg.rmse_log += r.rmse_log;
      agg.log10 += r.log10;
      agg.delta1 += r.delta1;
      agg.delta2 += r.delta2;
      agg.delta3 += r.delta3;
      agg.n_pixels += r.n_pixels;
    }
    const double n = static_cast<double>(per_image.size());
    agg.abs_rel /= n;
    agg.sq_rel /= n;
    agg.rmse /= n;
    agg.rmse_log /= n;
    agg.log10 /= n;
    agg.delta1 /= n;
    agg.delta2 /= n;
    agg.delta3 /= n;
    outcome.aggregate = agg;
  } else {
    outcome.aggregate = pooled.report();
  }
  validate_report(outcome.aggregate);

  if (baseline_report) {
    const MetricReport base = read_report_json(*baseline_report);
    outcome.mri = mean_relative_improvement(outcome.aggregate, base);
  }
  write_report_json(out_dir / "summary.json", outcome.aggregate, cfg.hash_hex(),
                    outcome.n_evaluated, outcome.n_skipped, outcome.mri);
  return outcome;
}

MetricReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed report " + path.string() + ": " + e.what());
  }
  MetricReport r;
  auto get = [&](const char* key, double& field, bool required) {
    if (j.contains(key))
      field = j[key].get<double>();
    else if (required)
      throw DataError("report " + path.string() + " lacks required field '" + key + "'");
  };
  get("delta1", r.delta1, true);
  get("abs_rel", r.abs_rel, true);
  get("rmse", r.rmse, true);
  get("delta2", r.delta2, false);
  get("delta3", r.delta3, false);
  get("sq_rel", r.sq_rel, false);
  get("rmse_log", r.rmse_log, false);
  get("log10", r.log10, false);
  if (j.contains("n_pixels")) r.n_pixels = j["n_pixels"].get<long>();
  return r;
}

void write_report_json(const std::filesystem::path& path, const MetricReport& report,
                       const std::string& config_hash, size_t n_samples, size_t n_skipped,
                       const std::optional<double>& mri) {
  nlohmann::json j{
      {"abs_rel", report.abs_rel},   {"sq_rel", report.sq_rel},
      {"rmse", report.rmse},         {"rmse_log", report.rmse_log},
      {"log10", report.log10},       {"delta1", report.delta1},
      {"delta2", report.delta2},     {"delta3", report.delta3},
      {"n_pixels", report.n_pixels}, {"config_hash", config_hash},
      {"n_samples", n_samples},      {"n_skipped", n_skipped},
  };
  if (mri) j["mri"] = *mri;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace depthkit
