#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "irsr/ensemble.hpp"
#include "irsr/manifest.hpp"
#include "irsr/model_runner.hpp"
#include "irsr/parallel.hpp"
#include "irsr/png_io.hpp"
#include "irsr/report.hpp"
#include "irsr/resample.hpp"

namespace irsr {

struct PipelineOptions {
  std::filesystem::path data_root;
  std::filesystem::path out_dir;
  Phase phase = Phase::validation;
  std::vector<ModelSpec> models;
  std::optional<EnsembleWeights> weights;  // uniform when unset
  bool tta = false;
  bool degrade = false;  // rebuild LR from HR even if data_root/LR exists
  MetricOptions metrics;
  int workers = 1;
};

struct PipelineResult {
  Manifest manifest;
  std::optional<SubmissionScore> score;  // absent without ground truth
};

/// Per-model float SR outputs for a list of LR images.
inline std::vector<FloatImage> run_model(const ModelSpec& model, const std::vector<Image>& lrs,
                                         bool tta, int workers) {
  if (model.is_external()) {
    if (tta) return tta_infer_batch(model, lrs);
    std::vector<FloatImage> out;
    for (const auto& sr : infer_batch(model, lrs)) out.push_back(to_float(sr));
    return out;
  }
  std::vector<FloatImage> out(lrs.size());
  parallel_for(lrs.size(), workers, [&](std::size_t i) {
    out[i] = tta ? tta_infer(model, lrs[i]) : to_float(infer(model, lrs[i]));
  });
  return out;
}

/// degrade (optional) -> infer/TTA per model -> fuse -> write SR -> score.
inline PipelineResult run_pipeline(const PipelineOptions& opts) {
  if (opts.models.empty()) throw ValidationError("run-pipeline needs at least one model");
  for (const auto& m : opts.models) m.validate();
  const EnsembleWeights weights = opts.weights ? *opts.weights : EnsembleWeights::uniform(opts.models.size());
  if (weights.size() != opts.models.size()) {
    throw ValidationError("got " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(opts.models.size()) + " models");
  }

  std::filesystem::create_directories(opts.out_dir);
  Manifest manifest;
  const bool have_lr = std::filesystem::is_directory(opts.data_root / "LR");
  if (opts.degrade || !have_lr) {
    const auto hr_dir = opts.data_root / "HR";
    if (!std::filesystem::is_directory(hr_dir)) {
      throw IoError("no LR directory and no HR directory to degrade in " + opts.data_root.string());
    }
    const auto lr_dir = opts.out_dir / "LR";
    std::filesystem::create_directories(lr_dir);
    const auto hrs = detail::list_pngs(hr_dir);
    if (hrs.empty()) throw ValidationError("no HR images in " + hr_dir.string());
    manifest.phase = opts.phase;
    manifest.entries.resize(hrs.size());
    parallel_for(hrs.size(), opts.workers, [&](std::size_t i) {
      const auto lr_path = lr_dir / hrs[i].filename();
      save_image(degrade_x4(load_image(hrs[i])), lr_path);
      manifest.entries[i] = {hrs[i].stem().string(), lr_path, hrs[i]};
    });
  } else {
    manifest = build_manifest(opts.data_root, opts.phase);
  }

  const std::size_t n = manifest.entries.size();
  std::vector<Image> lrs(n);
  parallel_for(n, opts.workers, [&](std::size_t i) { lrs[i] = load_image(manifest.entries[i].lr_path); });

  std::vector<std::vector<FloatImage>> outputs;
  for (const auto& model : opts.models) outputs.push_back(run_model(model, lrs, opts.tta, opts.workers));

  const auto sr_dir = opts.out_dir / "SR";
  std::filesystem::create_directories(sr_dir);
  parallel_for(n, opts.workers, [&](std::size_t i) {
    std::vector<FloatImage> per_image;
    per_image.reserve(outputs.size());
    for (const auto& o : outputs) per_image.push_back(o[i]);
    save_image(fuse(per_image, weights), sr_dir / (manifest.entries[i].image_id + ".png"));
  });

  PipelineResult result;
  result.manifest = manifest;
  if (manifest.has_ground_truth()) {
    result.score = score_submission(sr_dir, manifest, opts.metrics, opts.workers);
    std::ofstream json(opts.out_dir / "report.json");
    write_report_json(json, *result.score);
    std::ofstream csv(opts.out_dir / "report.csv");
    write_report_csv(csv, *result.score);
    if (!json || !csv) throw IoError("failed to write reports under " + opts.out_dir.string());
  }
  return result;
}

}  // namespace irsr
