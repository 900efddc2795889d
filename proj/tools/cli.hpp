#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "irsr/irsr.hpp"

namespace irsr::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kValidation = 1, kFailure = 2 };

struct ModelFlags {
  std::vector<std::string> models{"bicubic"};
  int window = 16;
  int timeout_s = 600;
};

struct MetricFlags {
  int shave = 0;
  std::string ssim_pad = "valid";
  double psnr_cap = kPsnrCap;

  MetricOptions to_options() const {
    return {psnr_cap, parse_ssim_padding(ssim_pad), shave};
  }
};

/// "bicubic", "nearest", "bilinear", "lanczos3", or "ext:<command template>".
inline ModelSpec parse_model(const std::string& text, int window, int timeout_s, std::size_t index) {
  if (text.rfind("ext:", 0) == 0) {
    return ModelSpec::external(text.substr(4), window, std::chrono::seconds(timeout_s),
                               "external" + std::to_string(index));
  }
  return ModelSpec::builtin(parse_filter(text));
}

inline std::vector<ModelSpec> parse_models(const ModelFlags& f) {
  std::vector<ModelSpec> out;
  for (std::size_t i = 0; i < f.models.size(); ++i) {
    out.push_back(parse_model(f.models[i], f.window, f.timeout_s, i));
  }
  return out;
}

inline std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError("empty number list");
  return out;
}

// A single PNG or every PNG of a directory, mapped to an output path of the same kind.
inline std::vector<std::pair<fs::path, fs::path>> io_pairs(const fs::path& in, const fs::path& out) {
  std::vector<std::pair<fs::path, fs::path>> pairs;
  if (fs::is_directory(in)) {
    fs::create_directories(out);
    for (const auto& p : detail::list_pngs(in)) pairs.emplace_back(p, out / p.filename());
    if (pairs.empty()) throw ValidationError("no PNG files in " + in.string());
  } else {
    if (!fs::exists(in)) throw IoError("no such file: " + in.string());
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    pairs.emplace_back(in, out);
  }
  return pairs;
}

inline std::vector<Image> load_all(const std::vector<fs::path>& paths, int workers) {
  std::vector<Image> out(paths.size());
  parallel_for(paths.size(), workers, [&](std::size_t i) { out[i] = load_image(paths[i]); });
  return out;
}

class Emitter {
public:
  Emitter(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw IoError("cannot write " + path);
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

private:
  std::ofstream file_;
  std::ostream* out_;
};

/// Entry point shared by the irsr binary and the tests. Returns 0 on
/// success, 1 on validation errors, 2 on I/O or engine failures.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Infrared x4 super-resolution evaluation toolkit"};
  app.set_config("--config", "", "Config file (key=value, [subcommand] sections)");
  app.require_subcommand(1);
  int workers = default_workers();
  app.add_option("--workers", workers, "Worker threads (default: HARNESS_WORKERS or #cores)")
      ->check(CLI::PositiveNumber);

  auto add_model_flags = [](CLI::App* sub, ModelFlags& f, bool multi) {
    auto* opt = sub->add_option("--model", f.models,
                                "bicubic|nearest|bilinear|lanczos3|ext:<command template>");
    if (!multi) opt->expected(1);
    sub->add_option("--window", f.window, "Reflect-pad multiple for external engines")
        ->capture_default_str();
    sub->add_option("--timeout", f.timeout_s, "External engine timeout in seconds")
        ->capture_default_str();
  };
  auto add_metric_flags = [](CLI::App* sub, MetricFlags& f) {
    sub->add_option("--shave", f.shave, "Border pixels excluded from metrics")->capture_default_str();
    sub->add_option("--ssim-pad", f.ssim_pad, "SSIM window handling")
        ->check(CLI::IsMember({"valid", "symmetric"}))
        ->capture_default_str();
    sub->add_option("--psnr-cap", f.psnr_cap, "PSNR reported for identical images")
        ->capture_default_str();
  };

  // degrade
  std::string degrade_in, degrade_out;
  auto* degrade = app.add_subcommand("degrade", "Bicubic x4 downsampling of HR images");
  degrade->add_option("--in", degrade_in, "HR PNG or directory")->required();
  degrade->add_option("--out", degrade_out, "LR PNG or directory")->required();

  // infer / tta-infer
  std::string infer_in, infer_out;
  ModelFlags infer_model;
  auto* infer_cmd = app.add_subcommand("infer", "Super-resolve LR images with one engine");
  infer_cmd->add_option("--in", infer_in, "LR PNG or directory")->required();
  infer_cmd->add_option("--out", infer_out, "SR PNG or directory")->required();
  add_model_flags(infer_cmd, infer_model, false);

  std::string tta_in, tta_out;
  ModelFlags tta_model;
  auto* tta_cmd = app.add_subcommand("tta-infer", "Super-resolve with 8-fold dihedral self-ensemble");
  tta_cmd->add_option("--in", tta_in, "LR PNG or directory")->required();
  tta_cmd->add_option("--out", tta_out, "SR PNG or directory")->required();
  add_model_flags(tta_cmd, tta_model, false);

  // fuse
  std::vector<std::string> fuse_in;
  std::string fuse_out, fuse_weights;
  auto* fuse_cmd = app.add_subcommand("fuse", "Weighted per-pixel fusion of SR directories");
  fuse_cmd->add_option("--in", fuse_in, "SR directory (repeat per model)")->required();
  fuse_cmd->add_option("--weights", fuse_weights, "Comma-separated convex weights (default uniform)");
  fuse_cmd->add_option("--out", fuse_out, "Output directory")->required();

  // tune-weights
  std::string tune_a, tune_b, tune_gt, tune_csv, tune_alphas;
  std::vector<std::string> tune_extra;
  double tune_lo = 0.30, tune_hi = 0.60, tune_step = 0.01, tune_simplex_step = 0.05;
  MetricFlags tune_metrics;
  auto* tune = app.add_subcommand("tune-weights", "Grid-search fusion weights against ground truth");
  tune->add_option("--a", tune_a, "SR directory of the first model")->required();
  tune->add_option("--b", tune_b, "SR directory of the second model")->required();
  tune->add_option("--extra", tune_extra, "Further SR directories (simplex search)");
  tune->add_option("--gt", tune_gt, "Ground-truth HR directory")->required();
  tune->add_option("--lo", tune_lo)->capture_default_str();
  tune->add_option("--hi", tune_hi)->capture_default_str();
  tune->add_option("--step", tune_step)->capture_default_str();
  tune->add_option("--alphas", tune_alphas, "Explicit comma-separated alpha candidates");
  tune->add_option("--simplex-step", tune_simplex_step, "Grid resolution with --extra")
      ->capture_default_str();
  tune->add_option("--csv", tune_csv, "Write the sensitivity table here instead of stdout");
  add_metric_flags(tune, tune_metrics);

  // score
  std::string score_sr, score_data, score_manifest, score_format = "json", score_out,
                                                    score_phase = "validation";
  MetricFlags score_metrics;
  auto* score_cmd = app.add_subcommand("score", "Score an SR submission");
  score_cmd->add_option("--sr", score_sr, "Directory of <image_id>.png SR outputs")->required();
  auto* data_opt = score_cmd->add_option("--data", score_data, "Dataset root with LR/ and HR/");
  auto* manifest_opt = score_cmd->add_option("--manifest", score_manifest, "Explicit manifest file");
  data_opt->excludes(manifest_opt);
  score_cmd->add_option("--phase", score_phase)->check(CLI::IsMember({"validation", "val", "test"}));
  score_cmd->add_option("--format", score_format)->check(CLI::IsMember({"json", "csv"}));
  score_cmd->add_option("--out", score_out, "Report path (default stdout)");
  add_metric_flags(score_cmd, score_metrics);

  // rank
  std::string rank_in, rank_out;
  auto* rank = app.add_subcommand("rank", "Rank teams by PSNR + 20*SSIM");
  rank->add_option("--in", rank_in, "CSV of team,psnr,ssim")->required();
  rank->add_option("--out", rank_out, "Leaderboard CSV (default stdout)");

  // gen-synth
  std::string synth_out = "synth", synth_plan = "default";
  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("gen-synth", "Generate a seeded synthetic HR/LR dataset");
  synth->add_option("--out", synth_out)->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--plan", synth_plan, "'default' or WxH:count,...")->capture_default_str();

  // run-pipeline
  std::string pipe_data, pipe_out, pipe_weights, pipe_phase = "validation";
  bool pipe_tta = false, pipe_degrade = false;
  ModelFlags pipe_model;
  MetricFlags pipe_metrics;
  auto* pipe = app.add_subcommand("run-pipeline", "degrade -> infer -> TTA -> fuse -> score");
  pipe->add_option("--data", pipe_data, "Dataset root (HR/ and optionally LR/)")->required();
  pipe->add_option("--out", pipe_out, "Output directory")->required();
  pipe->add_option("--weights", pipe_weights, "Comma-separated fusion weights");
  pipe->add_option("--phase", pipe_phase)->check(CLI::IsMember({"validation", "val", "test"}));
  pipe->add_flag("--tta", pipe_tta, "Enable 8-fold dihedral TTA");
  pipe->add_flag("--degrade", pipe_degrade, "Regenerate LR from HR");
  add_model_flags(pipe, pipe_model, true);
  add_metric_flags(pipe, pipe_metrics);

  for (auto* sub : app.get_subcommands({})) sub->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kOk : kValidation;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kOk : kValidation;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kValidation;
  }

  try {
    if (*degrade) {
      const auto pairs = io_pairs(degrade_in, degrade_out);
      parallel_for(pairs.size(), workers, [&](std::size_t i) {
        save_image(degrade_x4(load_image(pairs[i].first)), pairs[i].second);
      });
      err << "degraded " << pairs.size() << " image(s)\n";
    } else if (*infer_cmd || *tta_cmd) {
      const bool tta = tta_cmd->parsed();
      const auto& flags = tta ? tta_model : infer_model;
      const auto model = parse_model(flags.models.front(), flags.window, flags.timeout_s, 0);
      const auto pairs = io_pairs(tta ? tta_in : infer_in, tta ? tta_out : infer_out);
      std::vector<fs::path> inputs;
      for (const auto& p : pairs) inputs.push_back(p.first);
      const auto srs = run_model(model, load_all(inputs, workers), tta, workers);
      parallel_for(pairs.size(), workers,
                   [&](std::size_t i) { save_image(quantize(srs[i]), pairs[i].second); });
      err << "super-resolved " << pairs.size() << " image(s) with " << model.name
          << (tta ? " (TTA x8)" : "") << "\n";
    } else if (*fuse_cmd) {
      const auto files = detail::list_pngs(fuse_in.front());
      if (files.empty()) throw ValidationError("no PNG files in " + fuse_in.front());
      const EnsembleWeights weights = fuse_weights.empty()
                                          ? EnsembleWeights::uniform(fuse_in.size())
                                          : EnsembleWeights(parse_number_list(fuse_weights));
      fs::create_directories(fuse_out);
      parallel_for(files.size(), workers, [&](std::size_t i) {
        std::vector<FloatImage> outputs;
        for (const auto& dir : fuse_in) outputs.push_back(to_float(load_image(fs::path(dir) / files[i].filename())));
        save_image(fuse(outputs, weights), fs::path(fuse_out) / files[i].filename());
      });
      err << "fused " << files.size() << " image(s) from " << fuse_in.size() << " model(s)\n";
    } else if (*tune) {
      const auto gt_files = detail::list_pngs(tune_gt);
      if (gt_files.empty()) throw ValidationError("no ground-truth PNGs in " + tune_gt);
      std::vector<std::string> dirs{tune_a, tune_b};
      dirs.insert(dirs.end(), tune_extra.begin(), tune_extra.end());
      std::vector<std::string> ids;
      for (const auto& p : gt_files) ids.push_back(p.stem().string());
      const auto gt = load_all(gt_files, workers);
      ModelOutputs outputs;
      for (const auto& dir : dirs) {
        std::vector<fs::path> paths;
        for (const auto& p : gt_files) {
          const auto candidate = fs::path(dir) / p.filename();
          if (!fs::exists(candidate)) throw IoError("missing " + candidate.string());
          paths.push_back(candidate);
        }
        std::vector<FloatImage> floats;
        for (const auto& img : load_all(paths, workers)) floats.push_back(to_float(img));
        outputs.push_back(std::move(floats));
      }
      const auto opts = tune_metrics.to_options();
      WeightSearchResult result;
      if (dirs.size() > 2) {
        result = grid_search_simplex(outputs, gt, tune_simplex_step, opts, workers,
                                     kDefaultSimplexBudget, ids);
      } else if (!tune_alphas.empty()) {
        const auto alphas = parse_number_list(tune_alphas);
        result = grid_search_alpha(outputs[0], outputs[1], gt, alphas, opts, workers, ids);
      } else {
        result = grid_search_alpha(outputs[0], outputs[1], gt, tune_lo, tune_hi, tune_step, opts,
                                   workers, ids);
      }
      if (!tune_csv.empty()) {
        Emitter csv(tune_csv, out);
        write_weight_table_csv(csv.stream(), result);
      } else {
        write_weight_table_csv(out, result);
      }
      std::ostringstream best;
      best << std::setprecision(17) << "best weights=";
      for (std::size_t i = 0; i < result.best_weights.size(); ++i) {
        best << (i ? "," : "") << result.best_weights[i];
      }
      best << " mean_psnr=" << result.best().mean_psnr << " mean_ssim=" << result.best().mean_ssim
           << " mean_score=" << result.best().mean_score;
      (tune_csv.empty() ? err : out) << best.str() << "\n";
    } else if (*score_cmd) {
      if (score_data.empty() && score_manifest.empty()) {
        throw ValidationError("score needs --data or --manifest");
      }
      const Phase phase = parse_phase(score_phase);
      const Manifest manifest = score_manifest.empty() ? build_manifest(score_data, phase)
                                                       : load_manifest_file(score_manifest, phase);
      const auto result = score_submission(score_sr, manifest, score_metrics.to_options(), workers);
      Emitter report(score_out, out);
      if (score_format == "csv") {
        write_report_csv(report.stream(), result);
      } else {
        write_report_json(report.stream(), result);
      }
      err << format_summary(result.aggregate) << "\n";
    } else if (*rank) {
      std::ifstream in(rank_in);
      if (!in) throw IoError("cannot read " + rank_in);
      const auto board = rank_leaderboard(read_team_results_csv(in));
      Emitter csv(rank_out, out);
      write_leaderboard_csv(csv.stream(), board);
    } else if (*synth) {
      const auto m = generate_synthetic_dataset(synth_out, parse_resolution_plan(synth_plan),
                                                synth_seed, workers);
      err << "wrote " << m.size() << " HR/LR pairs to " << synth_out << "\n";
    } else if (*pipe) {
      PipelineOptions opts;
      opts.data_root = pipe_data;
      opts.out_dir = pipe_out;
      opts.phase = parse_phase(pipe_phase);
      opts.models = parse_models(pipe_model);
      if (!pipe_weights.empty()) opts.weights = EnsembleWeights(parse_number_list(pipe_weights));
      opts.tta = pipe_tta;
      opts.degrade = pipe_degrade;
      opts.metrics = pipe_metrics.to_options();
      opts.workers = workers;
      const auto result = run_pipeline(opts);
      if (result.score) {
        out << format_summary(result.score->aggregate) << "\n";
      } else {
        out << "wrote " << result.manifest.size() << " SR image(s); no ground truth to score\n";
      }
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

}  // namespace irsr::cli
