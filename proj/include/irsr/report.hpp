#pragma once

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "irsr/error.hpp"
#include "irsr/manifest.hpp"
#include "irsr/metrics.hpp"
#include "irsr/parallel.hpp"
#include "irsr/png_io.hpp"

namespace irsr {

struct SubmissionScore {
  Phase phase = Phase::validation;
  int scale = kScale;
  MetricOptions options;
  std::vector<PairScore> per_image;  // manifest order
  AggregateScore aggregate;
};

/// Scores sr_dir/<image_id>.png against each manifest HR image.
inline SubmissionScore score_submission(const std::filesystem::path& sr_dir, const Manifest& manifest,
                                        const MetricOptions& opts = {}, int workers = 1) {
  if (manifest.entries.empty()) throw ValidationError("manifest is empty");
  std::vector<std::string> missing;
  for (const auto& e : manifest.entries) {
    if (!e.hr_path) throw ValidationError("image '" + e.image_id + "' has no ground truth");
    if (!std::filesystem::exists(sr_dir / (e.image_id + ".png"))) missing.push_back(e.image_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw IoError("missing SR files in " + sr_dir.string() + ": " + list);
  }

  SubmissionScore out;
  out.phase = manifest.phase;
  out.scale = manifest.scale;
  out.options = opts;
  out.per_image.resize(manifest.entries.size());
  parallel_for(manifest.entries.size(), workers, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    const Image sr = load_image(sr_dir / (e.image_id + ".png"));
    const Image gt = load_image(*e.hr_path);
    out.per_image[i] = evaluate_pair(sr, gt, opts, e.image_id);
  });
  out.aggregate = aggregate(out.per_image);
  return out;
}

inline nlohmann::ordered_json to_json(const SubmissionScore& s) {
  nlohmann::ordered_json j;
  j["meta"] = {{"phase", std::string(to_string(s.phase))},
               {"scale", s.scale},
               {"n_images", s.per_image.size()},
               {"psnr_cap", s.options.psnr_cap},
               {"ssim_padding", s.options.ssim_padding == SsimPadding::valid ? "valid" : "symmetric"},
               {"shave", s.options.shave}};
  j["per_image"] = nlohmann::ordered_json::array();
  for (const auto& p : s.per_image) {
    j["per_image"].push_back(
        {{"image_id", p.image_id}, {"psnr", p.psnr}, {"ssim", p.ssim}, {"score", p.score}});
  }
  j["aggregate"] = {{"mean_psnr", s.aggregate.mean_psnr},
                    {"mean_ssim", s.aggregate.mean_ssim},
                    {"mean_score", s.aggregate.mean_score}};
  return j;
}

inline void write_report_json(std::ostream& os, const SubmissionScore& s) {
  os << to_json(s).dump(2) << "\n";
}

/// image_id,psnr,ssim,score at full (round-trip) precision.
inline void write_report_csv(std::ostream& os, const SubmissionScore& s) {
  os << "image_id,psnr,ssim,score\n" << std::setprecision(17);
  for (const auto& p : s.per_image) {
    os << p.image_id << "," << p.psnr << "," << p.ssim << "," << p.score << "\n";
  }
}

/// Four-decimal summary line in the leaderboard's display format.
inline std::string format_summary(const AggregateScore& a) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << "n_images=" << a.n_images
     << " mean_psnr=" << a.mean_psnr << " mean_ssim=" << a.mean_ssim
     << " mean_score=" << a.mean_score;
  return os.str();
}

}  // namespace irsr
