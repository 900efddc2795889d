#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "irsr/d4.hpp"
#include "irsr/error.hpp"
#include "irsr/image.hpp"
#include "irsr/metrics.hpp"
#include "irsr/model_runner.hpp"
#include "irsr/parallel.hpp"

namespace irsr {

// ---------------------------------------------------------------------------
// Test-time augmentation

/// Self-ensemble over all 8 D4 elements for a batch of LR images. Each
/// result is the float mean of the inverse-transformed SR outputs and is
/// left unquantized. External engines process all 8*N copies in one call.
inline std::vector<FloatImage> tta_infer_batch(const ModelSpec& model, const std::vector<Image>& lrs,
                                               int workers = 1) {
  std::vector<Image> transformed;
  transformed.reserve(lrs.size() * kD4Elements.size());
  for (const auto& lr : lrs)
    for (const auto& t : kD4Elements) transformed.push_back(d4_apply(lr, t));

  std::vector<Image> srs;
  if (model.is_external()) {
    srs = infer_batch(model, transformed);
  } else {
    srs.resize(transformed.size());
    parallel_for(transformed.size(), workers,
                 [&](std::size_t i) { srs[i] = infer(model, transformed[i]); });
  }

  std::vector<FloatImage> out;
  out.reserve(lrs.size());
  for (std::size_t img = 0; img < lrs.size(); ++img) {
    FloatImage acc;
    for (std::size_t k = 0; k < kD4Elements.size(); ++k) {
      const Image restored = d4_apply(srs[img * kD4Elements.size() + k], d4_inverse(kD4Elements[k]));
      if (k == 0) {
        acc = to_float(restored);
        continue;
      }
      if (restored.width() != acc.width() || restored.height() != acc.height() ||
          restored.channels() != acc.channels()) {
        throw EngineError("model '" + model.name + "' returned inconsistent TTA output shapes");
      }
      auto dst = acc.samples();
      auto src = restored.samples();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    for (auto& v : acc.samples()) v /= static_cast<double>(kD4Elements.size());
    out.push_back(std::move(acc));
  }
  return out;
}

inline FloatImage tta_infer(const ModelSpec& model, const Image& lr, int workers = 1) {
  return std::move(tta_infer_batch(model, {lr}, workers).front());
}

// ---------------------------------------------------------------------------
// Fusion

/// Snaps grid coordinates so that lo + i*step and i/K land on the same double.
inline double snap_weight(double v) { return std::round(v * 1e12) / 1e12; }

/// Convex combination coefficients: non-negative, summing to 1 within 1e-12.
class EnsembleWeights {
public:
  static constexpr double kSumTolerance = 1e-12;

  EnsembleWeights() = default;
  explicit EnsembleWeights(std::vector<double> w) : weights_(std::move(w)) {
    if (weights_.empty()) throw ValidationError("ensemble weights must not be empty");
    double total = 0.0;
    for (double v : weights_) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ValidationError("ensemble weights must be finite and non-negative");
      }
      total += v;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
      std::ostringstream os;
      os << std::setprecision(17) << "ensemble weights sum to " << total << ", expected 1";
      throw ValidationError(os.str());
    }
  }

  static EnsembleWeights uniform(std::size_t n) {
    if (n == 0) throw ValidationError("ensemble weights must not be empty");
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    // absorb rounding so the sum check is satisfied for any n
    w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
    return EnsembleWeights(std::move(w));
  }

  static EnsembleWeights pair(double alpha) {
    return EnsembleWeights({alpha, snap_weight(1.0 - alpha)});
  }

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& values() const noexcept { return weights_; }

  friend bool operator==(const EnsembleWeights&, const EnsembleWeights&) = default;

private:
  std::vector<double> weights_;
};

/// Per-pixel convex combination in float, quantized once (round half up, clamp).
inline Image fuse(std::span<const FloatImage> outputs, const EnsembleWeights& weights) {
  if (outputs.empty()) throw ValidationError("fuse needs at least one output");
  if (outputs.size() != weights.size()) {
    throw ValidationError("fuse: " + std::to_string(outputs.size()) + " outputs but " +
                          std::to_string(weights.size()) + " weights");
  }
  const auto& first = outputs.front();
  for (const auto& o : outputs) {
    if (!o.same_shape(first) || o.bit_depth() != first.bit_depth()) {
      throw ValidationError("fuse: shape mismatch " + o.shape_string() + " vs " +
                            first.shape_string());
    }
  }
  FloatImage acc(first.width(), first.height(), first.channels(), first.bit_depth(), 0.0);
  auto dst = acc.samples();
  for (std::size_t m = 0; m < outputs.size(); ++m) {
    const double w = weights[m];
    auto src = outputs[m].samples();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
  }
  return quantize(acc);
}

// ---------------------------------------------------------------------------
// Weight search

struct WeightSearchRow {
  EnsembleWeights weights;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_score = 0.0;
};

struct WeightSearchResult {
  EnsembleWeights best_weights;
  std::size_t best_index = 0;
  std::vector<WeightSearchRow> table;  // ascending weight vectors

  const WeightSearchRow& best() const { return table.at(best_index); }
};

/// Sorts rows by ascending weight vector and picks the highest mean score;
/// only a strictly greater score displaces an earlier row, so ties go to the
/// lexicographically smallest weights.
inline WeightSearchResult select_best(std::vector<WeightSearchRow> rows) {
  if (rows.empty()) throw ValidationError("weight search produced an empty table");
  std::ranges::stable_sort(rows, [](const auto& a, const auto& b) {
    return a.weights.values() < b.weights.values();
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].mean_score > rows[best].mean_score) best = i;
  }
  WeightSearchResult result;
  result.best_weights = rows[best].weights;
  result.best_index = best;
  result.table = std::move(rows);
  return result;
}

/// Per-model SR outputs for one manifest: outputs[m][i] is model m on image i.
using ModelOutputs = std::vector<std::vector<FloatImage>>;

/// Scores one weight vector: fuse every image, evaluate against gt, mean.
inline AggregateScore score_weights(const ModelOutputs& outputs, std::span<const Image> gt,
                                    const EnsembleWeights& weights, const MetricOptions& opts = {},
                                    std::span<const std::string> ids = {}) {
  std::vector<PairScore> scores;
  scores.reserve(gt.size());
  std::vector<FloatImage> per_image(outputs.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t m = 0; m < outputs.size(); ++m) per_image[m] = outputs[m][i];
    const std::string id = i < ids.size() ? ids[i] : "#" + std::to_string(i);
    try {
      scores.push_back(evaluate_pair(fuse(per_image, weights), gt[i], opts, id));
    } catch (const ValidationError& e) {
      throw ValidationError("image " + id + ": " + e.what());
    }
  }
  return aggregate(scores);
}

/// Exhaustively scores the candidate weight vectors and returns the argmax.
inline WeightSearchResult search_weights(const ModelOutputs& outputs, std::span<const Image> gt,
                                         const std::vector<EnsembleWeights>& candidates,
                                         const MetricOptions& opts = {}, int workers = 1,
                                         std::span<const std::string> ids = {}) {
  if (outputs.size() < 2) throw ValidationError("weight search needs at least two models");
  if (gt.empty()) throw ValidationError("weight search needs at least one image");
  for (const auto& set : outputs) {
    if (set.size() != gt.size()) {
      throw ValidationError("weight search: model output count " + std::to_string(set.size()) +
                            " does not match " + std::to_string(gt.size()) + " ground-truth images");
    }
  }
  for (const auto& c : candidates) {
    if (c.size() != outputs.size()) throw ValidationError("candidate weight arity mismatch");
  }
  std::vector<WeightSearchRow> rows(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t k) {
    const auto agg = score_weights(outputs, gt, candidates[k], opts, ids);
    rows[k] = {candidates[k], agg.mean_psnr, agg.mean_ssim, agg.mean_score};
  });
  return select_best(std::move(rows));
}

/// Uniform alpha grid {lo, lo+step, ..., <= hi}.
inline std::vector<double> alpha_grid(double lo, double hi, double step) {
  if (!(step > 0.0)) throw ValidationError("grid step must be positive");
  if (!(lo <= hi)) throw ValidationError("grid requires lo <= hi");
  if (lo < 0.0 || hi > 1.0) throw ValidationError("alpha grid must lie within [0, 1]");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = snap_weight(lo + static_cast<double>(i) * step);
  return out;
}

inline WeightSearchResult grid_search_alpha(const std::vector<FloatImage>& outputs_a,
                                            const std::vector<FloatImage>& outputs_b,
                                            std::span<const Image> gt,
                                            std::span<const double> alphas,
                                            const MetricOptions& opts = {}, int workers = 1,
                                            std::span<const std::string> ids = {}) {
  std::vector<EnsembleWeights> candidates;
  candidates.reserve(alphas.size());
  for (double a : alphas) {
    if (a < 0.0 || a > 1.0) throw ValidationError("alpha outside [0, 1]");
    candidates.push_back(EnsembleWeights::pair(a));
  }
  return search_weights({outputs_a, outputs_b}, gt, candidates, opts, workers, ids);
}

inline WeightSearchResult grid_search_alpha(const std::vector<FloatImage>& outputs_a,
                                            const std::vector<FloatImage>& outputs_b,
                                            std::span<const Image> gt, double lo, double hi,
                                            double step, const MetricOptions& opts = {},
                                            int workers = 1, std::span<const std::string> ids = {}) {
  const auto alphas = alpha_grid(lo, hi, step);
  return grid_search_alpha(outputs_a, outputs_b, gt, alphas, opts, workers, ids);
}

inline constexpr std::size_t kDefaultSimplexBudget = 100000;

/// Every point of the discretized simplex {w : w_i = k_i / K, sum k_i = K},
/// in ascending lexicographic order.
inline std::vector<EnsembleWeights> simplex_grid(std::size_t n_models, double step,
                                                 std::size_t budget = kDefaultSimplexBudget) {
  if (n_models < 2) throw ValidationError("simplex search needs at least two models");
  if (!(step > 0.0) || step > 1.0) throw ValidationError("simplex step must lie in (0, 1]");
  const double k_real = 1.0 / step;
  const auto k = static_cast<std::size_t>(std::llround(k_real));
  if (std::abs(k_real - static_cast<double>(k)) > 1e-9 * k_real) {
    throw ValidationError("simplex step must divide 1");
  }
  // C(k + n - 1, n - 1) grid points, computed with an overflow-safe running product.
  double count = 1.0;
  for (std::size_t i = 1; i < n_models; ++i) {
    count = count * static_cast<double>(k + i) / static_cast<double>(i);
  }
  if (count > static_cast<double>(budget)) {
    std::ostringstream os;
    os << "simplex grid has " << std::llround(count) << " points, exceeding the budget of "
       << budget;
    throw ValidationError(os.str());
  }

  std::vector<EnsembleWeights> out;
  std::vector<std::size_t> parts(n_models, 0);
  auto emit = [&] {
    std::vector<double> w(n_models);
    for (std::size_t i = 0; i < n_models; ++i) {
      w[i] = snap_weight(static_cast<double>(parts[i]) / static_cast<double>(k));
    }
    out.emplace_back(std::move(w));
  };
  // Depth-first with ascending leading coordinates yields lexicographic order.
  auto recurse = [&](auto&& self, std::size_t pos, std::size_t remaining) -> void {
    if (pos + 1 == n_models) {
      parts[pos] = remaining;
      emit();
      return;
    }
    for (std::size_t v = 0; v <= remaining; ++v) {
      parts[pos] = v;
      self(self, pos + 1, remaining - v);
    }
  };
  recurse(recurse, 0, k);
  return out;
}

inline WeightSearchResult grid_search_simplex(const ModelOutputs& outputs, std::span<const Image> gt,
                                              double step, const MetricOptions& opts = {},
                                              int workers = 1,
                                              std::size_t budget = kDefaultSimplexBudget,
                                              std::span<const std::string> ids = {}) {
  return search_weights(outputs, gt, simplex_grid(outputs.size(), step, budget), opts, workers, ids);
}

/// CSV mirroring a sensitivity table: w0..wN-1, mean_psnr, mean_ssim, mean_score.
inline void write_weight_table_csv(std::ostream& os, const WeightSearchResult& result) {
  if (result.table.empty()) return;
  const std::size_t n = result.table.front().weights.size();
  for (std::size_t i = 0; i < n; ++i) os << "w" << i << ",";
  os << "mean_psnr,mean_ssim,mean_score\n";
  os << std::setprecision(17);
  for (const auto& row : result.table) {
    for (std::size_t i = 0; i < n; ++i) os << row.weights[i] << ",";
    os << row.mean_psnr << "," << row.mean_ssim << "," << row.mean_score << "\n";
  }
}

}  // namespace irsr
