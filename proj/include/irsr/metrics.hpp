#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irsr/error.hpp"
#include "irsr/image.hpp"

namespace irsr {

inline constexpr double kPsnrCap = 100.0;
inline constexpr double kSsimWeight = 20.0;

enum class SsimPadding {
  valid,      // no padding; the SSIM map is (w-10) x (h-10)
  symmetric,  // mirror-pad by 5 (edge sample repeated) so the map covers every pixel
};

inline SsimPadding parse_ssim_padding(std::string_view s) {
  if (s == "valid") return SsimPadding::valid;
  if (s == "symmetric") return SsimPadding::symmetric;
  throw ValidationError("unknown SSIM padding '" + std::string(s) + "'");
}

struct MetricOptions {
  double psnr_cap = kPsnrCap;
  SsimPadding ssim_padding = SsimPadding::valid;
  int shave = 0;  // border pixels removed from every side before scoring
};

struct PairScore {
  std::string image_id;
  double psnr = 0.0;
  double ssim = 0.0;
  double score = 0.0;
};

struct AggregateScore {
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_score = 0.0;
  std::size_t n_images = 0;
};

inline double score(double psnr_db, double ssim_value) { return psnr_db + kSsimWeight * ssim_value; }

namespace detail {

inline void require_single_channel_pair(const FloatImage& a, const FloatImage& b,
                                        std::string_view what) {
  if (a.channels() != 1 || b.channels() != 1) {
    throw ValidationError(std::string(what) + " expects single-channel images");
  }
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ValidationError(std::string(what) + ": dimension mismatch " + a.shape_string() +
                          " vs " + b.shape_string());
  }
  if (a.bit_depth() != b.bit_depth()) {
    throw ValidationError(std::string(what) + ": bit depth mismatch " + a.shape_string() +
                          " vs " + b.shape_string());
  }
}

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

inline std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> g{};
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Valid-mode separable Gaussian filtering of a w x h plane.
inline std::vector<double> filter_valid(std::span<const double> src, int w, int h) {
  static const auto g = gaussian_taps();
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    const double* row = src.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * row[x + k];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

// Mirror with edge repeat: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
inline int mirror_symmetric(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

inline FloatImage pad_symmetric(const FloatImage& img, int pad) {
  FloatImage out(img.width() + 2 * pad, img.height() + 2 * pad, 1, img.bit_depth());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.at(x, y) = img.at(mirror_symmetric(x - pad, img.width()),
                            mirror_symmetric(y - pad, img.height()));
    }
  }
  return out;
}

inline FloatImage shave_border(const FloatImage& img, int shave) {
  if (shave <= 0) return img;
  const int w = img.width() - 2 * shave;
  const int h = img.height() - 2 * shave;
  if (w < 1 || h < 1) throw ValidationError("border shave leaves an empty image");
  FloatImage out(w, h, img.channels(), img.bit_depth());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(x + shave, y + shave, c);
  return out;
}

}  // namespace detail

/// PSNR in dB between two single-channel images sharing the same peak L.
/// Zero MSE returns `cap`.
inline double psnr(const FloatImage& a, const FloatImage& b, double cap = kPsnrCap) {
  detail::require_single_channel_pair(a, b, "psnr");
  auto sa = a.samples();
  auto sb = b.samples();
  double sum = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = sa[i] - sb[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(sa.size());
  if (mse == 0.0) return cap;
  const double peak = a.peak();
  return 10.0 * std::log10(peak * peak / mse);
}

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), C1 = (0.01 L)^2,
/// C2 = (0.03 L)^2, mean of the SSIM map.
inline double ssim(const FloatImage& a, const FloatImage& b,
                   SsimPadding padding = SsimPadding::valid) {
  detail::require_single_channel_pair(a, b, "ssim");
  if (padding == SsimPadding::symmetric) {
    const int pad = detail::kSsimWindow / 2;
    return ssim(detail::pad_symmetric(a, pad), detail::pad_symmetric(b, pad), SsimPadding::valid);
  }
  const int w = a.width();
  const int h = a.height();
  if (w < detail::kSsimWindow || h < detail::kSsimWindow) {
    throw ValidationError("ssim: image " + a.shape_string() + " is smaller than the 11x11 window");
  }
  const double peak = a.peak();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  auto sa = a.samples();
  auto sb = b.samples();
  const std::size_t n = sa.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = sa[i] * sa[i];
    bb[i] = sb[i] * sb[i];
    ab[i] = sa[i] * sb[i];
  }
  const auto mu_a = detail::filter_valid(sa, w, h);
  const auto mu_b = detail::filter_valid(sb, w, h);
  const auto e_aa = detail::filter_valid(aa, w, h);
  const auto e_bb = detail::filter_valid(bb, w, h);
  const auto e_ab = detail::filter_valid(ab, w, h);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double var_a = e_aa[i] - ma * ma;
    const double var_b = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

/// Scores an SR image against ground truth on the unrounded luminance channel.
inline PairScore evaluate_pair(const Image& sr, const Image& gt, const MetricOptions& opts = {},
                               std::string image_id = {}) {
  if (sr.width() != gt.width() || sr.height() != gt.height() || sr.bit_depth() != gt.bit_depth()) {
    throw ValidationError("evaluate_pair" + (image_id.empty() ? "" : " [" + image_id + "]") +
                          ": shape mismatch, sr " + sr.shape_string() + " vs gt " +
                          gt.shape_string());
  }
  const auto y_sr = detail::shave_border(to_luma_float(sr), opts.shave);
  const auto y_gt = detail::shave_border(to_luma_float(gt), opts.shave);
  PairScore out;
  out.image_id = std::move(image_id);
  out.psnr = psnr(y_sr, y_gt, opts.psnr_cap);
  out.ssim = ssim(y_sr, y_gt, opts.ssim_padding);
  out.score = score(out.psnr, out.ssim);
  return out;
}

/// Arithmetic means in the given order.
inline AggregateScore aggregate(std::span<const PairScore> scores) {
  AggregateScore agg;
  agg.n_images = scores.size();
  if (scores.empty()) return agg;
  for (const auto& s : scores) {
    agg.mean_psnr += s.psnr;
    agg.mean_ssim += s.ssim;
  }
  agg.mean_psnr /= static_cast<double>(scores.size());
  agg.mean_ssim /= static_cast<double>(scores.size());
  agg.mean_score = score(agg.mean_psnr, agg.mean_ssim);
  return agg;
}

}  // namespace irsr
