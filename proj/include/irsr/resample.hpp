#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "irsr/error.hpp"
#include "irsr/image.hpp"

namespace irsr {

enum class FilterKind { nearest, bilinear, bicubic, lanczos3 };

struct Filter {
  FilterKind kind = FilterKind::bicubic;
  double a = -0.5;  // Keys coefficient, bicubic only

  static Filter nearest() { return {FilterKind::nearest, 0.0}; }
  static Filter bilinear() { return {FilterKind::bilinear, 0.0}; }
  static Filter bicubic(double a = -0.5) {
    if (!(a < 0.0)) throw ValidationError("bicubic coefficient must be negative");
    return {FilterKind::bicubic, a};
  }
  static Filter lanczos3() { return {FilterKind::lanczos3, 0.0}; }

  double support() const noexcept {
    switch (kind) {
      case FilterKind::nearest: return 0.5;
      case FilterKind::bilinear: return 1.0;
      case FilterKind::bicubic: return 2.0;
      case FilterKind::lanczos3: return 3.0;
    }
    return 0.0;
  }

  friend bool operator==(const Filter&, const Filter&) = default;
};

inline std::string_view to_string(FilterKind k) {
  switch (k) {
    case FilterKind::nearest: return "nearest";
    case FilterKind::bilinear: return "bilinear";
    case FilterKind::bicubic: return "bicubic";
    case FilterKind::lanczos3: return "lanczos3";
  }
  return "?";
}

inline Filter parse_filter(std::string_view name) {
  if (name == "nearest") return Filter::nearest();
  if (name == "bilinear") return Filter::bilinear();
  if (name == "bicubic") return Filter::bicubic();
  if (name == "lanczos3") return Filter::lanczos3();
  throw ValidationError("unknown filter '" + std::string(name) + "'");
}

/// Keys cubic convolution kernel.
inline double bicubic_weight(double x, double a = -0.5) {
  const double t = std::abs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

inline double filter_weight(const Filter& f, double x) {
  switch (f.kind) {
    case FilterKind::nearest: return (x >= -0.5 && x < 0.5) ? 1.0 : 0.0;
    case FilterKind::bilinear: {
      const double t = std::abs(x);
      return t < 1.0 ? 1.0 - t : 0.0;
    }
    case FilterKind::bicubic: return bicubic_weight(x, f.a);
    case FilterKind::lanczos3: {
      const double t = std::abs(x);
      if (t >= 3.0) return 0.0;
      if (t == 0.0) return 1.0;
      const double px = std::numbers::pi * t;
      return 3.0 * std::sin(px) * std::sin(px / 3.0) / (px * px);
    }
  }
  return 0.0;
}

namespace detail {

// Source taps of one output position along one axis.
struct Contribution {
  std::vector<int> index;
  std::vector<double> weight;
};

inline std::vector<Contribution> contributions(int in_size, int out_size, const Filter& filter,
                                               bool antialias) {
  const double ratio = static_cast<double>(in_size) / out_size;
  const double stretch = (antialias && ratio > 1.0) ? ratio : 1.0;
  const double support = filter.support() * stretch;
  std::vector<Contribution> out(out_size);
  for (int j = 0; j < out_size; ++j) {
    const double center = (j + 0.5) * ratio - 0.5;
    const int lo = static_cast<int>(std::ceil(center - support));
    const int hi = static_cast<int>(std::floor(center + support));
    auto& c = out[j];
    double total = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const double w = filter_weight(filter, (i - center) / stretch);
      if (w == 0.0) continue;
      c.index.push_back(std::clamp(i, 0, in_size - 1));
      c.weight.push_back(w);
      total += w;
    }
    if (c.weight.empty() || total == 0.0) {
      // Degenerate box/tent cases: fall back to the nearest source sample.
      c.index.assign(1, std::clamp(static_cast<int>(std::floor(center + 0.5)), 0, in_size - 1));
      c.weight.assign(1, 1.0);
      continue;
    }
    for (auto& w : c.weight) w /= total;
  }
  return out;
}

}  // namespace detail

/// Separable resampling in the float domain: horizontal pass, then vertical.
/// Half-pixel centres, clamp-to-edge, optional antialiasing on shrink.
inline FloatImage resize_float(const FloatImage& img, int out_w, int out_h, const Filter& filter,
                               bool antialias) {
  if (out_w < 1 || out_h < 1) {
    throw ValidationError("resize target must be at least 1x1, got " + std::to_string(out_w) +
                          "x" + std::to_string(out_h));
  }
  const int ch = img.channels();
  const auto cols = detail::contributions(img.width(), out_w, filter, antialias);
  const auto rows = detail::contributions(img.height(), out_h, filter, antialias);

  FloatImage tmp(out_w, img.height(), ch, img.bit_depth());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < out_w; ++x) {
      const auto& c = cols[x];
      for (int k = 0; k < ch; ++k) {
        double acc = 0.0;
        for (std::size_t t = 0; t < c.index.size(); ++t) acc += c.weight[t] * img.at(c.index[t], y, k);
        tmp.at(x, y, k) = acc;
      }
    }
  }
  FloatImage out(out_w, out_h, ch, img.bit_depth());
  for (int y = 0; y < out_h; ++y) {
    const auto& r = rows[y];
    for (int x = 0; x < out_w; ++x) {
      for (int k = 0; k < ch; ++k) {
        double acc = 0.0;
        for (std::size_t t = 0; t < r.index.size(); ++t) acc += r.weight[t] * tmp.at(x, r.index[t], k);
        out.at(x, y, k) = acc;
      }
    }
  }
  return out;
}

/// Integer resize; intermediates stay in float and are quantized once.
inline Image resize(const Image& img, int out_w, int out_h, const Filter& filter, bool antialias) {
  return quantize(resize_float(to_float(img), out_w, out_h, filter, antialias), img.bit_depth());
}

inline constexpr int kScale = 4;

/// The challenge degradation: bicubic (a = -0.5) with antialiasing, x4 down.
inline Image degrade_x4(const Image& hr) {
  if (hr.width() % kScale != 0 || hr.height() % kScale != 0) {
    throw ValidationError("HR size " + std::to_string(hr.width()) + "x" +
                          std::to_string(hr.height()) + " is not divisible by 4");
  }
  return resize(hr, hr.width() / kScale, hr.height() / kScale, Filter::bicubic(), true);
}

inline Image upscale_x4(const Image& lr, const Filter& filter) {
  return resize(lr, lr.width() * kScale, lr.height() * kScale, filter, false);
}

}  // namespace irsr
