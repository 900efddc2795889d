#pragma once

// Brute-force reference implementations used only by the tests. They share
// no code with the library beyond the Image container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "irsr/image.hpp"

namespace irsr::oracle {

/// Keys kernel written out term by term with std::pow.
inline double keys(double x, double a) {
  const double t = std::fabs(x);
  if (t < 1.0 || t == 1.0) {
    return (a + 2.0) * std::pow(t, 3) - (a + 3.0) * std::pow(t, 2) + 1.0;
  }
  if (t < 2.0) {
    return a * std::pow(t, 3) - 5.0 * a * std::pow(t, 2) + 8.0 * a * t - 4.0 * a;
  }
  return 0.0;
}

/// Non-separable bicubic resize of a single-channel image: every output
/// pixel is a normalized 2-D sum over the whole (edge-clamped) source grid
/// plus a margin, with no precomputed tap tables. Returns float samples.
inline std::vector<double> direct_bicubic_resize(const Image& img, int out_w, int out_h, double a,
                                                 bool antialias) {
  const int in_w = img.width(), in_h = img.height();
  const double sx = static_cast<double>(in_w) / out_w;
  const double sy = static_cast<double>(in_h) / out_h;
  const double kx = (antialias && sx > 1.0) ? sx : 1.0;
  const double ky = (antialias && sy > 1.0) ? sy : 1.0;
  const int margin_x = static_cast<int>(std::ceil(2.0 * kx)) + 1;
  const int margin_y = static_cast<int>(std::ceil(2.0 * ky)) + 1;
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const double cx = (ox + 0.5) * sx - 0.5;
      const double cy = (oy + 0.5) * sy - 0.5;
      double num = 0.0, den = 0.0;
      for (int j = -margin_y; j < in_h + margin_y; ++j) {
        const double wy = keys((j - cy) / ky, a);
        if (wy == 0.0) continue;
        for (int i = -margin_x; i < in_w + margin_x; ++i) {
          const double wx = keys((i - cx) / kx, a);
          if (wx == 0.0) continue;
          const int ci = std::min(std::max(i, 0), in_w - 1);
          const int cj = std::min(std::max(j, 0), in_h - 1);
          num += wx * wy * img.samples()[static_cast<std::size_t>(cj) * in_w + ci];
          den += wx * wy;
        }
      }
      out[static_cast<std::size_t>(oy) * out_w + ox] = num / den;
    }
  }
  return out;
}

inline double psnr(const std::vector<double>& a, const std::vector<double>& b, double peak) {
  long double sse = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - b[i];
    sse += d * d;
  }
  const long double mse = sse / a.size();
  return static_cast<double>(10.0L * std::log10(static_cast<long double>(peak) * peak / mse));
}

/// SSIM by explicit per-window loops with a 2-D Gaussian and centred moments.
inline double ssim(const std::vector<double>& a, const std::vector<double>& b, int w, int h,
                   double peak) {
  constexpr int win = 11;
  constexpr double sigma = 1.5;
  double g[win][win];
  double gsum = 0.0;
  for (int y = 0; y < win; ++y)
    for (int x = 0; x < win; ++x) {
      const double dx = x - 5, dy = y - 5;
      g[y][x] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      gsum += g[y][x];
    }
  for (auto& row : g)
    for (auto& v : row) v /= gsum;

  const double c1 = std::pow(0.01 * peak, 2);
  const double c2 = std::pow(0.03 * peak, 2);
  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + win <= h; ++y0) {
    for (int x0 = 0; x0 + win <= w; ++x0) {
      double ma = 0, mb = 0;
      for (int y = 0; y < win; ++y)
        for (int x = 0; x < win; ++x) {
          const std::size_t k = static_cast<std::size_t>(y0 + y) * w + x0 + x;
          ma += g[y][x] * a[k];
          mb += g[y][x] * b[k];
        }
      double va = 0, vb = 0, cov = 0;
      for (int y = 0; y < win; ++y)
        for (int x = 0; x < win; ++x) {
          const std::size_t k = static_cast<std::size_t>(y0 + y) * w + x0 + x;
          va += g[y][x] * (a[k] - ma) * (a[k] - ma);
          vb += g[y][x] * (b[k] - mb) * (b[k] - mb);
          cov += g[y][x] * (a[k] - ma) * (b[k] - mb);
        }
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / count;
}

/// Uniform random image.
inline Image random_image(std::mt19937& rng, int w, int h, int channels = 1, int bit_depth = 8) {
  std::uniform_int_distribution<int> dist(0, (1 << bit_depth) - 1);
  std::vector<std::uint16_t> s(static_cast<std::size_t>(w) * h * channels);
  for (auto& v : s) v = static_cast<std::uint16_t>(dist(rng));
  return Image(w, h, channels, bit_depth, std::move(s));
}

/// Image whose samples are all distinct so no nontrivial symmetry fixes it.
inline Image asymmetric_image(int w, int h) {
  std::vector<std::uint16_t> s(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::uint16_t>((i * 37 + 11) % 256);
  return Image(w, h, 1, 8, std::move(s));
}

}  // namespace irsr::oracle
