#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "irsr/error.hpp"

namespace irsr {

/// Row-major, channel-interleaved raster.
///
/// `Sample` is std::uint16_t for integer images (samples bounded by the
/// bit depth) and double for the float working domain, where samples are
/// unclamped but the nominal peak L = 2^bit_depth - 1 travels with the data.
template <typename Sample>
class BasicImage {
public:
  using sample_type = Sample;

  BasicImage() = default;

  BasicImage(int width, int height, int channels, int bit_depth, Sample fill = Sample{})
      : BasicImage(width, height, channels, bit_depth,
                   std::vector<Sample>(checked_size(width, height, channels), fill)) {}

  BasicImage(int width, int height, int channels, int bit_depth, std::vector<Sample> samples)
      : width_(width), height_(height), channels_(channels), bit_depth_(bit_depth),
        samples_(std::move(samples)) {
    if (samples_.size() != checked_size(width, height, channels)) {
      throw ValidationError("image buffer length " + std::to_string(samples_.size()) +
                            " does not match " + shape_string());
    }
    if (bit_depth != 8 && bit_depth != 16) {
      throw ValidationError("unsupported bit depth " + std::to_string(bit_depth));
    }
    if constexpr (std::is_integral_v<Sample>) {
      const auto peak = static_cast<Sample>(peak_value());
      for (auto s : samples_) {
        if (s > peak) {
          throw ValidationError("sample " + std::to_string(s) + " exceeds " +
                                std::to_string(bit_depth) + "-bit range");
        }
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  int bit_depth() const noexcept { return bit_depth_; }
  double peak() const noexcept { return peak_value(); }
  bool empty() const noexcept { return samples_.empty(); }

  std::span<const Sample> samples() const noexcept { return samples_; }
  std::span<Sample> samples() noexcept { return samples_; }

  std::size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  Sample at(int x, int y, int c = 0) const noexcept { return samples_[index(x, y, c)]; }
  Sample& at(int x, int y, int c = 0) noexcept { return samples_[index(x, y, c)]; }

  bool same_shape(const BasicImage& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  std::string shape_string() const {
    return std::to_string(width_) + "x" + std::to_string(height_) + "x" +
           std::to_string(channels_) + "@" + std::to_string(bit_depth_) + "bit";
  }

  friend bool operator==(const BasicImage&, const BasicImage&) = default;

private:
  static std::size_t checked_size(int w, int h, int c) {
    if (w < 1 || h < 1) {
      throw ValidationError("image dimensions must be positive, got " + std::to_string(w) +
                            "x" + std::to_string(h));
    }
    if (c != 1 && c != 3) {
      throw ValidationError("image must have 1 or 3 channels, got " + std::to_string(c));
    }
    return static_cast<std::size_t>(w) * h * c;
  }

  double peak_value() const noexcept { return std::ldexp(1.0, bit_depth_) - 1.0; }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  int bit_depth_ = 8;
  std::vector<Sample> samples_;
};

using Image = BasicImage<std::uint16_t>;
using FloatImage = BasicImage<double>;

/// Round half up, then clamp to [0, 2^bit_depth - 1].
inline std::uint16_t quantize_sample(double v, int bit_depth) {
  const double peak = std::ldexp(1.0, bit_depth) - 1.0;
  double r = std::floor(v + 0.5);
  if (!(r >= 0.0)) r = 0.0;  // also maps NaN to 0
  if (r > peak) r = peak;
  return static_cast<std::uint16_t>(r);
}

inline FloatImage to_float(const Image& img) {
  std::vector<double> out(img.samples().begin(), img.samples().end());
  return FloatImage(img.width(), img.height(), img.channels(), img.bit_depth(), std::move(out));
}

inline Image quantize(const FloatImage& f, int bit_depth) {
  std::vector<std::uint16_t> out(f.samples().size());
  std::ranges::transform(f.samples(), out.begin(),
                         [bit_depth](double v) { return quantize_sample(v, bit_depth); });
  return Image(f.width(), f.height(), f.channels(), bit_depth, std::move(out));
}

inline Image quantize(const FloatImage& f) { return quantize(f, f.bit_depth()); }

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// Unrounded BT.601 luminance; single-channel inputs pass through as float.
/// This is the domain the metrics are computed in.
template <typename Sample>
FloatImage to_luma_float(const BasicImage<Sample>& img) {
  const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
  std::vector<double> out(n);
  auto s = img.samples();
  if (img.channels() == 1) {
    std::copy(s.begin(), s.end(), out.begin());
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = s[3 * i], g = s[3 * i + 1], b = s[3 * i + 2];
      // Replicated gray must map to itself exactly; the weighted sum can be off by an ulp.
      out[i] = (r == g && g == b) ? r : kLumaR * r + kLumaG * g + kLumaB * b;
    }
  }
  return FloatImage(img.width(), img.height(), 1, img.bit_depth(), std::move(out));
}

/// Integer luminance for export. Grayscale images are returned unchanged.
inline Image to_luma(const Image& img) {
  if (img.channels() == 1) return img;
  return quantize(to_luma_float(img));
}

/// Replicates a gray channel into RGB.
inline Image gray_to_rgb(const Image& img) {
  if (img.channels() != 1) throw ValidationError("gray_to_rgb expects a 1-channel image");
  std::vector<std::uint16_t> out;
  out.reserve(img.samples().size() * 3);
  for (auto v : img.samples()) out.insert(out.end(), {v, v, v});
  return Image(img.width(), img.height(), 3, img.bit_depth(), std::move(out));
}

}  // namespace irsr
