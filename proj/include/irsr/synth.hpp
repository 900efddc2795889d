#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "irsr/error.hpp"
#include "irsr/image.hpp"
#include "irsr/manifest.hpp"
#include "irsr/parallel.hpp"
#include "irsr/png_io.hpp"
#include "irsr/resample.hpp"

namespace irsr {

struct ResolutionClass {
  int width = 0;
  int height = 0;
  int count = 0;

  friend bool operator==(const ResolutionClass&, const ResolutionClass&) = default;
};

using ResolutionPlan = std::vector<ResolutionClass>;

/// The five training/validation size classes at desk-scale counts (10 images).
inline ResolutionPlan default_resolution_plan() {
  return {{320, 256, 4}, {120, 120, 2}, {64, 64, 2}, {256, 256, 1}, {160, 128, 1}};
}

/// "default" or a comma list such as "320x256:3,64x64:2".
inline ResolutionPlan parse_resolution_plan(std::string_view text) {
  if (text == "default") return default_resolution_plan();
  ResolutionPlan plan;
  std::stringstream ss{std::string(text)};
  for (std::string item; std::getline(ss, item, ',');) {
    ResolutionClass rc;
    char x = 0, colon = 0;
    std::istringstream is(item);
    if (!(is >> rc.width >> x >> rc.height >> colon >> rc.count) || x != 'x' || colon != ':' ||
        rc.width < 1 || rc.height < 1 || rc.count < 0) {
      throw ValidationError("bad resolution plan item '" + item + "' (expected WxH:count)");
    }
    plan.push_back(rc);
  }
  if (plan.empty()) throw ValidationError("resolution plan is empty");
  return plan;
}

namespace detail {

inline constexpr double kSynthBlurSigma = 3.0;

// Uniform double in [0, 1) from the top 53 bits of the generator.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    total += k[i + radius];
  }
  for (auto& v : k) v /= total;
  return k;
}

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

}  // namespace detail

/// Band-limited noise field: white noise, Gaussian blur (sigma 3 HR pixels,
/// i.e. well below the x4 LR Nyquist rate), then contrast-stretched to the
/// full 8-bit range. Deterministic in (seed, index).
inline Image synthesize_hr(int width, int height, std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<double> field(static_cast<std::size_t>(width) * height);
  for (auto& v : field) v = detail::unit_uniform(rng);

  const auto k = detail::gaussian_kernel(detail::kSynthBlurSigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(field.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) acc += k[t + r] * field[y * width + detail::wrap(x + t, width)];
      tmp[y * width + x] = acc;
    }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) acc += k[t + r] * tmp[detail::wrap(y + t, height) * width + x];
      field[y * width + x] = acc;
    }

  const auto [lo_it, hi_it] = std::ranges::minmax_element(field);
  const double lo = *lo_it;
  const double span = std::max(*hi_it - lo, 1e-12);
  std::vector<std::uint16_t> samples(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    samples[i] = quantize_sample((field[i] - lo) / span * 255.0, 8);
  }
  return Image(width, height, 1, 8, std::move(samples));
}

/// Writes out_dir/HR and out_dir/LR (LR = degrade_x4(HR)) as gray-8 PNGs
/// named img_0000.png, img_0001.png, ... and returns the validation manifest.
inline Manifest generate_synthetic_dataset(const std::filesystem::path& out_dir,
                                           const ResolutionPlan& plan, std::uint64_t seed,
                                           int workers = 1) {
  std::vector<std::pair<int, int>> sizes;
  for (const auto& rc : plan) {
    if (rc.width % kScale != 0 || rc.height % kScale != 0) {
      throw ValidationError("HR size " + std::to_string(rc.width) + "x" +
                            std::to_string(rc.height) + " is not divisible by 4");
    }
    for (int i = 0; i < rc.count; ++i) sizes.emplace_back(rc.width, rc.height);
  }
  if (sizes.empty()) throw ValidationError("resolution plan requests no images");

  const auto hr_dir = out_dir / "HR";
  const auto lr_dir = out_dir / "LR";
  std::filesystem::create_directories(hr_dir);
  std::filesystem::create_directories(lr_dir);

  Manifest m;
  m.phase = Phase::validation;
  m.entries.resize(sizes.size());
  parallel_for(sizes.size(), workers, [&](std::size_t i) {
    std::ostringstream name;
    name << "img_" << std::setw(4) << std::setfill('0') << i;
    const Image hr = synthesize_hr(sizes[i].first, sizes[i].second, seed, i);
    const auto hr_path = hr_dir / (name.str() + ".png");
    const auto lr_path = lr_dir / (name.str() + ".png");
    save_image(hr, hr_path);
    save_image(degrade_x4(hr), lr_path);
    m.entries[i] = {name.str(), lr_path, hr_path};
  });
  return m;
}

}  // namespace irsr
