#pragma once

#include <array>
#include <string>

#include "irsr/image.hpp"

namespace irsr {

/// Element of the dihedral group of the square, applied as a horizontal
/// flip (optional) followed by `rotation` counter-clockwise quarter turns.
struct D4Transform {
  int rotation = 0;  // 0..3
  bool flip = false;

  friend bool operator==(const D4Transform&, const D4Transform&) = default;

  std::string name() const {
    return "r" + std::to_string(rotation * 90) + (flip ? "f" : "");
  }
};

inline constexpr std::array<D4Transform, 8> kD4Elements = {{
    {0, false}, {1, false}, {2, false}, {3, false},
    {0, true},  {1, true},  {2, true},  {3, true},
}};

/// R^k F is a reflection (its own inverse); R^k alone inverts to R^(4-k).
constexpr D4Transform d4_inverse(D4Transform t) {
  if (t.flip) return t;
  return {(4 - t.rotation) % 4, false};
}

/// Composition `outer` after `inner`, using F R^k = R^(-k) F.
constexpr D4Transform d4_compose(D4Transform outer, D4Transform inner) {
  const int k = outer.flip ? outer.rotation - inner.rotation : outer.rotation + inner.rotation;
  return {((k % 4) + 4) % 4, outer.flip != inner.flip};
}

template <typename Sample>
BasicImage<Sample> d4_apply(const BasicImage<Sample>& img, D4Transform t) {
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  const bool swap = (t.rotation % 2) != 0;
  BasicImage<Sample> out(swap ? h : w, swap ? w : h, ch, img.bit_depth());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // flip
      int fx = t.flip ? w - 1 - x : x;
      int fy = y;
      // counter-clockwise rotation of (fx, fy) in a w x h frame
      int ox = fx, oy = fy;
      switch (t.rotation & 3) {
        case 0: break;
        case 1: ox = fy; oy = w - 1 - fx; break;
        case 2: ox = w - 1 - fx; oy = h - 1 - fy; break;
        case 3: ox = h - 1 - fy; oy = fx; break;
      }
      for (int c = 0; c < ch; ++c) out.at(ox, oy, c) = img.at(x, y, c);
    }
  }
  return out;
}

}  // namespace irsr
