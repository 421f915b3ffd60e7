#pragma once

#include "mf/image.h"
#include "mf/intrinsics.h"

namespace mf {

/// One time-stamped RGB-D frame. Intensity is the per-pixel channel mean of
/// the color image, kept in 0..255.
struct RgbdFrame {
  int timestamp = 0;
  DepthImage depth;
  ColorImage color;
  IntensityImage intensity;

  static RgbdFrame make(int timestamp, ColorImage color, DepthImage depth) {
    RgbdFrame f;
    f.timestamp = timestamp;
    f.intensity = IntensityImage(color.width(), color.height());
    for (size_t i = 0; i < color.size(); ++i) {
      const Rgb8& c = color[i];
      f.intensity[i] = (static_cast<float>(c.r) + c.g + c.b) / 3.0f;
    }
    f.color = std::move(color);
    f.depth = std::move(depth);
    if (f.depth.width() != f.color.width() || f.depth.height() != f.color.height())
      throw Error("RgbdFrame: depth and color dimensions differ");
    return f;
  }

  int width() const { return depth.width(); }
  int height() const { return depth.height(); }

  bool matches(const Intrinsics& K) const {
    return depth.width() == K.width && depth.height() == K.height;
  }
};

}  // namespace mf
