#pragma once

#include "mf/error.h"

namespace mf {

/// Pinhole camera model (pre-rectified images, x right, y down, z forward).
struct Intrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;
  double depth_scale = 0.001;  // raw depth unit -> meters

  void validate() const {
    if (fx <= 0 || fy <= 0) throw Error("Intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw Error("Intrinsics: image size must be positive");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height)
      throw Error("Intrinsics: principal point outside image");
    if (depth_scale <= 0) throw Error("Intrinsics: depth_scale must be positive");
  }

  /// Intrinsics of the next-coarser pyramid level (ceil-halved resolution,
  /// pixel-center convention for the principal point).
  Intrinsics halved() const {
    Intrinsics out = *this;
    out.width = (width + 1) / 2;
    out.height = (height + 1) / 2;
    out.fx = fx * 0.5;
    out.fy = fy * 0.5;
    out.cx = (cx + 0.5) * 0.5 - 0.5;
    out.cy = (cy + 0.5) * 0.5 - 0.5;
    return out;
  }
};

}  // namespace mf
