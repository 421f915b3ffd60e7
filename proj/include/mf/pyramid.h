#pragma once

#include <vector>

#include "mf/frame.h"
#include "mf/normals.h"

namespace mf {

struct PyramidLevel {
  DepthImage depth;
  IntensityImage intensity;
  NormalImage normals;
  Intrinsics intrinsics;
};

/// Coarse-to-fine image stack, finest level first.
struct Pyramid {
  std::vector<PyramidLevel> levels;
  int level_count() const { return static_cast<int>(levels.size()); }
  const PyramidLevel& finest() const { return levels.front(); }
};

/// Depth is downsampled by the median of valid pixels in each 2x2 block
/// (invalid pixels never contribute), intensity by box filter; intrinsics are
/// halved per level and normals recomputed from the level depth.
Pyramid build_pyramid(const RgbdFrame& frame, const Intrinsics& K, int levels = 4,
                      int normal_step = 1);

}  // namespace mf
