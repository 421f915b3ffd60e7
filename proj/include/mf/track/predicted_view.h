#pragma once

#include "mf/image.h"
#include "mf/intrinsics.h"
#include "mf/normals.h"
#include "mf/surfel.h"

namespace mf {

/// Synthesized view of one model: per-pixel depth, intensity, normal and the
/// index of the surfel that produced the pixel (-1 where nothing rendered).
struct PredictedView {
  DepthImage depth;
  IntensityImage intensity;  // 0..255
  NormalImage normals;       // camera frame
  Image<int32_t> index;

  bool valid_at(int x, int y) const { return index.at(x, y) >= 0; }
};

/// Splat-renders the model's surfels as oriented discs under `pose`
/// (model frame -> camera frame). The nearest splat wins each pixel.
PredictedView predict_view(const SurfelModel& model, const Se3Pose& pose, const Intrinsics& K);

/// Half-resolution copy for coarse-to-fine tracking: depth by valid-median,
/// intensity by box filter over rendered pixels, normals recomputed from the
/// downsampled depth. The index map degenerates to a validity flag (0/-1);
/// only full-resolution views are usable for fusion association.
PredictedView downsample_view(const PredictedView& view, const Intrinsics& coarse_K);

}  // namespace mf
