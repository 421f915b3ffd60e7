#pragma once

#include "mf/frame.h"
#include "mf/synth/scene.h"

namespace mf::synth {

struct RenderedFrame {
  RgbdFrame frame;
  LabelImage gt_masks;  // primitive id per pixel, kInvalidMaskId where no hit
  Se3Pose camera_pose;  // camera-to-world at t
  std::vector<std::pair<int, Se3Pose>> gt_poses;  // primitive-to-world at t
};

/// Ray-casts all primitives under the camera pose at frame t; depth is the
/// z-buffer value of the nearest hit. Applies the script's sensor noise when
/// enabled (masks and poses stay noiseless).
RenderedFrame render_frame(const SceneScript& script, int t);

/// Perturbs every valid depth by the axial noise model and quantizes;
/// deterministic under NoiseParams::seed. Color is untouched.
RgbdFrame apply_noise(const RgbdFrame& frame, const NoiseParams& params);

/// Stable per-frame substream seed.
uint64_t mix_seed(uint64_t seed, uint64_t t);

/// Uniform surface samples of a primitive in its local frame.
std::vector<Eigen::Vector3d> sample_surface(const ScenePrimitive& prim, double spacing);

}  // namespace mf::synth
