#pragma once

#include <filesystem>
#include <vector>

#include "mf/synth/scene.h"

namespace mf::synth {

struct ExportManifest {
  std::filesystem::path dir;
  std::vector<std::filesystem::path> files;  // relative to dir
};

/// Renders and writes a full dataset:
///   depth/%06d.png   16-bit grayscale, exactly 1 mm per gray level
///   color/%06d.png   8-bit RGB
///   mask/%06d.png    8-bit primitive ids, 255 = no hit
///   traj/camera.txt  rows "t tx ty tz qx qy qz qw" (camera-to-world)
///   traj/obj<id>.txt per-primitive trajectories (local-to-world)
///   geometry/obj<id>.ply  surface samples in the primitive's local frame
///   intrinsics.txt   "fx fy cx cy width height depth_scale"
///   manifest.txt     one relative path per line
ExportManifest export_sequence(const SceneScript& script, const std::filesystem::path& out_dir);

}  // namespace mf::synth
