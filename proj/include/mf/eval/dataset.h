#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mf/frame.h"
#include "mf/io/trajectory_io.h"

namespace mf::eval {

/// A dataset in the exporter's layout (depth/, color/, mask/, traj/,
/// geometry/, intrinsics.txt, manifest.txt).
struct GtSequence {
  std::filesystem::path dir;
  Intrinsics intrinsics;
  int frame_count = 0;
  std::vector<std::filesystem::path> depth_files, color_files, mask_files;
  std::map<std::string, std::vector<PoseRow>> trajectories;        // "camera", "obj<k>"
  std::map<std::string, std::filesystem::path> geometry;           // body -> ply path
};

/// Validates the manifest and file set; frames decode lazily via load_frame.
GtSequence load_sequence(const std::filesystem::path& dir);

RgbdFrame load_frame(const GtSequence& seq, int t);
LabelImage load_mask(const GtSequence& seq, int t);

Intrinsics read_intrinsics_file(const std::filesystem::path& path);

}  // namespace mf::eval
