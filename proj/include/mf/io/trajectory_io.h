#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "mf/se3.h"

namespace mf {

using PoseRow = std::pair<int, Se3Pose>;

/// Text trajectory files, one row per frame: "t tx ty tz qx qy qz qw"
/// (quaternion scalar-last).
void write_trajectory_file(const std::filesystem::path& path, const std::vector<PoseRow>& rows);
std::vector<PoseRow> read_trajectory_file(const std::filesystem::path& path);

}  // namespace mf
