#pragma once

#include <filesystem>
#include <vector>

#include "mf/se3.h"
#include "mf/surfel.h"

namespace mf {

/// Binary little-endian PLY with properties
/// x,y,z,nx,ny,nz,red,green,blue,radius,confidence.
void write_surfel_ply(const std::filesystem::path& path, const std::vector<Surfel>& surfels,
                      const Se3Pose* transform = nullptr);

/// Binary little-endian PLY with positions only.
void write_point_ply(const std::filesystem::path& path,
                     const std::vector<Eigen::Vector3d>& points);

/// Reads any PLY written by the two writers above; absent properties keep
/// their Surfel defaults. Also accepts ascii variants.
std::vector<Surfel> read_surfel_ply(const std::filesystem::path& path);

std::vector<Eigen::Vector3d> read_point_ply(const std::filesystem::path& path);

}  // namespace mf
