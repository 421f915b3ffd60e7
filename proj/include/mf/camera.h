#pragma once

#include <Eigen/Core>

#include "mf/intrinsics.h"

namespace mf {

/// Perspective projection of a camera-frame point. Throws for z <= 0.
Eigen::Vector2d project(const Eigen::Vector3d& p, const Intrinsics& K);

/// Back-projection of pixel u at depth d meters. Throws for d <= 0 or u
/// outside the image.
Eigen::Vector3d backproject(const Eigen::Vector2d& u, double depth, const Intrinsics& K);

/// Projection without bounds/validity checks, for inner loops.
inline Eigen::Vector2d project_unchecked(const Eigen::Vector3d& p, const Intrinsics& K) {
  const double inv_z = 1.0 / p.z();
  return {K.fx * p.x() * inv_z + K.cx, K.fy * p.y() * inv_z + K.cy};
}

inline Eigen::Vector3d backproject_unchecked(double ux, double uy, double depth,
                                             const Intrinsics& K) {
  return {(ux - K.cx) / K.fx * depth, (uy - K.cy) / K.fy * depth, depth};
}

}  // namespace mf
