#pragma once

#include <Eigen/Core>

#include "mf/image.h"
#include "mf/intrinsics.h"

namespace mf {

using NormalImage = Image<Eigen::Vector3f>;

inline bool normal_valid(const Eigen::Vector3f& n) { return n.squaredNorm() > 0.25f; }

/// Unit normals from central differences of back-projected points, oriented
/// towards the camera. Zero vector marks invalid pixels (border, or any
/// sampled neighbor without depth). `step` is the difference half-width in
/// pixels; larger steps trade edge fidelity for noise robustness.
NormalImage compute_normals(const DepthImage& depth, const Intrinsics& K, int step = 1);

}  // namespace mf
