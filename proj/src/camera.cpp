#include "mf/camera.h"

#include "mf/error.h"

namespace mf {

Eigen::Vector2d project(const Eigen::Vector3d& p, const Intrinsics& K) {
  if (p.z() <= 0) throw Error("project: point is behind the camera");
  return project_unchecked(p, K);
}

Eigen::Vector3d backproject(const Eigen::Vector2d& u, double depth, const Intrinsics& K) {
  if (depth <= 0) throw Error("backproject: invalid depth");
  if (u.x() < -0.5 || u.x() >= K.width - 0.5 || u.y() < -0.5 || u.y() >= K.height - 0.5)
    throw Error("backproject: pixel outside image bounds");
  return backproject_unchecked(u.x(), u.y(), depth, K);
}

}  // namespace mf
