#include "mf/normals.h"

#include <Eigen/Geometry>

#include "mf/camera.h"
#include "mf/error.h"

namespace mf {

NormalImage compute_normals(const DepthImage& depth, const Intrinsics& K, int step) {
  if (depth.width() != K.width || depth.height() != K.height)
    throw Error("compute_normals: depth dimensions do not match intrinsics");
  if (step < 1) throw Error("compute_normals: step must be >= 1");

  NormalImage normals(depth.width(), depth.height(), Eigen::Vector3f::Zero());
  const int w = depth.width(), h = depth.height();

  for (int y = step; y < h - step; ++y) {
    for (int x = step; x < w - step; ++x) {
      const float d = depth.at(x, y);
      const float dl = depth.at(x - step, y), dr = depth.at(x + step, y);
      const float du = depth.at(x, y - step), dd = depth.at(x, y + step);
      if (d <= 0 || dl <= 0 || dr <= 0 || du <= 0 || dd <= 0) continue;

      const Eigen::Vector3d pl = backproject_unchecked(x - step, y, dl, K);
      const Eigen::Vector3d pr = backproject_unchecked(x + step, y, dr, K);
      const Eigen::Vector3d pu = backproject_unchecked(x, y - step, du, K);
      const Eigen::Vector3d pd = backproject_unchecked(x, y + step, dd, K);

      Eigen::Vector3d n = (pr - pl).cross(pd - pu);
      const double len = n.norm();
      if (len < 1e-12) continue;
      n /= len;

      // Orient towards the camera.
      const Eigen::Vector3d view = backproject_unchecked(x, y, d, K);
      if (n.dot(view) > 0) n = -n;
      normals.at(x, y) = n.cast<float>();
    }
  }
  return normals;
}

}  // namespace mf
