#include "mf/track/predicted_view.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "mf/camera.h"

namespace mf {

namespace {
constexpr double kNearClip = 0.05;
constexpr double kGrazingLimit = 0.05;  // |n . dir| below this: skip splat
}  // namespace

PredictedView predict_view(const SurfelModel& model, const Se3Pose& pose, const Intrinsics& K) {
  PredictedView view;
  view.depth = DepthImage(K.width, K.height, 0.0f);
  view.intensity = IntensityImage(K.width, K.height, 0.0f);
  view.normals = NormalImage(K.width, K.height, Eigen::Vector3f::Zero());
  view.index = Image<int32_t>(K.width, K.height, -1);

  const Eigen::Matrix3d& R = pose.rotation();
  const size_t count = model.surfels.size();
  std::vector<Eigen::Vector3d> p_cam(count), n_cam(count);
  std::vector<uint8_t> visible(count, 0);

  // First pass: every surfel claims its own center pixel (nearest wins), so
  // a map re-rendered from the viewpoint it was built from reproduces the
  // source image pixel for pixel.
  for (size_t s = 0; s < count; ++s) {
    const Surfel& surf = model.surfels[s];
    const Eigen::Vector3d p = pose * surf.position;
    if (p.z() < kNearClip) continue;
    p_cam[s] = p;
    n_cam[s] = R * surf.normal;
    visible[s] = 1;

    const Eigen::Vector2d center = project_unchecked(p, K);
    const int cx = static_cast<int>(std::lround(center.x()));
    const int cy = static_cast<int>(std::lround(center.y()));
    if (!view.depth.in_bounds(cx, cy)) continue;
    float& z = view.depth.at(cx, cy);
    if (z > 0 && z <= p.z()) continue;
    z = static_cast<float>(p.z());
    view.intensity.at(cx, cy) = static_cast<float>(surf.color.sum() / 3.0);
    view.normals.at(cx, cy) = n_cam[s].cast<float>();
    view.index.at(cx, cy) = static_cast<int32_t>(s);
  }

  // Second pass: fill the rest of each disc; an existing splat is only
  // replaced by a strictly closer one (epsilon absorbs coplanar ties).
  constexpr double kDepthTie = 1e-5;
  for (size_t s = 0; s < count; ++s) {
    if (!visible[s]) continue;
    const Surfel& surf = model.surfels[s];
    const Eigen::Vector3d& p = p_cam[s];
    const Eigen::Vector3d& n = n_cam[s];

    const Eigen::Vector2d center = project_unchecked(p, K);
    const double r_px = K.fx * surf.radius / p.z();
    const int x0 = std::max(0, static_cast<int>(std::floor(center.x() - r_px)));
    const int x1 = std::min(K.width - 1, static_cast<int>(std::ceil(center.x() + r_px)));
    const int y0 = std::max(0, static_cast<int>(std::floor(center.y() - r_px)));
    const int y1 = std::min(K.height - 1, static_cast<int>(std::ceil(center.y() + r_px)));

    const double pn = p.dot(n);
    const float shade = static_cast<float>(surf.color.sum() / 3.0);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        // Intersect the pixel ray with the surfel's tangent plane.
        const Eigen::Vector3d dir((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
        const double dn = dir.dot(n);
        if (std::abs(dn) < kGrazingLimit) continue;
        const double depth = pn / dn;
        if (depth < kNearClip) continue;
        if (std::abs(depth - p.z()) > 2.0 * surf.radius) continue;  // grazing extrapolation
        if ((depth * dir - p).norm() >= surf.radius) continue;

        float& z = view.depth.at(x, y);
        if (z > 0 && depth >= z - kDepthTie) continue;
        z = static_cast<float>(depth);
        view.intensity.at(x, y) = shade;
        view.normals.at(x, y) = n.cast<float>();
        view.index.at(x, y) = static_cast<int32_t>(s);
      }
    }
  }
  return view;
}


PredictedView downsample_view(const PredictedView& view, const Intrinsics& coarse_K) {
  const int w = coarse_K.width, h = coarse_K.height;
  PredictedView out;
  out.depth = DepthImage(w, h, 0.0f);
  out.intensity = IntensityImage(w, h, 0.0f);
  out.index = Image<int32_t>(w, h, -1);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::array<float, 4> valid{};
      int n = 0;
      float isum = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int sx = 2 * x + dx, sy = 2 * y + dy;
          if (!view.depth.in_bounds(sx, sy)) continue;
          const float d = view.depth.at(sx, sy);
          if (d <= 0) continue;
          valid[n++] = d;
          isum += view.intensity.at(sx, sy);
        }
      if (n == 0) continue;
      std::sort(valid.begin(), valid.begin() + n);
      out.depth.at(x, y) = valid[(n - 1) / 2];
      out.intensity.at(x, y) = isum / n;
      out.index.at(x, y) = 0;
    }
  }
  out.normals = compute_normals(out.depth, coarse_K);
  return out;
}

}  // namespace mf
