#include "mf/pyramid.h"

#include <algorithm>
#include <array>

#include "mf/error.h"

namespace mf {

namespace {

DepthImage downsample_depth(const DepthImage& in) {
  const int w = (in.width() + 1) / 2, h = (in.height() + 1) / 2;
  DepthImage out(w, h, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::array<float, 4> valid{};
      int n = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int sx = 2 * x + dx, sy = 2 * y + dy;
          if (!in.in_bounds(sx, sy)) continue;
          const float d = in.at(sx, sy);
          if (d > 0) valid[n++] = d;
        }
      if (n == 0) continue;
      std::sort(valid.begin(), valid.begin() + n);
      out.at(x, y) = valid[(n - 1) / 2];  // lower median, no averaging
    }
  }
  return out;
}

IntensityImage downsample_intensity(const IntensityImage& in) {
  const int w = (in.width() + 1) / 2, h = (in.height() + 1) / 2;
  IntensityImage out(w, h, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float sum = 0;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int sx = 2 * x + dx, sy = 2 * y + dy;
          if (!in.in_bounds(sx, sy)) continue;
          sum += in.at(sx, sy);
          ++n;
        }
      out.at(x, y) = sum / n;
    }
  }
  return out;
}

}  // namespace

Pyramid build_pyramid(const RgbdFrame& frame, const Intrinsics& K, int levels, int normal_step) {
  if (levels < 1) throw Error("build_pyramid: levels must be >= 1");
  if (!frame.matches(K)) throw Error("build_pyramid: frame dimensions do not match intrinsics");
  {
    const int shrink = 1 << (levels - 1);
    if (K.width / shrink < 8 || K.height / shrink < 8)
      throw Error("build_pyramid: image too small for requested levels");
  }

  Pyramid py;
  py.levels.resize(levels);
  py.levels[0].depth = frame.depth;
  py.levels[0].intensity = frame.intensity;
  py.levels[0].intrinsics = K;
  for (int k = 1; k < levels; ++k) {
    py.levels[k].depth = downsample_depth(py.levels[k - 1].depth);
    py.levels[k].intensity = downsample_intensity(py.levels[k - 1].intensity);
    py.levels[k].intrinsics = py.levels[k - 1].intrinsics.halved();
  }
  for (int k = 0; k < levels; ++k)
    py.levels[k].normals = compute_normals(py.levels[k].depth, py.levels[k].intrinsics, normal_step);
  return py;
}

}  // namespace mf
