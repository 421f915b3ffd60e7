#pragma once

#include <Eigen/Core>
#include <vector>

#include "mf/frame.h"
#include "mf/seg/config.h"

namespace mf {

struct Superpixel {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();    // pixels
  Eigen::Vector3d mean_color = Eigen::Vector3d::Zero();  // RGB 0..255
  double depth = 0;                                      // median of valid member depths
  std::vector<int> pixels;                               // linear indices

  /// 6-D feature (u_x, u_y, r, g, b, depth).
  Eigen::Matrix<double, 6, 1> feature() const {
    Eigen::Matrix<double, 6, 1> f;
    f << centroid.x(), centroid.y(), mean_color.x(), mean_color.y(), mean_color.z(), depth;
    return f;
  }
};

struct SuperpixelGraph {
  int width = 0, height = 0;
  std::vector<Superpixel> superpixels;
  Image<int32_t> assignment;  // pixel -> superpixel index

  int count() const { return static_cast<int>(superpixels.size()); }
};

/// SLIC over-segmentation: iterative k-means in (Lab color, position) space
/// with compactness weighting, followed by connectivity enforcement. Member
/// lists partition the image.
SuperpixelGraph slic(const RgbdFrame& frame, const SegConfig& cfg);

}  // namespace mf
