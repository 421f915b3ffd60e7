#pragma once

namespace mf {

struct SegConfig {
  int superpixel_count = 1000;
  double slic_compactness = 10.0;
  int slic_iterations = 10;

  int tau = 0;  // minimum component size in pixels; 0 = auto (0.5% of image)
  double spawn_fraction = 0.03;
  double missing_geometry_cost_fraction = 0.01;  // of the frame's depth range

  double outlier_kappa = 0.5;    // outlier cost = max(kappa * best cost, floor^2)
  double outlier_floor = 0.005;  // meters

  // Unary costs are in squared meters; the pipeline rescales them so the
  // missing-geometry cost maps to this value in CRF units.
  double unary_weight = 2.0;

  double merge_pose_trans_tol = 0.01;  // meters
  double merge_pose_rot_tol = 2.0;     // degrees
  int merge_window = 10;               // frames over which relative motion is compared

  double mask_match_iou = 0.2;  // external-mask to model association threshold

  int resolved_tau(int width, int height) const {
    if (tau > 0) return tau;
    return static_cast<int>(0.005 * width * height + 0.5);
  }
};

}  // namespace mf
