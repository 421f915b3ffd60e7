#pragma once

#include <vector>

#include "mf/pyramid.h"
#include "mf/se3.h"
#include "mf/track/predicted_view.h"

namespace mf {

struct TrackerConfig {
  double lambda = 0.1;  // weight of the photometric term
  int pyramid_levels = 4;
  std::vector<int> iterations_per_level = {10, 6, 4, 3};  // coarse -> fine
  double icp_dist_reject = 0.10;                          // meters
  double icp_normal_reject_deg = 30.0;
  int min_valid_correspondences = 50;
};

/// Accumulated 6x6 Gauss-Newton system for one residual type.
struct NormalEquations {
  Matrix6d H = Matrix6d::Zero();
  Vector6d b = Vector6d::Zero();
  double energy = 0;
  int inliers = 0;
};

/// Per-correspondence record, for Jacobian verification.
struct Correspondence {
  Eigen::Vector3d v_live;  // live-camera-frame point (unwarped)
  Eigen::Vector3d v_pred;  // associated predicted point (ICP only)
  Eigen::Vector3d normal;  // predicted normal (ICP only)
  double i_live = 0;       // live intensity 0..255 (RGB only)
  Vector6d J = Vector6d::Zero();
  double r = 0;
};

/// Point-to-plane ICP term between a live pyramid level and a predicted
/// view of equal dimensions. `warp` maps live-camera points into the
/// predicted view's camera frame; Jacobians are taken w.r.t. a twist
/// left-composed onto `warp`.
NormalEquations icp_step(const PyramidLevel& live, const PredictedView& predicted,
                         const Se3Pose& warp, const TrackerConfig& cfg,
                         std::vector<Correspondence>* dump = nullptr);

/// Brightness-constancy term against the predicted intensity image.
/// Residuals are normalized to [0,1]; the image gradient is the exact
/// derivative of the bilinear sampling surface, so the Jacobian matches
/// finite differences of the residual away from pixel-lattice lines.
NormalEquations rgb_step(const PyramidLevel& live, const PredictedView& predicted,
                         const Se3Pose& warp, const TrackerConfig& cfg,
                         std::vector<Correspondence>* dump = nullptr);

/// Bilinear intensity sample of a predicted view; NaN where any of the four
/// supporting pixels is unrendered or out of bounds.
double sample_predicted_intensity(const PredictedView& view, double x, double y);

struct TrackResult {
  Se3Pose pose;       // updated model-to-camera transform
  double e_icp = 0;   // final sum of squared ICP residuals (finest level)
  double e_rgb = 0;   // final sum of squared photometric residuals
  int inlier_count = 0;
  bool converged = false;
};

/// Coarse-to-fine Gauss-Newton minimization of e_icp + lambda * e_rgb with
/// step halving; returns the prior pose with converged=false when the finest
/// level has fewer than min_valid_correspondences.
TrackResult track_model(const SurfelModel& model, const Pyramid& live, const Se3Pose& prior_pose,
                        const TrackerConfig& cfg);

}  // namespace mf
