#pragma once

#include <map>
#include <vector>

#include "mf/image.h"
#include "mf/io/trajectory_io.h"

namespace mf::eval {

struct Trajectory {
  std::vector<PoseRow> poses;  // strictly increasing t
};

struct AteResult {
  double rmse_m = 0;
  std::vector<double> per_frame_errors;
  Se3Pose alignment;  // transform applied to the estimated positions
};

/// Absolute trajectory error: associates rows by equal frame index, rigidly
/// aligns the estimated positions to ground truth (closed-form point-set
/// alignment), then reports the RMS translational residual. Requires at
/// least two common timestamps.
AteResult ate_rmse(const Trajectory& est, const Trajectory& gt);

struct IouReport {
  std::map<int, int> est_to_gt;  // fixed at first co-occurrence
  // est label -> (frame, IoU), only frames where the union is nonempty
  std::map<int, std::vector<std::pair<int, double>>> per_frame;
  std::map<int, double> mean;  // est label -> mean over its per_frame entries
};

/// Per-label intersection-over-union between estimated and ground-truth mask
/// sequences. Estimated labels are matched to GT ids by greedy maximal
/// overlap on the first frame both appear; the mapping then stays fixed.
/// 255 is treated as "no label" on both sides.
IouReport label_iou(const std::vector<LabelImage>& est_masks,
                    const std::vector<LabelImage>& gt_masks);

struct ReconStats {
  double mean_m = 0;
  double std_m = 0;
  double outlier_1cm = 0;  // fraction with distance > 1 cm
  double outlier_5cm = 0;
  bool aligned = true;  // false if the ICP refinement diverged
};

/// Nearest-point reconstruction error of a model cloud against ground-truth
/// geometry, after rigid ICP refinement from identity.
ReconStats reconstruction_error(const std::vector<Eigen::Vector3d>& model_cloud,
                                const std::vector<Eigen::Vector3d>& gt_cloud);

/// Closed-form least-squares rigid alignment (rotation + translation)
/// mapping `from` points onto `to` points (orthogonal Procrustes on
/// centered positions). Sizes must match.
Se3Pose align_point_sets(const std::vector<Eigen::Vector3d>& from,
                         const std::vector<Eigen::Vector3d>& to);

}  // namespace mf::eval
