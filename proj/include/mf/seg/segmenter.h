#pragma once

#include <optional>
#include <vector>

#include "mf/seg/crf.h"
#include "mf/seg/superpixels.h"
#include "mf/surfel.h"
#include "mf/track/predicted_view.h"

namespace mf {

/// Per-superpixel label costs: squared point-to-plane residual of the
/// back-projected superpixel centroid against each model's predicted
/// geometry, a fixed missing-geometry cost where a model has nothing nearby,
/// and an outlier column driven by the best-fitting model.
/// Columns follow `models` order; the last column is the outlier label.
Eigen::MatrixXd unary_costs(const SuperpixelGraph& graph,
                            const std::vector<const SurfelModel*>& models,
                            const std::vector<const PredictedView*>& views,
                            const RgbdFrame& frame, const Intrinsics& K, const SegConfig& cfg);

struct MergeCandidate {
  int model_a = 0;  // survivor candidate
  int model_b = 0;
  double dtrans = 0;    // relative-transform drift over the merge window
  double drot_deg = 0;
};

struct PostprocessResult {
  Labeling labeling;
  std::vector<MergeCandidate> merges;
  int suppressed_components = 0;  // non-largest components relabeled outlier
  int removed_small = 0;          // sub-tau components relabeled outlier
};

/// Connected-component hygiene on the pixel labeling: every non-background
/// label keeps only its largest 4-connected component, components below tau
/// become outliers, and model pairs whose relative transform stayed within
/// (merge_pose_trans_tol, merge_pose_rot_tol) over the merge window are
/// reported as merge candidates.
PostprocessResult postprocess(const Labeling& labeling,
                              const std::vector<const SurfelModel*>& models,
                              const SegConfig& cfg);

struct SpawnRegion {
  std::vector<int> pixels;  // linear indices, all with valid depth
};

/// Largest connected outlier region, iff it exceeds spawn_fraction of the
/// image. At most one spawn per frame.
std::optional<SpawnRegion> detect_new_model(const Labeling& labeling, const DepthImage& depth,
                                            const SegConfig& cfg);

/// Imposes temporal consistency on externally produced instance masks
/// (8-bit; 0 = background, 255 = ignore): regions are matched to the
/// previous labeling by greedy descending IoU above mask_match_iou and
/// inherit stable model ids; unmatched regions become outliers (spawn
/// candidates).
Labeling ingest_masks(const LabelImage& mask_frame, const Labeling& previous,
                      const SegConfig& cfg);

}  // namespace mf
