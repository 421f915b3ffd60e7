#pragma once

#include <filesystem>
#include <vector>

#include "mf/frame.h"
#include "mf/normals.h"
#include "mf/seg/crf.h"
#include "mf/surfel.h"
#include "mf/track/predicted_view.h"

namespace mf {

struct FusionConfig {
  double dist_merge = 0.02;       // association distance along the ray, meters
  double angle_merge_deg = 20.0;  // max normal angle for association
  double confidence_stable = 10.0;
  int stale_frames = 20;
  double icp_outlier_quantile = 0.95;
  double radius_min = 0.001;
  double radius_max = 0.05;
  int retire_min_stable = 100;  // stable surfels needed to become inactive
};

/// Merges the pixels labeled with model.id into the model: associated
/// surfels (via the splat index map) are updated by a weighted running
/// average, everything else inserts a fresh surfel. The model pose must
/// already be the frame-t estimate; `view` must be rendered at that pose.
void fuse_frame(SurfelModel& model, const RgbdFrame& frame, const NormalImage& live_normals,
                const Labeling& labeling, const PredictedView& view, const Intrinsics& K,
                const FusionConfig& cfg);

/// Drops unstable surfels that have not been observed for stale_frames.
void cleanup(SurfelModel& model, int t, const FusionConfig& cfg);

/// After a spawn: deletes background surfels that project into the spawn
/// region and disagree with the live frame worse than the background's
/// icp_outlier_quantile residual. Returns the number of removed surfels.
int remove_duplicate_geometry(SurfelModel& background, const std::vector<int>& spawn_pixels,
                              const RgbdFrame& frame, const NormalImage& live_normals,
                              const Intrinsics& K, const FusionConfig& cfg);

enum class RetireDecision { KeepActive, Retire, Delete };

/// Lifecycle rule for a model whose label has been absent frames_unseen
/// consecutive frames.
RetireDecision retire_or_delete(const SurfelModel& model, int frames_unseen,
                                const FusionConfig& cfg);

/// PLY export (binary little-endian; x,y,z,nx,ny,nz,red,green,blue,radius,
/// confidence). With frame_transform the positions/normals are mapped out of
/// the model frame (e.g. into the world frame) before writing.
void export_model(const SurfelModel& model, const std::filesystem::path& path,
                  const Se3Pose* frame_transform = nullptr);

}  // namespace mf
