#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>

#include "mf/frame.h"
#include "mf/fuse/fusion.h"
#include "mf/seg/segmenter.h"
#include "mf/track/tracker.h"

namespace mf {

struct PipelineConfig {
  enum class SegMode { Motion, ExternalMasks };
  SegMode mode = SegMode::Motion;
  int warmup_frames = 10;
  int max_object_models = 8;

  TrackerConfig tracker;
  SegConfig seg;
  FusionConfig fusion;
  CrfParams crf;
};

struct ModelEvent {
  enum class Kind { Spawned, Merged, Retired, Deleted };
  Kind kind;
  int model_a = -1;  // spawned/retired/deleted id, or merge survivor
  int model_b = -1;  // merged-away id
  int region_px = 0;
  int t = -1;
};

struct ModelDiag {
  int id = 0;
  double e_icp = 0, e_rgb = 0;
  int inliers = 0;
  bool converged = false;
  bool tracked = false;  // pose accepted and model fused this frame
  int surfels = 0;
};

struct FrameResult {
  int t = 0;
  std::vector<std::pair<int, Se3Pose>> poses;        // active model -> camera transforms
  std::vector<std::pair<int, Se3Pose>> world_poses;  // id 0: camera-to-world; else object-to-world
  LabelImage pixel_labels;
  std::vector<ModelEvent> events;
  std::vector<ModelDiag> diagnostics;
};

struct ModelRegistry {
  std::vector<std::unique_ptr<SurfelModel>> active;    // background first
  std::vector<std::unique_ptr<SurfelModel>> inactive;
  int next_id = 0;

  SurfelModel& background() { return *active.front(); }
  const SurfelModel& background() const { return *active.front(); }
  int active_count() const { return static_cast<int>(active.size()); }
};

/// Per-frame track -> segment -> fuse orchestration with model lifecycle.
class Pipeline {
 public:
  Pipeline(const Intrinsics& K, const PipelineConfig& cfg);

  /// Processes the next frame (timestamps must increase). In ExternalMasks
  /// mode an instance mask must accompany every post-warmup frame.
  FrameResult process_frame(const RgbdFrame& frame,
                            const LabelImage* external_mask = nullptr);

  const ModelRegistry& registry() const { return registry_; }
  const Intrinsics& intrinsics() const { return K_; }
  const PipelineConfig& config() const { return cfg_; }
  int frames_processed() const { return frames_processed_; }

 private:
  FrameResult process_warmup(const RgbdFrame& frame);
  Labeling segment_motion(const RgbdFrame& frame,
                          const std::vector<const SurfelModel*>& models,
                          const std::vector<const PredictedView*>& views);
  int spawn_model(const SpawnRegion& region, const RgbdFrame& frame,
                  const NormalImage& live_normals, const PredictedView& background_view,
                  int t);
  Labeling all_background_labeling(const RgbdFrame& frame) const;
  void finish_frame(FrameResult& result, const RgbdFrame& frame);

  Intrinsics K_;
  PipelineConfig cfg_;
  ModelRegistry registry_;
  int frames_processed_ = 0;
  int last_timestamp_ = -1;
  Labeling prev_labeling_;
};

struct SequenceInput {
  RgbdFrame frame;
  std::optional<LabelImage> external_mask;
};

using FrameSource = std::function<std::optional<SequenceInput>()>;

struct RunSummary {
  int frames = 0;
  std::vector<ModelEvent> events;
  std::vector<int> final_active_ids;
  std::vector<int> final_inactive_ids;
};

/// Drives process_frame over a source, streaming label images and trajectory
/// rows into out_dir (labels/, traj/, models/, models.txt, summary.txt) and
/// exporting all surviving models in the world frame on completion. Pass an
/// empty out_dir to only invoke the observer.
RunSummary run_sequence(Pipeline& pipeline, const FrameSource& source,
                        const std::filesystem::path& out_dir,
                        const std::function<void(const FrameResult&)>& observer = {});

}  // namespace mf
