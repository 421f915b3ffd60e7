#pragma once

#include <deque>
#include <vector>

#include "mf/se3.h"

namespace mf {

/// Map primitive: an oriented disc with confidence weight and timestamps.
/// Positions and normals live in the owning model's reference frame.
struct Surfel {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();  // 0..255 running average
  double weight = 1.0;
  double radius = 0.005;
  int t_init = 0;
  int t_last = 0;
};

enum class ModelState { Active, Inactive };

/// One labeled map. `pose` is the rigid transform taking model-frame points
/// into the live camera frame at the model's last tracked time. For the
/// background model the model frame is the global (world) frame.
struct SurfelModel {
  int id = 0;
  std::vector<Surfel> surfels;
  Se3Pose pose;
  ModelState state = ModelState::Active;
  bool is_background = false;

  int spawn_frame = 0;
  int last_tracked_frame = -1;
  int frames_unseen = 0;
  Se3Pose world_from_model;           // cached alongside the last tracked pose
  std::deque<Se3Pose> pose_history;   // most recent last; bounded by the pipeline

  int stable_count(double confidence_stable) const {
    int n = 0;
    for (const Surfel& s : surfels)
      if (s.weight >= confidence_stable) ++n;
    return n;
  }
};

}  // namespace mf
