#include "mf/fuse/fusion.h"

#include <algorithm>
#include <cmath>

#include "mf/camera.h"
#include "mf/error.h"
#include "mf/io/ply_io.h"

namespace mf {

void fuse_frame(SurfelModel& model, const RgbdFrame& frame, const NormalImage& live_normals,
                const Labeling& labeling, const PredictedView& view, const Intrinsics& K,
                const FusionConfig& cfg) {
  if (!frame.matches(K)) throw Error("fuse_frame: frame does not match intrinsics");
  const int t = frame.timestamp;
  const uint8_t id = static_cast<uint8_t>(model.id);
  const Se3Pose cam_to_model = model.pose.inverse();
  const double cos_gate = std::cos(cfg.angle_merge_deg * M_PI / 180.0);

  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      if (labeling.pixel_labels.at(x, y) != id) continue;
      const float d = frame.depth.at(x, y);
      if (d <= 0) continue;
      const Eigen::Vector3f n_live_f = live_normals.at(x, y);
      if (!normal_valid(n_live_f)) continue;

      const Eigen::Vector3d v_cam = backproject_unchecked(x, y, d, K);
      const Eigen::Vector3d n_cam = n_live_f.cast<double>();
      const Rgb8& c = frame.color.at(x, y);
      const Eigen::Vector3d color(c.r, c.g, c.b);

      int32_t assoc = view.index.at(x, y);
      if (assoc >= 0) {
        const float d_pred = view.depth.at(x, y);
        const Eigen::Vector3d n_pred = view.normals.at(x, y).cast<double>();
        if (std::abs(d_pred - d) > cfg.dist_merge || n_pred.dot(n_cam) < cos_gate) assoc = -1;
      }

      if (assoc >= 0) {
        Surfel& s = model.surfels[assoc];
        const Eigen::Vector3d p_model = cam_to_model * v_cam;
        const Eigen::Vector3d n_model = cam_to_model.rotation() * n_cam;
        const double w = s.weight;
        const double inv = 1.0 / (w + 1.0);
        s.position = (w * s.position + p_model) * inv;
        s.normal = ((w * s.normal + n_model) * inv).normalized();
        s.color = (w * s.color + color) * inv;
        s.weight = w + 1.0;
        s.t_last = t;
        const double r_new = (d / K.fx) * std::min(1.0 / std::max(0.5, std::abs(n_cam.z())), 2.0);
        s.radius = std::min(s.radius, std::clamp(r_new, cfg.radius_min, cfg.radius_max));
      } else {
        Surfel s;
        s.position = cam_to_model * v_cam;
        s.normal = cam_to_model.rotation() * n_cam;
        s.color = color;
        s.weight = 1.0;
        const double r = (d / K.fx) * std::min(1.0 / std::max(0.5, std::abs(n_cam.z())), 2.0);
        s.radius = std::clamp(r, cfg.radius_min, cfg.radius_max);
        s.t_init = t;
        s.t_last = t;
        model.surfels.push_back(s);
      }
    }
  }
}

void cleanup(SurfelModel& model, int t, const FusionConfig& cfg) {
  std::erase_if(model.surfels, [&](const Surfel& s) {
    return s.weight < cfg.confidence_stable && t - s.t_last > cfg.stale_frames;
  });
}

int remove_duplicate_geometry(SurfelModel& background, const std::vector<int>& spawn_pixels,
                              const RgbdFrame& frame, const NormalImage& live_normals,
                              const Intrinsics& K, const FusionConfig& cfg) {
  if (spawn_pixels.empty() || background.surfels.empty()) return 0;

  Image<uint8_t> in_region(K.width, K.height, 0);
  for (int i : spawn_pixels) in_region[i] = 1;

  // Point-to-plane residual of each surfel against the live frame.
  const size_t n = background.surfels.size();
  std::vector<float> residual(n, -1.0f);
  std::vector<uint8_t> inside(n, 0);
  for (size_t s = 0; s < n; ++s) {
    const Eigen::Vector3d p_cam = background.pose * background.surfels[s].position;
    if (p_cam.z() <= 0.05) continue;
    const Eigen::Vector2d u = project_unchecked(p_cam, K);
    const int x = static_cast<int>(std::lround(u.x()));
    const int y = static_cast<int>(std::lround(u.y()));
    if (!frame.depth.in_bounds(x, y)) continue;
    const float d = frame.depth.at(x, y);
    const Eigen::Vector3f n_live = live_normals.at(x, y);
    if (d <= 0 || !normal_valid(n_live)) continue;
    const Eigen::Vector3d v_live = backproject_unchecked(x, y, d, K);
    residual[s] = static_cast<float>(std::abs(n_live.cast<double>().dot(v_live - p_cam)));
    inside[s] = in_region.at(x, y);
  }

  std::vector<float> all;
  all.reserve(n);
  for (float r : residual)
    if (r >= 0) all.push_back(r);
  if (all.empty()) return 0;
  const size_t q = std::min(all.size() - 1,
                            static_cast<size_t>(cfg.icp_outlier_quantile * all.size()));
  std::nth_element(all.begin(), all.begin() + q, all.end());
  const float gate = all[q];

  int removed = 0;
  size_t keep = 0;
  for (size_t s = 0; s < n; ++s) {
    if (inside[s] && residual[s] > gate) {
      ++removed;
      continue;
    }
    background.surfels[keep++] = background.surfels[s];
  }
  background.surfels.resize(keep);
  return removed;
}

RetireDecision retire_or_delete(const SurfelModel& model, int frames_unseen,
                                const FusionConfig& cfg) {
  if (frames_unseen <= cfg.stale_frames) return RetireDecision::KeepActive;
  if (model.stable_count(cfg.confidence_stable) >= cfg.retire_min_stable)
    return RetireDecision::Retire;
  return RetireDecision::Delete;
}

void export_model(const SurfelModel& model, const std::filesystem::path& path,
                  const Se3Pose* frame_transform) {
  write_surfel_ply(path, model.surfels, frame_transform);
}

}  // namespace mf
