#include "mf/track/tracker.h"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "mf/camera.h"
#include "mf/error.h"

namespace mf {

namespace {

struct BilinearCell {
  double value = 0;
  double gx = 0;  // exact derivative of the bilinear surface
  double gy = 0;
  bool valid = false;
};

BilinearCell sample_cell(const PredictedView& view, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  BilinearCell out;
  if (x0 < 0 || y0 < 0 || x0 + 1 >= view.intensity.width() || y0 + 1 >= view.intensity.height())
    return out;
  if (view.index.at(x0, y0) < 0 || view.index.at(x0 + 1, y0) < 0 ||
      view.index.at(x0, y0 + 1) < 0 || view.index.at(x0 + 1, y0 + 1) < 0)
    return out;
  const double ax = x - x0, ay = y - y0;
  const double i00 = view.intensity.at(x0, y0), i10 = view.intensity.at(x0 + 1, y0);
  const double i01 = view.intensity.at(x0, y0 + 1), i11 = view.intensity.at(x0 + 1, y0 + 1);
  out.value = (1 - ax) * (1 - ay) * i00 + ax * (1 - ay) * i10 + (1 - ax) * ay * i01 +
              ax * ay * i11;
  out.gx = (1 - ay) * (i10 - i00) + ay * (i11 - i01);
  out.gy = (1 - ax) * (i01 - i00) + ax * (i11 - i10);
  out.valid = true;
  return out;
}

void accumulate(NormalEquations& ne, const Vector6d& J, double r) {
  ne.H.noalias() += J * J.transpose();
  ne.b.noalias() += J * r;
  ne.energy += r * r;
  ++ne.inliers;
}

}  // namespace

double sample_predicted_intensity(const PredictedView& view, double x, double y) {
  const BilinearCell c = sample_cell(view, x, y);
  return c.valid ? c.value : std::numeric_limits<double>::quiet_NaN();
}

NormalEquations icp_step(const PyramidLevel& live, const PredictedView& predicted,
                         const Se3Pose& warp, const TrackerConfig& cfg,
                         std::vector<Correspondence>* dump) {
  if (live.depth.width() != predicted.depth.width() ||
      live.depth.height() != predicted.depth.height())
    throw Error("icp_step: level and predicted view dimensions differ");

  const Intrinsics& K = live.intrinsics;
  const double cos_gate = std::cos(cfg.icp_normal_reject_deg * M_PI / 180.0);
  const double dist_gate2 = cfg.icp_dist_reject * cfg.icp_dist_reject;
  const Eigen::Matrix3d& Rw = warp.rotation();

  NormalEquations ne;
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const float d_live = live.depth.at(x, y);
      if (d_live <= 0) continue;
      const Eigen::Vector3f n_live = live.normals.at(x, y);
      if (!normal_valid(n_live)) continue;

      const Eigen::Vector3d v_live = backproject_unchecked(x, y, d_live, K);
      const Eigen::Vector3d q = warp * v_live;
      if (q.z() <= 0) continue;
      const Eigen::Vector2d u = project_unchecked(q, K);
      const int px = static_cast<int>(std::lround(u.x()));
      const int py = static_cast<int>(std::lround(u.y()));
      if (!predicted.depth.in_bounds(px, py)) continue;
      const float d_pred = predicted.depth.at(px, py);
      if (d_pred <= 0) continue;

      const Eigen::Vector3d v_pred = backproject_unchecked(px, py, d_pred, K);
      if ((v_pred - q).squaredNorm() > dist_gate2) continue;
      const Eigen::Vector3d n = predicted.normals.at(px, py).cast<double>();
      if (n.dot(Rw * n_live.cast<double>()) < cos_gate) continue;

      const double r = n.dot(v_pred - q);
      Vector6d J;
      J.head<3>() = -n;
      J.tail<3>() = -q.cross(n);
      accumulate(ne, J, r);
      if (dump) dump->push_back({v_live, v_pred, n, 0, J, r});
    }
  }
  return ne;
}

NormalEquations rgb_step(const PyramidLevel& live, const PredictedView& predicted,
                         const Se3Pose& warp, const TrackerConfig& cfg,
                         std::vector<Correspondence>* dump) {
  if (live.depth.width() != predicted.depth.width() ||
      live.depth.height() != predicted.depth.height())
    throw Error("rgb_step: level and predicted view dimensions differ");

  const Intrinsics& K = live.intrinsics;
  constexpr double kScale = 1.0 / 255.0;

  NormalEquations ne;
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const float d_live = live.depth.at(x, y);
      if (d_live <= 0) continue;

      const Eigen::Vector3d v_live = backproject_unchecked(x, y, d_live, K);
      const Eigen::Vector3d q = warp * v_live;
      if (q.z() <= 0) continue;
      const Eigen::Vector2d u = project_unchecked(q, K);

      const BilinearCell cell = sample_cell(predicted, u.x(), u.y());
      if (!cell.valid) continue;
      if (cell.gx == 0.0 && cell.gy == 0.0) continue;  // textureless
      // Occlusion gate: the warped point must land near the predicted surface.
      const int px = static_cast<int>(std::lround(u.x()));
      const int py = static_cast<int>(std::lround(u.y()));
      if (!predicted.depth.in_bounds(px, py)) continue;
      const float d_pred = predicted.depth.at(px, py);
      if (d_pred <= 0 || std::abs(q.z() - d_pred) > cfg.icp_dist_reject) continue;
      // Never interpolate intensity across a predicted depth edge.
      {
        const int cx0 = static_cast<int>(std::floor(u.x()));
        const int cy0 = static_cast<int>(std::floor(u.y()));
        const float d00 = predicted.depth.at(cx0, cy0);
        const float d10 = predicted.depth.at(cx0 + 1, cy0);
        const float d01 = predicted.depth.at(cx0, cy0 + 1);
        const float d11 = predicted.depth.at(cx0 + 1, cy0 + 1);
        const float lo = std::min(std::min(d00, d10), std::min(d01, d11));
        const float hi = std::max(std::max(d00, d10), std::max(d01, d11));
        if (hi - lo > 0.05f) continue;
      }

      const double inv_z = 1.0 / q.z();
      Eigen::Matrix<double, 2, 3> P;
      P << K.fx * inv_z, 0, -K.fx * q.x() * inv_z * inv_z,  //
          0, K.fy * inv_z, -K.fy * q.y() * inv_z * inv_z;
      const Eigen::Vector2d g(cell.gx * kScale, cell.gy * kScale);
      const Eigen::Vector3d gP = P.transpose() * g;

      // dr/dtwist = -g^T P [I | -skew(q)]
      Vector6d J;
      J.head<3>() = -gP;
      J.tail<3>() = -q.cross(gP);
      const double r = (live.intensity.at(x, y) - cell.value) * kScale;
      accumulate(ne, J, r);
      if (dump)
        dump->push_back({v_live, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                         live.intensity.at(x, y), J, r});
    }
  }
  return ne;
}

namespace {

/// 3x3 binomial smoothing, restricted to valid pixels when a validity index
/// is given. The tracker applies it to both intensity images so that the
/// bilinear model of the prediction matches the live image's blur level.
IntensityImage smooth3(const IntensityImage& in, const Image<int32_t>* valid) {
  IntensityImage out(in.width(), in.height(), 0.0f);
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      if (valid && (*valid).at(x, y) < 0) continue;
      float sum = 0, wsum = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (!in.in_bounds(nx, ny)) continue;
          if (valid && (*valid).at(nx, ny) < 0) continue;
          const float w = static_cast<float>((2 - std::abs(dx)) * (2 - std::abs(dy)));
          sum += w * in.at(nx, ny);
          wsum += w;
        }
      out.at(x, y) = wsum > 0 ? sum / wsum : in.at(x, y);
    }
  }
  return out;
}

struct LevelEval {
  NormalEquations icp;
  NormalEquations rgb;
  double total(double lambda) const { return icp.energy + lambda * rgb.energy; }
};

LevelEval evaluate(const PyramidLevel& live, const PredictedView& predicted, const Se3Pose& warp,
                   const TrackerConfig& cfg) {
  LevelEval ev;
  ev.icp = icp_step(live, predicted, warp, cfg);
  if (cfg.lambda > 0) ev.rgb = rgb_step(live, predicted, warp, cfg);
  return ev;
}

}  // namespace

TrackResult track_model(const SurfelModel& model, const Pyramid& live, const Se3Pose& prior_pose,
                        const TrackerConfig& cfg) {
  TrackResult result;
  result.pose = prior_pose;

  const int levels = live.level_count();
  Se3Pose warp;  // live camera frame -> prediction camera frame, starts at identity

  // One full-resolution render, downsampled per level like the live pyramid.
  std::vector<PredictedView> prediction(levels);
  prediction[0] = predict_view(model, prior_pose, live.levels[0].intrinsics);
  for (int k = 1; k < levels; ++k)
    prediction[k] = downsample_view(prediction[k - 1], live.levels[k].intrinsics);

  for (int level = levels - 1; level >= 0; --level) {
    PyramidLevel lv = live.levels[level];
    PredictedView predicted = prediction[level];
    if (cfg.lambda > 0) {
      lv.intensity = smooth3(lv.intensity, nullptr);
      predicted.intensity = smooth3(predicted.intensity, &predicted.index);
    }

    const size_t it_idx = std::min(cfg.iterations_per_level.size() - 1,
                                   static_cast<size_t>(levels - 1 - level));
    const int budget = cfg.iterations_per_level[it_idx];

    LevelEval ev = evaluate(lv, predicted, warp, cfg);
    if (ev.icp.inliers < cfg.min_valid_correspondences) {
      if (level == 0) {
        result.converged = false;
        result.inlier_count = ev.icp.inliers;
        result.e_icp = ev.icp.energy;
        result.e_rgb = ev.rgb.energy;
        result.pose = prior_pose;
        return result;  // insufficient overlap; caller keeps the prior
      }
      continue;  // too little data at this coarse level, try the next finer one
    }

    bool level_converged = false;
    bool rejected = false;
    for (int iter = 0; iter < budget; ++iter) {
      Matrix6d H = ev.icp.H + cfg.lambda * ev.rgb.H;
      Vector6d b = ev.icp.b + cfg.lambda * ev.rgb.b;

      Vector6d delta = H.ldlt().solve(-b);
      if (!delta.allFinite()) {
        H += Matrix6d::Identity() * (1e-6 * H.trace());
        delta = H.ldlt().solve(-b);
        if (!delta.allFinite()) {
          rejected = true;
          break;
        }
      }

      bool accepted = false;
      double scale = 1.0;
      for (int halving = 0; halving <= 5; ++halving, scale *= 0.5) {
        const Se3Pose warp_try = se3_exp(delta * scale) * warp;
        LevelEval ev_try = evaluate(lv, predicted, warp_try, cfg);
        if (ev_try.icp.inliers >= cfg.min_valid_correspondences &&
            ev_try.total(cfg.lambda) <= ev.total(cfg.lambda) * (1.0 + 1e-12)) {
          warp = warp_try;
          ev = ev_try;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        rejected = true;
        break;
      }
      if ((delta * scale).norm() < 1e-6) {
        level_converged = true;
        break;
      }
    }

    if (level == 0) {
      result.e_icp = ev.icp.energy;
      result.e_rgb = ev.rgb.energy;
      result.inlier_count = ev.icp.inliers;
      result.converged = level_converged || !rejected;
    }
  }

  result.pose = warp.inverse() * prior_pose;
  return result;
}

}  // namespace mf
