#include "mf/seg/segmenter.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "mf/camera.h"
#include "mf/error.h"

namespace mf {

namespace {

double frame_depth_range(const RgbdFrame& frame) {
  float lo = std::numeric_limits<float>::max(), hi = 0;
  for (size_t i = 0; i < frame.depth.size(); ++i) {
    const float d = frame.depth[i];
    if (d <= 0) continue;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (hi <= 0) return 0.1;
  return std::max(0.1, static_cast<double>(hi - lo));
}

struct Components {
  Image<int32_t> id;       // per pixel component id, -1 where masked out
  std::vector<int> size;   // per component
  std::vector<uint8_t> value;  // label value of the component
};

/// 4-connected components of equal-valued pixels, restricted to pixels where
/// `keep` is true.
template <typename Keep>
Components connected_components(const LabelImage& labels, Keep&& keep) {
  const int w = labels.width(), h = labels.height();
  Components out;
  out.id = Image<int32_t>(w, h, -1);
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (out.id[start] >= 0 || !keep(start)) continue;
    const uint8_t value = labels[start];
    const int comp = static_cast<int>(out.size.size());
    out.size.push_back(0);
    out.value.push_back(value);
    out.id[start] = comp;
    stack.push_back(start);
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      ++out.size[comp];
      const int x = i % w, y = i / w;
      const int nbr[4] = {x > 0 ? i - 1 : -1, x < w - 1 ? i + 1 : -1, y > 0 ? i - w : -1,
                          y < h - 1 ? i + w : -1};
      for (int n : nbr)
        if (n >= 0 && out.id[n] < 0 && labels[n] == value && keep(n)) {
          out.id[n] = comp;
          stack.push_back(n);
        }
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd unary_costs(const SuperpixelGraph& graph,
                            const std::vector<const SurfelModel*>& models,
                            const std::vector<const PredictedView*>& views,
                            const RgbdFrame& frame, const Intrinsics& K, const SegConfig& cfg) {
  if (models.size() != views.size()) throw Error("unary_costs: models/views size mismatch");
  const int S = graph.count();
  const int M = static_cast<int>(models.size());
  Eigen::MatrixXd costs(S, M + 1);

  const double range = frame_depth_range(frame);
  const double missing = std::pow(cfg.missing_geometry_cost_fraction * range, 2);
  const double floor2 = cfg.outlier_floor * cfg.outlier_floor;

  for (int i = 0; i < S; ++i) {
    const Superpixel& sp = graph.superpixels[i];
    if (sp.depth <= 0) {
      costs.row(i).setConstant(missing);
      continue;
    }
    const int cx = static_cast<int>(std::lround(sp.centroid.x()));
    const int cy = static_cast<int>(std::lround(sp.centroid.y()));
    const Eigen::Vector3d v_sp =
        backproject_unchecked(sp.centroid.x(), sp.centroid.y(), sp.depth, K);

    for (int m = 0; m < M; ++m) {
      const PredictedView& view = *views[m];
      // Nearest rendered pixel in a small window around the centroid.
      int best_x = -1, best_y = -1, best_d2 = std::numeric_limits<int>::max();
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          const int x = cx + dx, y = cy + dy;
          if (!view.depth.in_bounds(x, y) || !view.valid_at(x, y)) continue;
          const int d2 = dx * dx + dy * dy;
          if (d2 < best_d2) {
            best_d2 = d2;
            best_x = x;
            best_y = y;
          }
        }
      if (best_x < 0) {
        costs(i, m) = missing;
        continue;
      }
      const Eigen::Vector3d v_pred =
          backproject_unchecked(best_x, best_y, view.depth.at(best_x, best_y), K);
      const Eigen::Vector3d n = view.normals.at(best_x, best_y).cast<double>();
      const double r = n.dot(v_pred - v_sp);
      costs(i, m) = r * r;
    }
    const double best_model = costs.row(i).head(M).minCoeff();
    costs(i, M) = std::max(cfg.outlier_kappa * best_model, floor2);
  }
  return costs;
}

PostprocessResult postprocess(const Labeling& labeling,
                              const std::vector<const SurfelModel*>& models,
                              const SegConfig& cfg) {
  PostprocessResult out;
  out.labeling = labeling;
  LabelImage& px = out.labeling.pixel_labels;
  const int tau = cfg.resolved_tau(px.width(), px.height());

  const Components comps = connected_components(px, [&](int i) { return px[i] != kOutlierId; });

  int background_id = -1;
  for (const SurfelModel* m : models)
    if (m->is_background) background_id = m->id;

  // Largest component per non-background label.
  std::map<uint8_t, int> largest;
  for (size_t c = 0; c < comps.size.size(); ++c) {
    const uint8_t v = comps.value[c];
    auto it = largest.find(v);
    if (it == largest.end() || comps.size[c] > comps.size[it->second])
      largest[v] = static_cast<int>(c);
  }

  for (int i = 0; i < px.width() * px.height(); ++i) {
    const int c = comps.id[i];
    if (c < 0) continue;
    const uint8_t v = comps.value[c];
    if (v != background_id && c != largest[v]) {
      px[i] = kOutlierId;
      ++out.suppressed_components;
      continue;
    }
    if (comps.size[c] < tau) {
      px[i] = kOutlierId;
      ++out.removed_small;
    }
  }

  // Merge candidates: pairs whose relative transform barely changed over the
  // merge window.
  const size_t window = static_cast<size_t>(cfg.merge_window);
  for (size_t a = 0; a < models.size(); ++a) {
    for (size_t b = a + 1; b < models.size(); ++b) {
      const SurfelModel& ma = *models[a];
      const SurfelModel& mb = *models[b];
      if (ma.pose_history.size() <= window || mb.pose_history.size() <= window) continue;
      const Se3Pose rel_now = ma.pose.inverse() * mb.pose;
      const Se3Pose rel_past = ma.pose_history[ma.pose_history.size() - 1 - window].inverse() *
                               mb.pose_history[mb.pose_history.size() - 1 - window];
      const Se3Pose drift = rel_past.inverse() * rel_now;
      const double dtrans = drift.translation().norm();
      const double drot = drift.angle() * 180.0 / M_PI;
      if (dtrans < cfg.merge_pose_trans_tol && drot < cfg.merge_pose_rot_tol)
        out.merges.push_back({ma.id, mb.id, dtrans, drot});
    }
  }
  return out;
}

std::optional<SpawnRegion> detect_new_model(const Labeling& labeling, const DepthImage& depth,
                                            const SegConfig& cfg) {
  const LabelImage& px = labeling.pixel_labels;
  const Components comps = connected_components(
      px, [&](int i) { return px[i] == kOutlierId && depth[i] > 0; });

  int best = -1;
  for (size_t c = 0; c < comps.size.size(); ++c)
    if (best < 0 || comps.size[c] > comps.size[best]) best = static_cast<int>(c);
  if (best < 0) return std::nullopt;

  const double threshold = cfg.spawn_fraction * px.width() * px.height();
  if (comps.size[best] <= threshold) return std::nullopt;

  SpawnRegion region;
  region.pixels.reserve(comps.size[best]);
  for (int i = 0; i < px.width() * px.height(); ++i)
    if (comps.id[i] == best) region.pixels.push_back(i);
  return region;
}

Labeling ingest_masks(const LabelImage& mask_frame, const Labeling& previous,
                      const SegConfig& cfg) {
  const LabelImage& prev = previous.pixel_labels;
  if (mask_frame.width() != prev.width() || mask_frame.height() != prev.height())
    throw Error("ingest_masks: mask dimensions do not match the frame");
  if (previous.label_ids.empty()) throw Error("ingest_masks: previous labeling has no labels");

  const uint8_t background_id = previous.label_ids.front();
  const size_t n = mask_frame.size();

  // Overlap counts between external regions and previous model labels.
  std::map<uint8_t, size_t> ext_area, prev_area;
  std::map<std::pair<uint8_t, uint8_t>, size_t> overlap;
  for (size_t i = 0; i < n; ++i) {
    const uint8_t e = mask_frame[i];
    if (e == 0 || e == 255) continue;
    ++ext_area[e];
    const uint8_t p = prev[i];
    if (p == kOutlierId || p == background_id) continue;
    ++overlap[{e, p}];
  }
  for (size_t i = 0; i < n; ++i) {
    const uint8_t p = prev[i];
    if (p != kOutlierId && p != background_id) ++prev_area[p];
  }

  struct Pair {
    double iou;
    uint8_t ext, model;
  };
  std::vector<Pair> pairs;
  for (const auto& [key, inter] : overlap) {
    const double uni =
        static_cast<double>(ext_area[key.first] + prev_area[key.second] - inter);
    if (uni > 0) pairs.push_back({inter / uni, key.first, key.second});
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.ext, a.model) < std::tie(b.ext, b.model);
  });

  std::map<uint8_t, uint8_t> ext_to_model;
  std::vector<bool> model_taken(256, false);
  for (const Pair& p : pairs) {
    if (p.iou < cfg.mask_match_iou) break;
    if (ext_to_model.count(p.ext) || model_taken[p.model]) continue;
    ext_to_model[p.ext] = p.model;
    model_taken[p.model] = true;
  }

  Labeling out;
  out.label_ids = previous.label_ids;
  out.pixel_labels = LabelImage(prev.width(), prev.height(), background_id);
  for (size_t i = 0; i < n; ++i) {
    const uint8_t e = mask_frame[i];
    if (e == 0) {
      out.pixel_labels[i] = background_id;
    } else if (e == 255) {
      out.pixel_labels[i] = kOutlierId;
    } else {
      auto it = ext_to_model.find(e);
      out.pixel_labels[i] = it != ext_to_model.end() ? it->second : kOutlierId;
    }
  }
  return out;
}

}  // namespace mf
