#include "mf/pipeline/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "mf/camera.h"
#include "mf/error.h"
#include "mf/io/png_io.h"
#include "mf/io/trajectory_io.h"
#include "mf/pyramid.h"

namespace mf {

namespace {

constexpr int kFusionNormalStep = 2;

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

}  // namespace

Pipeline::Pipeline(const Intrinsics& K, const PipelineConfig& cfg) : K_(K), cfg_(cfg) {
  K_.validate();
  if (cfg_.warmup_frames < 1) throw Error("PipelineConfig: warmup_frames must be >= 1");
  auto background = std::make_unique<SurfelModel>();
  background->id = registry_.next_id++;
  background->is_background = true;
  registry_.active.push_back(std::move(background));
}

Labeling Pipeline::all_background_labeling(const RgbdFrame& frame) const {
  Labeling lab;
  lab.label_ids = {static_cast<uint8_t>(registry_.background().id), kOutlierId};
  lab.pixel_labels = LabelImage(frame.width(), frame.height(), kOutlierId);
  for (size_t i = 0; i < frame.depth.size(); ++i)
    if (frame.depth[i] > 0) lab.pixel_labels[i] = lab.label_ids.front();
  return lab;
}

void Pipeline::finish_frame(FrameResult& result, const RgbdFrame& frame) {
  (void)frame;
  const Se3Pose world_from_cam = registry_.background().pose.inverse();
  const size_t history_cap = static_cast<size_t>(cfg_.seg.merge_window) + 2;
  for (auto& m : registry_.active) {
    m->pose_history.push_back(m->pose);
    while (m->pose_history.size() > history_cap) m->pose_history.pop_front();
    m->world_from_model = world_from_cam * m->pose;
    result.poses.emplace_back(m->id, m->pose);
    result.world_poses.emplace_back(
        m->id, m->is_background ? world_from_cam : m->world_from_model);
  }
  ++frames_processed_;
}

FrameResult Pipeline::process_warmup(const RgbdFrame& frame) {
  FrameResult result;
  result.t = frame.timestamp;
  SurfelModel& bg = registry_.background();

  if (!bg.surfels.empty()) {
    const Pyramid pyramid = build_pyramid(frame, K_, cfg_.tracker.pyramid_levels);
    const TrackResult tr = track_model(bg, pyramid, bg.pose, cfg_.tracker);
    const bool ok = tr.inlier_count >= cfg_.tracker.min_valid_correspondences;
    if (ok) bg.pose = tr.pose;
    result.diagnostics.push_back(
        {bg.id, tr.e_icp, tr.e_rgb, tr.inlier_count, tr.converged, ok, 0});
  }

  const NormalImage live_normals = compute_normals(frame.depth, K_, kFusionNormalStep);
  const Labeling labeling = all_background_labeling(frame);
  const PredictedView view = predict_view(bg, bg.pose, K_);
  fuse_frame(bg, frame, live_normals, labeling, view, K_, cfg_.fusion);
  cleanup(bg, frame.timestamp, cfg_.fusion);
  bg.last_tracked_frame = frame.timestamp;

  if (result.diagnostics.empty())
    result.diagnostics.push_back({bg.id, 0, 0, 0, true, true, 0});
  result.diagnostics.back().surfels = static_cast<int>(bg.surfels.size());
  result.pixel_labels = labeling.pixel_labels;
  prev_labeling_ = labeling;
  finish_frame(result, frame);
  return result;
}

Labeling Pipeline::segment_motion(const RgbdFrame& frame,
                                  const std::vector<const SurfelModel*>& models,
                                  const std::vector<const PredictedView*>& views) {
  const SuperpixelGraph graph = slic(frame, cfg_.seg);
  Eigen::MatrixXd unary = unary_costs(graph, models, views, frame, K_, cfg_.seg);

  // Rescale squared-meter costs so the missing-geometry level maps to
  // unary_weight in CRF units.
  const double range = frame_depth_range(frame);
  const double missing = std::pow(cfg_.seg.missing_geometry_cost_fraction * range, 2);
  unary *= cfg_.seg.unary_weight / missing;

  CrfParams crf = cfg_.crf;
  crf.normalize_kernel = true;
  std::vector<uint8_t> label_ids;
  for (const SurfelModel* m : models) label_ids.push_back(static_cast<uint8_t>(m->id));
  label_ids.push_back(kOutlierId);
  return crf_meanfield(unary, graph, crf, label_ids);
}

int Pipeline::spawn_model(const SpawnRegion& region, const RgbdFrame& frame,
                          const NormalImage& live_normals, const PredictedView& background_view,
                          int t) {
  struct Seed {
    Eigen::Vector3d p, n, c;
    double radius;
  };
  std::vector<Seed> seeds;
  seeds.reserve(region.pixels.size());
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();

  for (int i : region.pixels) {
    const int x = i % frame.width(), y = i / frame.width();
    const float d = frame.depth.at(x, y);
    if (d <= 0) continue;
    const Eigen::Vector3f nf = live_normals.at(x, y);
    if (!normal_valid(nf)) continue;
    // Pixels where the live surface lies behind the predicted background are
    // revealed background, not the new object.
    if (background_view.valid_at(x, y) &&
        d > background_view.depth.at(x, y) + cfg_.fusion.dist_merge)
      continue;
    Seed s;
    s.p = backproject_unchecked(x, y, d, K_);
    s.n = nf.cast<double>();
    const Rgb8& c = frame.color.at(x, y);
    s.c = Eigen::Vector3d(c.r, c.g, c.b);
    s.radius = std::clamp((d / K_.fx) * std::min(1.0 / std::max(0.5, std::abs(s.n.z())), 2.0),
                          cfg_.fusion.radius_min, cfg_.fusion.radius_max);
    centroid += s.p;
    seeds.push_back(s);
  }
  if (static_cast<int>(seeds.size()) < cfg_.seg.resolved_tau(frame.width(), frame.height()))
    return -1;
  centroid /= static_cast<double>(seeds.size());

  auto model = std::make_unique<SurfelModel>();
  model->id = registry_.next_id++;
  // Model frame: the live camera frame translated to the region centroid,
  // keeping the exported trajectory close to the object's own motion.
  model->pose = Se3Pose(Eigen::Matrix3d::Identity(), centroid);
  const Se3Pose cam_to_model = model->pose.inverse();
  model->spawn_frame = t;
  model->last_tracked_frame = t;
  model->surfels.reserve(seeds.size());
  for (const Seed& s : seeds) {
    Surfel surf;
    surf.position = cam_to_model * s.p;
    surf.normal = s.n;  // rotation is identity
    surf.color = s.c;
    surf.weight = 1.0;
    surf.radius = s.radius;
    surf.t_init = t;
    surf.t_last = t;
    model->surfels.push_back(surf);
  }
  const int id = model->id;
  registry_.active.push_back(std::move(model));
  return id;
}

FrameResult Pipeline::process_frame(const RgbdFrame& frame, const LabelImage* external_mask) {
  if (!frame.matches(K_))
    throw Error("process_frame: frame dimensions do not match intrinsics");
  if (frame.timestamp <= last_timestamp_)
    throw Error("process_frame: timestamps must be strictly increasing");
  last_timestamp_ = frame.timestamp;

  if (frames_processed_ < cfg_.warmup_frames) return process_warmup(frame);

  const int t = frame.timestamp;
  FrameResult result;
  result.t = t;

  const Pyramid pyramid = build_pyramid(frame, K_, cfg_.tracker.pyramid_levels);
  const NormalImage live_normals = compute_normals(frame.depth, K_, kFusionNormalStep);

  // Tracking: every active model independently, from its t-1 pose.
  std::map<int, bool> tracked_ok;
  for (auto& m : registry_.active) {
    const TrackResult tr = track_model(*m, pyramid, m->pose, cfg_.tracker);
    const bool ok = tr.inlier_count >= cfg_.tracker.min_valid_correspondences;
    if (ok) {
      m->pose = tr.pose;
      m->last_tracked_frame = t;
    }
    tracked_ok[m->id] = ok;
    result.diagnostics.push_back({m->id, tr.e_icp, tr.e_rgb, tr.inlier_count, tr.converged, ok,
                                  static_cast<int>(m->surfels.size())});
  }

  // Predicted views at the updated poses drive segmentation and fusion.
  std::map<int, PredictedView> views;
  std::vector<const SurfelModel*> model_ptrs;
  std::vector<const PredictedView*> view_ptrs;
  for (auto& m : registry_.active) {
    views.emplace(m->id, predict_view(*m, m->pose, K_));
    model_ptrs.push_back(m.get());
  }
  for (const SurfelModel* m : model_ptrs) view_ptrs.push_back(&views.at(m->id));

  // Segmentation.
  Labeling labeling;
  if (cfg_.mode == PipelineConfig::SegMode::Motion) {
    labeling = segment_motion(frame, model_ptrs, view_ptrs);
  } else {
    if (!external_mask) throw Error("process_frame: external mask required in mask mode");
    labeling = ingest_masks(*external_mask, prev_labeling_, cfg_.seg);
  }

  PostprocessResult post = postprocess(labeling, model_ptrs, cfg_.seg);
  labeling = std::move(post.labeling);

  // Merge models that moved together over the merge window.
  for (const MergeCandidate& mc : post.merges) {
    SurfelModel* a = nullptr;
    SurfelModel* b = nullptr;
    for (auto& m : registry_.active) {
      if (m->id == mc.model_a) a = m.get();
      if (m->id == mc.model_b) b = m.get();
    }
    if (!a || !b) continue;
    SurfelModel* survivor = a;
    SurfelModel* absorbed = b;
    if (b->is_background ||
        (!a->is_background && b->stable_count(cfg_.fusion.confidence_stable) >
                                  a->stable_count(cfg_.fusion.confidence_stable)))
      std::swap(survivor, absorbed);

    const Se3Pose rel = survivor->pose.inverse() * absorbed->pose;
    for (Surfel s : absorbed->surfels) {
      s.position = rel * s.position;
      s.normal = rel.rotation() * s.normal;
      survivor->surfels.push_back(s);
    }
    const uint8_t from = static_cast<uint8_t>(absorbed->id);
    const uint8_t to = static_cast<uint8_t>(survivor->id);
    for (size_t i = 0; i < labeling.pixel_labels.size(); ++i)
      if (labeling.pixel_labels[i] == from) labeling.pixel_labels[i] = to;
    result.events.push_back({ModelEvent::Kind::Merged, survivor->id, absorbed->id, 0, t});
    std::erase_if(registry_.active,
                  [&](const std::unique_ptr<SurfelModel>& m) { return m->id == absorbed->id; });
  }

  // Spawn at most one new model per frame from the largest outlier region.
  if (registry_.active_count() - 1 < cfg_.max_object_models) {
    if (const auto region = detect_new_model(labeling, frame.depth, cfg_.seg)) {
      const int id = spawn_model(*region, frame, live_normals,
                                 views.at(registry_.background().id), t);
      if (id >= 0) {
        result.events.push_back(
            {ModelEvent::Kind::Spawned, id, -1, static_cast<int>(region->pixels.size()), t});
        remove_duplicate_geometry(registry_.background(), region->pixels, frame, live_normals,
                                  K_, cfg_.fusion);
      }
    }
  }

  // Fusion and map hygiene.
  for (auto& m : registry_.active) {
    if (m->spawn_frame == t && !m->is_background) continue;  // seeded this frame
    if (!tracked_ok[m->id]) continue;
    fuse_frame(*m, frame, live_normals, labeling, views.at(m->id), K_, cfg_.fusion);
    cleanup(*m, t, cfg_.fusion);
  }

  // Lifecycle: models whose label disappeared.
  std::map<int, int> label_pixels;
  for (size_t i = 0; i < labeling.pixel_labels.size(); ++i)
    ++label_pixels[labeling.pixel_labels[i]];
  std::vector<int> to_retire, to_delete;
  for (auto& m : registry_.active) {
    if (m->is_background) continue;
    if (m->spawn_frame == t) continue;
    m->frames_unseen = label_pixels[m->id] > 0 ? 0 : m->frames_unseen + 1;
    switch (retire_or_delete(*m, m->frames_unseen, cfg_.fusion)) {
      case RetireDecision::KeepActive:
        break;
      case RetireDecision::Retire:
        to_retire.push_back(m->id);
        break;
      case RetireDecision::Delete:
        to_delete.push_back(m->id);
        break;
    }
  }
  for (int id : to_retire) {
    auto it = std::find_if(registry_.active.begin(), registry_.active.end(),
                           [&](const auto& m) { return m->id == id; });
    (*it)->state = ModelState::Inactive;
    registry_.inactive.push_back(std::move(*it));
    registry_.active.erase(it);
    result.events.push_back({ModelEvent::Kind::Retired, id, -1, 0, t});
  }
  for (int id : to_delete) {
    std::erase_if(registry_.active,
                  [&](const std::unique_ptr<SurfelModel>& m) { return m->id == id; });
    result.events.push_back({ModelEvent::Kind::Deleted, id, -1, 0, t});
  }

  result.pixel_labels = labeling.pixel_labels;
  prev_labeling_ = labeling;
  finish_frame(result, frame);
  return result;
}

namespace {

std::string frame_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.png", t);
  return buf;
}

}  // namespace

RunSummary run_sequence(Pipeline& pipeline, const FrameSource& source,
                        const std::filesystem::path& out_dir,
                        const std::function<void(const FrameResult&)>& observer) {
  namespace fs = std::filesystem;
  const bool write = !out_dir.empty();
  RunSummary summary;
  std::map<int, std::vector<PoseRow>> trajectories;
  bool dirs_ready = false;

  while (auto input = source()) {
    if (write && !dirs_ready) {
      std::error_code ec;
      for (const char* sub : {"", "labels", "traj", "models"}) {
        fs::create_directories(out_dir / sub, ec);
        if (ec) throw Error("cannot create " + (out_dir / sub).string() + ": " + ec.message());
      }
      dirs_ready = true;
    }
    const FrameResult r = pipeline.process_frame(
        input->frame, input->external_mask ? &*input->external_mask : nullptr);
    ++summary.frames;
    for (const ModelEvent& e : r.events) summary.events.push_back(e);
    for (const auto& [id, pose] : r.world_poses) trajectories[id].emplace_back(r.t, pose);
    if (write) write_png_gray8(out_dir / "labels" / frame_name(r.t), r.pixel_labels);
    if (observer) observer(r);
  }

  const ModelRegistry& reg = pipeline.registry();
  for (const auto& m : reg.active) summary.final_active_ids.push_back(m->id);
  for (const auto& m : reg.inactive) summary.final_inactive_ids.push_back(m->id);

  if (write && summary.frames > 0) {
    for (const auto& [id, rows] : trajectories) {
      const std::string name = id == reg.background().id
                                   ? std::string("camera.txt")
                                   : "model_" + std::to_string(id) + ".txt";
      write_trajectory_file(out_dir / "traj" / name, rows);
    }

    std::ofstream meta(out_dir / "models.txt");
    auto export_one = [&](const SurfelModel& m, const char* state) {
      const std::string ply = "model_" + std::to_string(m.id) + ".ply";
      export_model(m, out_dir / "models" / ply, &m.world_from_model);
      meta << m.id << " " << state << " " << m.spawn_frame << " " << m.last_tracked_frame << " "
           << m.surfels.size() << " models/" << ply << "\n";
    };
    for (const auto& m : reg.active) export_one(*m, "active");
    for (const auto& m : reg.inactive) export_one(*m, "inactive");
    if (!meta) throw Error("write failed: " + (out_dir / "models.txt").string());

    std::ofstream sum(out_dir / "summary.txt");
    sum << "frames=" << summary.frames << "\n";
    for (const ModelEvent& e : summary.events) {
      switch (e.kind) {
        case ModelEvent::Kind::Spawned:
          sum << "spawned t=" << e.t << " id=" << e.model_a << " pixels=" << e.region_px << "\n";
          break;
        case ModelEvent::Kind::Merged:
          sum << "merged t=" << e.t << " keep=" << e.model_a << " absorbed=" << e.model_b << "\n";
          break;
        case ModelEvent::Kind::Retired:
          sum << "retired t=" << e.t << " id=" << e.model_a << "\n";
          break;
        case ModelEvent::Kind::Deleted:
          sum << "deleted t=" << e.t << " id=" << e.model_a << "\n";
          break;
      }
    }
    if (!sum) throw Error("write failed: " + (out_dir / "summary.txt").string());
  }
  return summary;
}

}  // namespace mf
