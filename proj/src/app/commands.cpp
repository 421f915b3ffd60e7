#include "mf/app/commands.h"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mf/error.h"
#include "mf/eval/dataset.h"
#include "mf/eval/metrics.h"
#include "mf/io/ply_io.h"
#include "mf/io/png_io.h"
#include "mf/synth/export.h"
#include "mf/synth/render.h"

namespace mf::app {

namespace fs = std::filesystem;

int cmd_render(const fs::path& script_path, const fs::path& out, std::optional<uint64_t> seed) {
  synth::SceneScript script = synth::SceneScript::parse_file(script_path);
  if (seed) script.noise.seed = *seed;
  const synth::ExportManifest manifest = synth::export_sequence(script, out);
  std::cout << "rendered " << script.frame_count << " frames, " << manifest.files.size()
            << " files -> " << out.string() << "\n";
  return 0;
}

PipelineConfig parse_pipeline_config(const fs::path& path) {
  PipelineConfig cfg;
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw Error("config line " + std::to_string(line_no) + ": expected key=value");
      continue;
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const size_t a = s.find_first_not_of(" \t\r");
      const size_t b = s.find_last_not_of(" \t\r");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(value);
    auto num = [&] { return std::stod(value); };

    if (key == "pipeline.mode") {
      if (value == "motion") cfg.mode = PipelineConfig::SegMode::Motion;
      else if (value == "masks") cfg.mode = PipelineConfig::SegMode::ExternalMasks;
      else throw Error("config: unknown mode " + value);
    } else if (key == "pipeline.warmup_frames") cfg.warmup_frames = static_cast<int>(num());
    else if (key == "pipeline.max_object_models") cfg.max_object_models = static_cast<int>(num());
    else if (key == "tracker.lambda") cfg.tracker.lambda = num();
    else if (key == "tracker.pyramid_levels") cfg.tracker.pyramid_levels = static_cast<int>(num());
    else if (key == "tracker.iterations_per_level") {
      cfg.tracker.iterations_per_level.clear();
      std::istringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.tracker.iterations_per_level.push_back(std::stoi(tok));
      if (cfg.tracker.iterations_per_level.empty())
        throw Error("config: empty iterations_per_level");
    } else if (key == "tracker.icp_dist_reject") cfg.tracker.icp_dist_reject = num();
    else if (key == "tracker.icp_normal_reject_deg") cfg.tracker.icp_normal_reject_deg = num();
    else if (key == "tracker.min_valid_correspondences")
      cfg.tracker.min_valid_correspondences = static_cast<int>(num());
    else if (key == "seg.superpixel_count") cfg.seg.superpixel_count = static_cast<int>(num());
    else if (key == "seg.slic_compactness") cfg.seg.slic_compactness = num();
    else if (key == "seg.tau") cfg.seg.tau = static_cast<int>(num());
    else if (key == "seg.spawn_fraction") cfg.seg.spawn_fraction = num();
    else if (key == "seg.missing_geometry_cost_fraction")
      cfg.seg.missing_geometry_cost_fraction = num();
    else if (key == "seg.outlier_kappa") cfg.seg.outlier_kappa = num();
    else if (key == "seg.outlier_floor") cfg.seg.outlier_floor = num();
    else if (key == "seg.unary_weight") cfg.seg.unary_weight = num();
    else if (key == "seg.merge_pose_trans_tol") cfg.seg.merge_pose_trans_tol = num();
    else if (key == "seg.merge_pose_rot_tol") cfg.seg.merge_pose_rot_tol = num();
    else if (key == "seg.merge_window") cfg.seg.merge_window = static_cast<int>(num());
    else if (key == "seg.mask_match_iou") cfg.seg.mask_match_iou = num();
    else if (key == "fusion.dist_merge") cfg.fusion.dist_merge = num();
    else if (key == "fusion.angle_merge_deg") cfg.fusion.angle_merge_deg = num();
    else if (key == "fusion.confidence_stable") cfg.fusion.confidence_stable = num();
    else if (key == "fusion.stale_frames") cfg.fusion.stale_frames = static_cast<int>(num());
    else if (key == "fusion.icp_outlier_quantile") cfg.fusion.icp_outlier_quantile = num();
    else if (key == "fusion.radius_min") cfg.fusion.radius_min = num();
    else if (key == "fusion.radius_max") cfg.fusion.radius_max = num();
    else if (key == "fusion.retire_min_stable")
      cfg.fusion.retire_min_stable = static_cast<int>(num());
    else if (key == "crf.theta_alpha") cfg.crf.theta_alpha = num();
    else if (key == "crf.theta_beta") cfg.crf.theta_beta = num();
    else if (key == "crf.theta_gamma") cfg.crf.theta_gamma = num();
    else if (key == "crf.theta_delta") cfg.crf.theta_delta = num();
    else if (key == "crf.omega1") cfg.crf.omega1 = num();
    else if (key == "crf.omega2") cfg.crf.omega2 = num();
    else if (key == "crf.potts_mu") cfg.crf.potts_mu = num();
    else if (key == "crf.meanfield_iters") cfg.crf.meanfield_iters = static_cast<int>(num());
    else throw Error("config: unknown key " + key);
  }
  return cfg;
}

int cmd_run(const fs::path& dataset, const fs::path& out, const std::string& mode,
            const fs::path& config_file) {
  const eval::GtSequence seq = eval::load_sequence(dataset);
  PipelineConfig cfg;
  if (!config_file.empty()) cfg = parse_pipeline_config(config_file);
  if (mode == "motion") cfg.mode = PipelineConfig::SegMode::Motion;
  else if (mode == "masks") cfg.mode = PipelineConfig::SegMode::ExternalMasks;
  else if (!mode.empty()) throw Error("unknown mode " + mode + " (use motion|masks)");

  const bool masks = cfg.mode == PipelineConfig::SegMode::ExternalMasks;
  if (masks && seq.mask_files.size() != static_cast<size_t>(seq.frame_count))
    throw Error("mask mode requires a mask for every frame");

  Pipeline pipeline(seq.intrinsics, cfg);
  int next = 0;
  const FrameSource source = [&]() -> std::optional<SequenceInput> {
    if (next >= seq.frame_count) return std::nullopt;
    SequenceInput input{eval::load_frame(seq, next), std::nullopt};
    if (masks) input.external_mask = eval::load_mask(seq, next);
    ++next;
    return input;
  };
  const RunSummary summary = run_sequence(pipeline, source, out);

  std::cout << "processed " << summary.frames << " frames; active models:";
  for (int id : summary.final_active_ids) std::cout << " " << id;
  if (!summary.final_inactive_ids.empty()) {
    std::cout << "; inactive:";
    for (int id : summary.final_inactive_ids) std::cout << " " << id;
  }
  std::cout << "; events: " << summary.events.size() << "\n";
  return 0;
}

namespace {

struct RunModelInfo {
  int id = 0;
  std::string state;
  int spawn_frame = 0;
  int last_frame = 0;
  size_t surfels = 0;
  fs::path ply;
};

std::vector<RunModelInfo> read_models_txt(const fs::path& results) {
  std::ifstream in(results / "models.txt");
  if (!in) throw Error("missing models.txt in " + results.string() + " (not a run directory?)");
  std::vector<RunModelInfo> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    RunModelInfo info;
    std::string rel;
    if (!(ss >> info.id >> info.state >> info.spawn_frame >> info.last_frame >> info.surfels >>
          rel))
      throw Error("malformed models.txt line: " + line);
    info.ply = results / rel;
    out.push_back(info);
  }
  return out;
}

Se3Pose pose_at_or_before(const std::vector<PoseRow>& rows, int t) {
  const PoseRow* best = nullptr;
  for (const PoseRow& r : rows) {
    if (r.first <= t && (!best || r.first > best->first)) best = &r;
  }
  if (!best) best = &rows.front();
  return best->second;
}

}  // namespace

int cmd_eval(const fs::path& results, const fs::path& dataset, const fs::path& report_path) {
  const eval::GtSequence seq = eval::load_sequence(dataset);
  const std::vector<RunModelInfo> models = read_models_txt(results);

  // Estimated label images.
  std::vector<LabelImage> est_masks, gt_masks;
  for (int t = 0; t < seq.frame_count; ++t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.png", t);
    const fs::path p = results / "labels" / buf;
    if (!fs::exists(p)) throw Error("missing label image " + p.string());
    est_masks.push_back(read_png_gray8(p));
    gt_masks.push_back(eval::load_mask(seq, t));
  }
  const eval::IouReport iou = eval::label_iou(est_masks, gt_masks);

  std::ostringstream report;
  report.precision(9);
  std::cout.precision(6);

  // Camera ATE.
  eval::Trajectory est_cam, gt_cam;
  est_cam.poses = read_trajectory_file(results / "traj" / "camera.txt");
  gt_cam.poses = seq.trajectories.at("camera");
  const eval::AteResult cam_ate = eval::ate_rmse(est_cam, gt_cam);
  report << "ate.camera.rmse_m=" << cam_ate.rmse_m << "\n";
  std::cout << "ATE camera: " << cam_ate.rmse_m * 1000 << " mm over "
            << cam_ate.per_frame_errors.size() << " frames\n";

  int background_id = -1;
  for (const RunModelInfo& m : models)
    if (m.state == "active" || m.state == "inactive") {
      background_id = m.id;
      break;  // models.txt lists the background first
    }

  for (const RunModelInfo& m : models) {
    std::string gt_body;
    if (m.id == background_id) {
      gt_body = "camera";  // background trajectory is the camera trajectory
    } else {
      auto it = iou.est_to_gt.find(m.id);
      if (it == iou.est_to_gt.end()) {
        report << "match.model_" << m.id << "=none\n";
        continue;
      }
      gt_body = "obj" + std::to_string(it->second);
      report << "match.model_" << m.id << "=" << it->second << "\n";

      const fs::path est_traj_path = results / "traj" / ("model_" + std::to_string(m.id) + ".txt");
      if (fs::exists(est_traj_path) && seq.trajectories.count(gt_body)) {
        eval::Trajectory est_obj, gt_obj;
        est_obj.poses = read_trajectory_file(est_traj_path);
        gt_obj.poses = seq.trajectories.at(gt_body);
        if (est_obj.poses.size() >= 2) {
          const eval::AteResult obj_ate = eval::ate_rmse(est_obj, gt_obj);
          report << "ate.model_" << m.id << ".rmse_m=" << obj_ate.rmse_m << "\n";
          // Same trajectory under the camera's alignment (single global frame).
          double sum2 = 0;
          size_t n = 0;
          std::map<int, Eigen::Vector3d> gt_at;
          for (const PoseRow& r : gt_obj.poses) gt_at[r.first] = r.second.translation();
          for (const PoseRow& r : est_obj.poses) {
            auto g = gt_at.find(r.first);
            if (g == gt_at.end()) continue;
            sum2 += (g->second - cam_ate.alignment * r.second.translation()).squaredNorm();
            ++n;
          }
          if (n > 0)
            report << "ate.model_" << m.id << ".rmse_global_m=" << std::sqrt(sum2 / n) << "\n";
          std::cout << "ATE model " << m.id << " (gt " << gt_body
                    << "): " << obj_ate.rmse_m * 1000 << " mm\n";
        }
      }
    }

    // IoU.
    auto iou_it = iou.mean.find(m.id);
    if (iou_it != iou.mean.end()) {
      report << "iou.model_" << m.id << ".mean=" << iou_it->second << "\n";
      std::cout << "IoU model " << m.id << ": mean " << iou_it->second << "\n";
    }

    // Reconstruction error against the matched body's geometry.
    const std::string geo_body = m.id == background_id
                                     ? "obj" + std::to_string([&] {
                                         auto it = iou.est_to_gt.find(m.id);
                                         return it == iou.est_to_gt.end() ? -1 : it->second;
                                       }())
                                     : gt_body;
    if (seq.geometry.count(geo_body) && fs::exists(m.ply)) {
      const std::vector<Eigen::Vector3d> est_cloud = read_point_ply(m.ply);
      std::vector<Eigen::Vector3d> gt_cloud = read_point_ply(seq.geometry.at(geo_body));
      if (!est_cloud.empty() && !gt_cloud.empty() && seq.trajectories.count(geo_body)) {
        const Se3Pose world_from_body =
            pose_at_or_before(seq.trajectories.at(geo_body), m.last_frame);
        for (Eigen::Vector3d& p : gt_cloud) p = world_from_body * p;
        const eval::ReconStats stats = eval::reconstruction_error(est_cloud, gt_cloud);
        report << "recon.model_" << m.id << ".mean_m=" << stats.mean_m << "\n";
        report << "recon.model_" << m.id << ".std_m=" << stats.std_m << "\n";
        report << "recon.model_" << m.id << ".outlier_1cm=" << stats.outlier_1cm << "\n";
        report << "recon.model_" << m.id << ".outlier_5cm=" << stats.outlier_5cm << "\n";
        report << "recon.model_" << m.id << ".aligned=" << (stats.aligned ? 1 : 0) << "\n";
        std::cout << "Recon model " << m.id << ": mean " << stats.mean_m * 1000 << " mm, >1cm "
                  << stats.outlier_1cm * 100 << "%, >5cm " << stats.outlier_5cm * 100 << "%"
                  << (stats.aligned ? "" : " (unaligned!)") << "\n";
      }
    }
  }

  const fs::path out_path = report_path.empty() ? results / "report.txt" : report_path;
  std::ofstream out(out_path);
  out << report.str();
  if (!out) throw Error("write failed: " + out_path.string());
  std::cout << "report written to " << out_path.string() << "\n";
  return 0;
}

int cmd_export_ply(const fs::path& results, const fs::path& dest) {
  const std::vector<RunModelInfo> models = read_models_txt(results);
  std::vector<Surfel> merged;
  for (const RunModelInfo& m : models) {
    const std::vector<Surfel> s = read_surfel_ply(m.ply);
    merged.insert(merged.end(), s.begin(), s.end());
  }
  write_surfel_ply(dest, merged);
  std::cout << "wrote " << merged.size() << " surfels from " << models.size() << " models to "
            << dest.string() << "\n";
  return 0;
}

}  // namespace mf::app
