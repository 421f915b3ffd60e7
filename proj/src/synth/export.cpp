#include "mf/synth/export.h"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "mf/error.h"
#include "mf/io/ply_io.h"
#include "mf/io/png_io.h"
#include "mf/io/trajectory_io.h"
#include "mf/synth/render.h"

namespace mf::synth {

namespace {

std::string frame_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.png", t);
  return buf;
}

}  // namespace

ExportManifest export_sequence(const SceneScript& script, const std::filesystem::path& out_dir) {
  script.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"", "depth", "color", "mask", "traj", "geometry"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) throw Error("cannot create directory " + (out_dir / sub).string() + ": " + ec.message());
  }

  ExportManifest manifest;
  manifest.dir = out_dir;
  auto add = [&](const fs::path& rel) { manifest.files.push_back(rel); };

  std::vector<PoseRow> camera_rows;
  std::vector<std::vector<PoseRow>> body_rows(script.primitives.size());

  for (int t = 0; t < script.frame_count; ++t) {
    const RenderedFrame rf = render_frame(script, t);

    Image<uint16_t> depth_mm(rf.frame.width(), rf.frame.height(), 0);
    for (size_t i = 0; i < depth_mm.size(); ++i) {
      const float d = rf.frame.depth[i];
      if (d <= 0) continue;
      const long mm = std::lround(d * 1000.0);
      depth_mm[i] = static_cast<uint16_t>(std::clamp(mm, 0L, 65535L));
    }
    const fs::path depth_rel = fs::path("depth") / frame_name(t);
    const fs::path color_rel = fs::path("color") / frame_name(t);
    const fs::path mask_rel = fs::path("mask") / frame_name(t);
    write_png_gray16(out_dir / depth_rel, depth_mm);
    write_png_rgb(out_dir / color_rel, rf.frame.color);
    write_png_gray8(out_dir / mask_rel, rf.gt_masks);
    add(depth_rel);
    add(color_rel);
    add(mask_rel);

    camera_rows.emplace_back(t, rf.camera_pose);
    for (size_t k = 0; k < rf.gt_poses.size(); ++k)
      body_rows[k].emplace_back(t, rf.gt_poses[k].second);
  }

  write_trajectory_file(out_dir / "traj" / "camera.txt", camera_rows);
  add(fs::path("traj") / "camera.txt");
  for (size_t k = 0; k < script.primitives.size(); ++k) {
    const std::string body = "obj" + std::to_string(script.primitives[k].id);
    const fs::path traj_rel = fs::path("traj") / (body + ".txt");
    write_trajectory_file(out_dir / traj_rel, body_rows[k]);
    add(traj_rel);
  }

  // Geometry per mask group, in the group owner's local frame (grouped
  // primitives move rigidly together by contract).
  for (const ScenePrimitive& owner : script.primitives) {
    if (owner.group() != owner.id) continue;
    std::vector<Eigen::Vector3d> cloud;
    const Se3Pose owner_from_world = owner.pose_at(0).inverse();
    for (const ScenePrimitive& member : script.primitives) {
      if (member.group() != owner.id) continue;
      const Se3Pose to_owner = owner_from_world * member.pose_at(0);
      for (const Eigen::Vector3d& p : sample_surface(member, script.geometry_spacing))
        cloud.push_back(to_owner * p);
    }
    const fs::path geo_rel =
        fs::path("geometry") / ("obj" + std::to_string(owner.id) + ".ply");
    write_point_ply(out_dir / geo_rel, cloud);
    add(geo_rel);
  }

  {
    std::ofstream out(out_dir / "intrinsics.txt");
    const Intrinsics& K = script.intrinsics;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %d %d %.9g\n", K.fx, K.fy, K.cx, K.cy,
                  K.width, K.height, K.depth_scale);
    out << buf;
    if (!out) throw Error("write failed: " + (out_dir / "intrinsics.txt").string());
    add("intrinsics.txt");
  }

  {
    std::ofstream out(out_dir / "manifest.txt");
    for (const fs::path& rel : manifest.files) out << rel.string() << "\n";
    if (!out) throw Error("write failed: " + (out_dir / "manifest.txt").string());
  }
  return manifest;
}

}  // namespace mf::synth
