#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include "mf/normals.h"
#include "mf/surfel.h"
#include "mf/synth/render.h"
#include "mf/synth/scene.h"

namespace mf::test {

inline synth::SceneScript parse_scene(const std::string& text) {
  std::istringstream ss(text);
  return synth::SceneScript::parse(ss);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mf_test" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Textured room interior (checkered box) seen from inside, plus an optional
/// checkered object box. Intrinsics 300/300/159.5/119.5 at 320x240.
inline std::string room_scene_header(int frames) {
  std::ostringstream ss;
  ss << "frames " << frames << "\n";
  ss << "intrinsics 300 300 159.5 119.5 320 240 0.001\n";
  ss << "geometry_spacing 0.02\n";
  return ss.str();
}

/// Room interior with furniture boxes that keep several plane orientations
/// inside the frustum; furniture shares the background mask group.
inline std::string room_background() {
  return R"(primitive 0 box background
  extent 1.1 0.85 1.9
  albedo checker 0.21 215 205 190 75 85 100
  key 0 0 0 1.0
primitive 90 box
  group 0
  extent 0.18 0.22 0.16
  albedo checker 0.09 200 160 60 40 80 130
  key 0 -0.5 0.63 1.9 euler 0 25 0
primitive 91 box
  group 0
  extent 0.2 0.14 0.18
  albedo checker 0.11 90 190 110 150 40 90
  key 0 0.55 0.71 2.3 euler 0 -20 0
primitive 92 box
  group 0
  extent 0.12 0.3 0.12
  albedo checker 0.08 60 120 200 210 210 80
  key 0 0.15 0.55 1.45 euler 0 40 0
)";
}

/// Builds a surfel model from every pixel of `frame` whose mask value equals
/// `mask_id` (or all valid pixels when mask_id < 0). Surfels are stored in
/// the frame of `pose` (model-to-camera).
inline SurfelModel model_from_frame(const RgbdFrame& frame, const LabelImage* mask, int mask_id,
                                    const Intrinsics& K, const Se3Pose& pose, int id = 0) {
  SurfelModel model;
  model.id = id;
  model.pose = pose;
  const NormalImage normals = compute_normals(frame.depth, K);
  const Se3Pose cam_to_model = pose.inverse();
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      if (mask && mask->at(x, y) != mask_id) continue;
      const float d = frame.depth.at(x, y);
      if (d <= 0 || !normal_valid(normals.at(x, y))) continue;
      Surfel s;
      const Eigen::Vector3d p((x - K.cx) / K.fx * d, (y - K.cy) / K.fy * d, d);
      const Eigen::Vector3d n_cam = normals.at(x, y).cast<double>();
      s.position = cam_to_model * p;
      s.normal = cam_to_model.rotation() * n_cam;
      const Rgb8& c = frame.color.at(x, y);
      s.color = Eigen::Vector3d(c.r, c.g, c.b);
      s.weight = 1.0;
      s.radius = std::clamp((d / K.fx) * std::min(1.0 / std::max(0.5, std::abs(n_cam.z())), 2.0),
                            0.001, 0.05);
      model.surfels.push_back(s);
    }
  }
  return model;
}

}  // namespace mf::test
