#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <vector>

#include "mf/intrinsics.h"
#include "mf/se3.h"

namespace mf::synth {

/// Axial depth noise sigma(z) = sigma0 + sigma_quad * z^2, followed by
/// quantization. All-zero parameters disable noise entirely.
struct NoiseParams {
  double sigma0 = 0;             // meters
  double sigma_quad = 0;         // meters^-1
  double quantization_step = 0;  // meters
  uint64_t seed = 0;

  bool enabled() const { return sigma0 > 0 || sigma_quad > 0 || quantization_step > 0; }
};

struct Keyframe {
  int t = 0;
  Se3Pose pose;
};

struct Albedo {
  enum class Kind { Solid, Checker };
  Kind kind = Kind::Solid;
  Eigen::Vector3d color_a = {180, 180, 180};
  Eigen::Vector3d color_b = {60, 60, 60};
  double square = 0.04;  // checker period, meters
};

struct Triangle {
  Eigen::Vector3d a, b, c;
};

enum class ShapeKind { Plane, Box, Sphere, Mesh };

/// One rigid scene body with a keyframed trajectory (linear translation,
/// spherical rotation interpolation; clamped outside the key range).
/// Shapes are parameterized in a local frame: plane = rect in z=0 with
/// normal +z and half-extents (x,y); box = half-extents (x,y,z); sphere =
/// radius extent.x; mesh = explicit triangles.
struct ScenePrimitive {
  int id = 0;
  int mask_group = -1;  // mask label; defaults to id. Grouped primitives must
                        // move rigidly together (e.g. static furniture
                        // grouped with the background).
  ShapeKind shape = ShapeKind::Box;
  Eigen::Vector3d extent = {0.1, 0.1, 0.1};
  std::vector<Triangle> triangles;
  Albedo albedo;
  std::vector<Keyframe> trajectory;
  bool is_background = false;

  int group() const { return mask_group < 0 ? id : mask_group; }
  Se3Pose pose_at(double t) const;
};

struct SceneScript {
  std::vector<ScenePrimitive> primitives;
  std::vector<Keyframe> camera_trajectory;
  Intrinsics intrinsics;
  int frame_count = 0;
  NoiseParams noise;
  double geometry_spacing = 0.01;  // gt cloud sample spacing, meters

  Se3Pose camera_pose_at(double t) const;  // camera-to-world
  const ScenePrimitive& background() const;
  void validate() const;

  static SceneScript parse(std::istream& in);
  static SceneScript parse_file(const std::filesystem::path& path);
};

Se3Pose interpolate_pose(const std::vector<Keyframe>& keys, double t);

/// Reserved mask value for pixels with no geometry hit.
inline constexpr uint8_t kInvalidMaskId = 255;

}  // namespace mf::synth
