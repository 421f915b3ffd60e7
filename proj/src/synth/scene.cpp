#include "mf/synth/scene.h"

#include <Eigen/Geometry>
#include <fstream>
#include <set>
#include <sstream>

#include "mf/error.h"

namespace mf::synth {

namespace {

Se3Pose pose_from_quat(const Eigen::Vector3d& t, const Eigen::Quaterniond& q) {
  return Se3Pose(q.normalized().toRotationMatrix(), t);
}

Eigen::Quaterniond quat_from_euler_deg(double ex, double ey, double ez) {
  const double d = M_PI / 180.0;
  return Eigen::AngleAxisd(ez * d, Eigen::Vector3d::UnitZ()) *
         Eigen::AngleAxisd(ey * d, Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(ex * d, Eigen::Vector3d::UnitX());
}

[[noreturn]] void fail(int line_no, const std::string& msg) {
  throw Error("scene script line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

Se3Pose interpolate_pose(const std::vector<Keyframe>& keys, double t) {
  if (keys.empty()) throw Error("trajectory has no keyframes");
  if (t <= keys.front().t) return keys.front().pose;
  if (t >= keys.back().t) return keys.back().pose;
  size_t hi = 1;
  while (keys[hi].t < t) ++hi;
  const Keyframe& a = keys[hi - 1];
  const Keyframe& b = keys[hi];
  const double s = (t - a.t) / static_cast<double>(b.t - a.t);
  const Eigen::Vector3d trans = (1.0 - s) * a.pose.translation() + s * b.pose.translation();
  const Eigen::Quaterniond rot = a.pose.quaternion().slerp(s, b.pose.quaternion());
  return pose_from_quat(trans, rot);
}

Se3Pose ScenePrimitive::pose_at(double t) const { return interpolate_pose(trajectory, t); }

Se3Pose SceneScript::camera_pose_at(double t) const {
  return interpolate_pose(camera_trajectory, t);
}

const ScenePrimitive& SceneScript::background() const {
  for (const ScenePrimitive& p : primitives)
    if (p.is_background) return p;
  throw Error("scene has no background primitive");
}

void SceneScript::validate() const {
  intrinsics.validate();
  if (frame_count < 1) throw Error("scene: frame_count must be >= 1");
  if (camera_trajectory.empty()) throw Error("scene: camera trajectory missing");
  if (noise.sigma0 < 0 || noise.sigma_quad < 0 || noise.quantization_step < 0)
    throw Error("scene: noise parameters must be >= 0");
  int backgrounds = 0;
  std::set<int> ids;
  for (const ScenePrimitive& p : primitives) {
    if (p.is_background) ++backgrounds;
    if (!ids.insert(p.id).second) throw Error("scene: duplicate primitive id");
    if (p.id < 0 || p.id >= kInvalidMaskId) throw Error("scene: primitive id out of range");
    if (p.group() < 0 || p.group() >= kInvalidMaskId)
      throw Error("scene: mask group out of range");
    if (p.trajectory.empty()) throw Error("scene: primitive has no keyframes");
    if (p.shape == ShapeKind::Mesh && p.triangles.empty())
      throw Error("scene: mesh primitive has no triangles");
  }
  if (backgrounds != 1) throw Error("scene: exactly one primitive must be background");
  for (const ScenePrimitive& p : primitives)
    if (p.mask_group >= 0 && !ids.count(p.mask_group))
      throw Error("scene: mask group must name an existing primitive id");
}

SceneScript SceneScript::parse(std::istream& in) {
  SceneScript script;
  script.intrinsics = Intrinsics{};

  enum class Section { None, Camera, Primitive };
  Section section = Section::None;
  ScenePrimitive* prim = nullptr;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ss(raw);
    std::string word;
    if (!(ss >> word)) continue;

    if (word == "frames") {
      if (!(ss >> script.frame_count)) fail(line_no, "frames <count>");
    } else if (word == "intrinsics") {
      Intrinsics& K = script.intrinsics;
      if (!(ss >> K.fx >> K.fy >> K.cx >> K.cy >> K.width >> K.height >> K.depth_scale))
        fail(line_no, "intrinsics <fx fy cx cy width height depth_scale>");
    } else if (word == "noise") {
      NoiseParams& n = script.noise;
      if (!(ss >> n.sigma0 >> n.sigma_quad >> n.quantization_step >> n.seed))
        fail(line_no, "noise <sigma0 sigma_quad quantization seed>");
    } else if (word == "geometry_spacing") {
      if (!(ss >> script.geometry_spacing)) fail(line_no, "geometry_spacing <meters>");
    } else if (word == "camera") {
      section = Section::Camera;
      prim = nullptr;
    } else if (word == "primitive") {
      int id;
      std::string shape;
      if (!(ss >> id >> shape)) fail(line_no, "primitive <id> <shape> [background]");
      ScenePrimitive p;
      p.id = id;
      if (shape == "plane") p.shape = ShapeKind::Plane;
      else if (shape == "box") p.shape = ShapeKind::Box;
      else if (shape == "sphere") p.shape = ShapeKind::Sphere;
      else if (shape == "mesh") p.shape = ShapeKind::Mesh;
      else fail(line_no, "unknown shape " + shape);
      std::string flag;
      while (ss >> flag) {
        if (flag == "background") p.is_background = true;
        else fail(line_no, "unknown primitive flag " + flag);
      }
      script.primitives.push_back(p);
      prim = &script.primitives.back();
      section = Section::Primitive;
    } else if (word == "group") {
      if (section != Section::Primitive) fail(line_no, "group outside primitive");
      if (!(ss >> prim->mask_group)) fail(line_no, "group <mask id>");
    } else if (word == "extent") {
      if (section != Section::Primitive) fail(line_no, "extent outside primitive");
      Eigen::Vector3d e = prim->extent;
      ss >> e.x();
      if (!(ss >> e.y())) e.y() = e.x();
      if (!(ss >> e.z())) e.z() = e.y();
      prim->extent = e;
    } else if (word == "albedo") {
      if (section != Section::Primitive) fail(line_no, "albedo outside primitive");
      std::string kind;
      ss >> kind;
      Albedo& a = prim->albedo;
      if (kind == "solid") {
        a.kind = Albedo::Kind::Solid;
        if (!(ss >> a.color_a.x() >> a.color_a.y() >> a.color_a.z()))
          fail(line_no, "albedo solid <r g b>");
      } else if (kind == "checker") {
        a.kind = Albedo::Kind::Checker;
        if (!(ss >> a.square >> a.color_a.x() >> a.color_a.y() >> a.color_a.z() >>
              a.color_b.x() >> a.color_b.y() >> a.color_b.z()))
          fail(line_no, "albedo checker <square> <r g b> <r g b>");
      } else {
        fail(line_no, "unknown albedo kind " + kind);
      }
    } else if (word == "tri") {
      if (section != Section::Primitive || prim->shape != ShapeKind::Mesh)
        fail(line_no, "tri outside mesh primitive");
      Triangle t;
      if (!(ss >> t.a.x() >> t.a.y() >> t.a.z() >> t.b.x() >> t.b.y() >> t.b.z() >> t.c.x() >>
            t.c.y() >> t.c.z()))
        fail(line_no, "tri <ax ay az bx by bz cx cy cz>");
      prim->triangles.push_back(t);
    } else if (word == "key") {
      if (section == Section::None) fail(line_no, "key outside camera/primitive");
      Keyframe kf;
      Eigen::Vector3d t;
      if (!(ss >> kf.t >> t.x() >> t.y() >> t.z())) fail(line_no, "key <t> <tx ty tz> ...");
      std::string rot;
      ss >> rot;
      Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
      if (rot == "quat") {
        double qx, qy, qz, qw;
        if (!(ss >> qx >> qy >> qz >> qw)) fail(line_no, "key ... quat <qx qy qz qw>");
        q = Eigen::Quaterniond(qw, qx, qy, qz);
        if (q.norm() < 1e-9) fail(line_no, "zero quaternion");
      } else if (rot == "euler") {
        double ex, ey, ez;
        if (!(ss >> ex >> ey >> ez)) fail(line_no, "key ... euler <ex ey ez> (degrees)");
        q = quat_from_euler_deg(ex, ey, ez);
      } else if (!rot.empty()) {
        fail(line_no, "expected quat or euler, got " + rot);
      }
      kf.pose = pose_from_quat(t, q);
      std::vector<Keyframe>& keys =
          section == Section::Camera ? script.camera_trajectory : prim->trajectory;
      if (!keys.empty() && kf.t <= keys.back().t) fail(line_no, "keyframe times must increase");
      keys.push_back(kf);
    } else {
      fail(line_no, "unknown keyword " + word);
    }
  }

  script.validate();
  return script;
}

SceneScript SceneScript::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scene script " + path.string());
  return parse(in);
}

}  // namespace mf::synth
