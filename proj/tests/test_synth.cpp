#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mf/error.h"
#include "mf/io/png_io.h"
#include "mf/synth/export.h"
#include "mf/synth/render.h"
#include "mf/synth/scene.h"

using namespace mf;
using namespace mf::synth;

namespace {

const char* kPlaneScene = R"(
frames 3
intrinsics 500 500 159.5 119.5 320 240 0.001
camera
  key 0 0 0 0
primitive 0 plane background
  extent 5 5
  albedo solid 200 200 200
  key 0 0 0 2 euler 0 180 0
)";

const char* kSphereScene = R"(
frames 2
intrinsics 500 500 159.5 119.5 320 240 0.001
camera
  key 0 0 0 0
primitive 0 plane background
  extent 5 5
  key 0 0 0 4 euler 0 180 0
primitive 1 sphere
  extent 0.2
  key 0 0 0 1
)";

SceneScript parse_string(const char* text) {
  std::istringstream ss(text);
  return SceneScript::parse(ss);
}

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "mf_test" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("fronto-parallel plane renders constant depth") {
  const SceneScript script = parse_string(kPlaneScene);
  const RenderedFrame rf = render_frame(script, 0);
  for (int y = 0; y < 240; y += 17)
    for (int x = 0; x < 320; x += 17) {
      CHECK(rf.frame.depth.at(x, y) == doctest::Approx(2.0).epsilon(1e-9));
      CHECK(rf.gt_masks.at(x, y) == 0);
    }
}

TEST_CASE("sphere on the optical axis has min depth at the principal point") {
  const SceneScript script = parse_string(kSphereScene);
  const RenderedFrame rf = render_frame(script, 0);
  // The principal point sits between pixels at 159.5; the straddling pixels
  // are a fraction of a pixel off-axis.
  const float d = rf.frame.depth.at(159, 119);
  CHECK(d == doctest::Approx(0.8).epsilon(1e-4));
  CHECK(rf.gt_masks.at(159, 119) == 1);
  float min_d = 1e9f;
  for (size_t i = 0; i < rf.frame.depth.size(); ++i)
    if (rf.frame.depth[i] > 0) min_d = std::min(min_d, rf.frame.depth[i]);
  CHECK(min_d == doctest::Approx(0.8).epsilon(1e-4));
}

TEST_CASE("z-buffer picks the closer primitive everywhere") {
  const SceneScript script = parse_string(kSphereScene);
  const RenderedFrame rf = render_frame(script, 0);
  for (int y = 0; y < 240; ++y)
    for (int x = 0; x < 320; ++x) {
      const uint8_t id = rf.gt_masks.at(x, y);
      const float d = rf.frame.depth.at(x, y);
      if (id == 1) CHECK(d < 1.21f);
      if (id == 0) CHECK(d == doctest::Approx(4.0).epsilon(0.3));
    }
}

TEST_CASE("masks cover exactly the valid-depth pixels") {
  SceneScript script = parse_string(kSphereScene);
  script.primitives[0].extent = {0.5, 0.5, 0};  // shrink so rays can miss
  const RenderedFrame rf = render_frame(script, 0);
  for (size_t i = 0; i < rf.frame.depth.size(); ++i) {
    if (rf.frame.depth[i] > 0)
      CHECK(rf.gt_masks[i] != kInvalidMaskId);
    else
      CHECK(rf.gt_masks[i] == kInvalidMaskId);
  }
}

TEST_CASE("apply_noise is a no-op with zero params and deterministic with a seed") {
  const SceneScript script = parse_string(kPlaneScene);
  const RenderedFrame rf = render_frame(script, 0);

  NoiseParams zero;
  const RgbdFrame same = apply_noise(rf.frame, zero);
  CHECK(same.depth == rf.frame.depth);

  NoiseParams noisy;
  noisy.sigma0 = 0.002;
  noisy.seed = 42;
  const RgbdFrame a = apply_noise(rf.frame, noisy);
  const RgbdFrame b = apply_noise(rf.frame, noisy);
  CHECK(a.depth == b.depth);
  CHECK(a.color == rf.frame.color);

  noisy.seed = 43;
  const RgbdFrame c = apply_noise(rf.frame, noisy);
  CHECK(!(c.depth == a.depth));
}

TEST_CASE("apply_noise sample statistics match the model") {
  const SceneScript script = parse_string(kPlaneScene);
  const RenderedFrame rf = render_frame(script, 0);
  NoiseParams noisy;
  noisy.sigma0 = 0.002;
  noisy.seed = 7;
  const RgbdFrame out = apply_noise(rf.frame, noisy);

  double sum = 0, sum2 = 0;
  size_t n = 0;
  for (size_t i = 0; i < out.depth.size(); ++i) {
    if (out.depth[i] <= 0) continue;
    sum += out.depth[i];
    sum2 += static_cast<double>(out.depth[i]) * out.depth[i];
    ++n;
  }
  REQUIRE(n > 10000);
  const double mean = sum / n;
  const double stddev = std::sqrt(sum2 / n - mean * mean);
  CHECK(stddev > 0.0016);
  CHECK(stddev < 0.0024);
  CHECK(mean == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("rendering is deterministic") {
  SceneScript script = parse_string(kSphereScene);
  script.noise.sigma0 = 0.002;
  script.noise.quantization_step = 0.001;
  script.noise.seed = 5;
  const RenderedFrame a = render_frame(script, 1);
  const RenderedFrame b = render_frame(script, 1);
  CHECK(a.frame.depth == b.frame.depth);
  CHECK(a.frame.color == b.frame.color);
  CHECK(a.gt_masks == b.gt_masks);
}

TEST_CASE("trajectory interpolation is linear in translation") {
  std::vector<Keyframe> keys;
  keys.push_back({0, Se3Pose(Eigen::Matrix3d::Identity(), {0, 0, 0})});
  keys.push_back({10, Se3Pose(Eigen::Matrix3d::Identity(), {1, 0, 0})});
  const Se3Pose mid = interpolate_pose(keys, 5);
  CHECK(mid.translation().isApprox(Eigen::Vector3d(0.5, 0, 0)));
  CHECK(interpolate_pose(keys, -3).translation().norm() == 0.0);
  CHECK(interpolate_pose(keys, 99).translation().x() == doctest::Approx(1.0));
}

TEST_CASE("scene validation rejects bad scripts") {
  CHECK_THROWS_AS(parse_string("frames 0\n"), Error);
  const char* no_bg = R"(
frames 1
intrinsics 500 500 159.5 119.5 320 240 0.001
camera
  key 0 0 0 0
primitive 0 plane
  key 0 0 0 2
)";
  CHECK_THROWS_AS(parse_string(no_bg), Error);
  const char* dup = R"(
frames 1
intrinsics 500 500 159.5 119.5 320 240 0.001
camera
  key 0 0 0 0
primitive 0 plane background
  key 0 0 0 2
primitive 0 box
  key 0 0 0 1
)";
  CHECK_THROWS_AS(parse_string(dup), Error);
}

TEST_CASE("export writes the documented layout and round-trips depth") {
  SceneScript script = parse_string(kSphereScene);
  script.frame_count = 4;
  script.noise.quantization_step = 0.001;  // exercise quantized export
  const auto dir = temp_dir("export");
  const ExportManifest manifest = export_sequence(script, dir);

  int depth_count = 0, color_count = 0, mask_count = 0, traj_count = 0, geo_count = 0;
  for (const auto& rel : manifest.files) {
    CHECK(std::filesystem::exists(dir / rel));
    const std::string top = rel.begin()->string();
    if (top == "depth") ++depth_count;
    if (top == "color") ++color_count;
    if (top == "mask") ++mask_count;
    if (top == "traj") ++traj_count;
    if (top == "geometry") ++geo_count;
  }
  CHECK(depth_count == 4);
  CHECK(color_count == 4);
  CHECK(mask_count == 4);
  CHECK(traj_count == 3);  // camera + 2 bodies
  CHECK(geo_count == 2);

  // Depth round-trip within the 1 mm gray level.
  const RenderedFrame rf = render_frame(script, 0);
  const Image<uint16_t> raw = read_png_gray16(dir / "depth" / "000000.png");
  REQUIRE(raw.size() == rf.frame.depth.size());
  float max_err = 0;
  for (size_t i = 0; i < raw.size(); ++i) {
    const float d = rf.frame.depth[i];
    if (d <= 0)
      CHECK(raw[i] == 0);
    else
      max_err = std::max(max_err, std::abs(raw[i] / 1000.0f - d));
  }
  CHECK(max_err <= 0.0005f + 1e-9f);

  // Static primitive trajectory: identical pose rows.
  std::ifstream traj(dir / "traj" / "obj1.txt");
  std::string first, line;
  std::getline(traj, first);
  int rows = 1;
  const std::string tail = first.substr(first.find(' ') + 1);
  while (std::getline(traj, line)) {
    CHECK(line.substr(line.find(' ') + 1) == tail);
    ++rows;
  }
  CHECK(rows == 4);
}

TEST_CASE("ground-truth masks reproject into the primitive silhouette") {
  const char* moving = R"(
frames 5
intrinsics 500 500 159.5 119.5 320 240 0.001
camera
  key 0 0 0 0
primitive 0 plane background
  extent 5 5
  key 0 0 0 4 euler 0 180 0
primitive 1 sphere
  extent 0.2
  key 0 -0.3 0 1.2
  key 4 0.3 0.1 1.4
)";
  const SceneScript script = parse_string(moving);
  for (int t = 0; t < 5; ++t) {
    const RenderedFrame rf = render_frame(script, t);
    const Se3Pose world_from_sphere = rf.gt_poses[1].second;
    const Se3Pose sphere_from_cam = world_from_sphere.inverse() * rf.camera_pose;
    size_t inside = 0, total = 0;
    for (int y = 0; y < 240; y += 3)
      for (int x = 0; x < 320; x += 3) {
        if (rf.gt_masks.at(x, y) != 1) continue;
        ++total;
        const double d = rf.frame.depth.at(x, y);
        const Eigen::Vector3d p_cam((x - 159.5) / 500 * d, (y - 119.5) / 500 * d, d);
        const Eigen::Vector3d p_local = sphere_from_cam * p_cam;
        if (std::abs(p_local.norm() - 0.2) < 1e-6) ++inside;
      }
    REQUIRE(total > 50);
    CHECK(static_cast<double>(inside) / total >= 0.99);
  }
}

TEST_CASE("box interior renders as a room") {
  const char* room = R"(
frames 1
intrinsics 500 500 159.5 119.5 320 240 0.001
camera
  key 0 0 0 0
primitive 0 box background
  extent 2 2 3
  albedo checker 0.2 220 220 220 40 40 40
  key 0 0 0 0
)";
  const SceneScript script = parse_string(room);
  const RenderedFrame rf = render_frame(script, 0);
  // Camera at the box center looking +z: every pixel hits an interior face.
  for (size_t i = 0; i < rf.frame.depth.size(); ++i) {
    CHECK(rf.frame.depth[i] > 0);
    CHECK(rf.gt_masks[i] == 0);
  }
  CHECK(rf.frame.depth.at(159, 119) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("surface sampling covers shapes at the requested spacing") {
  ScenePrimitive box;
  box.shape = ShapeKind::Box;
  box.extent = {0.1, 0.1, 0.1};
  const auto pts = sample_surface(box, 0.01);
  CHECK(pts.size() > 6 * 20 * 20 / 2);
  for (const auto& p : pts) {
    CHECK(p.cwiseAbs().maxCoeff() == doctest::Approx(0.1).epsilon(1e-9));
  }

  ScenePrimitive sphere;
  sphere.shape = ShapeKind::Sphere;
  sphere.extent = {0.2, 0, 0};
  const auto sp = sample_surface(sphere, 0.01);
  CHECK(sp.size() > 1000);
  for (const auto& p : sp) CHECK(p.norm() == doctest::Approx(0.2).epsilon(1e-9));
}
