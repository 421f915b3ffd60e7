#include <doctest.h>

#include <random>

#include "mf/camera.h"
#include "mf/pyramid.h"
#include "mf/track/tracker.h"
#include "test_helpers.h"

using namespace mf;
using mf::test::model_from_frame;
using mf::test::parse_scene;
using mf::test::room_scene_header;

namespace {

Intrinsics small_intrinsics() {
  Intrinsics K;
  K.fx = 300;
  K.fy = 300;
  K.cx = 159.5;
  K.cy = 119.5;
  K.width = 320;
  K.height = 240;
  return K;
}

std::string camera_key(int t, double x, double y, double z, double yaw_deg = 0) {
  std::ostringstream ss;
  ss << "  key " << t << " " << x << " " << y << " " << z << " euler 0 " << yaw_deg << " 0\n";
  return ss.str();
}

synth::SceneScript room_script(int frames, const std::string& camera_keys,
                               const std::string& extra = "") {
  std::string text = room_scene_header(frames);
  text += "camera\n" + camera_keys;
  text += mf::test::room_background();
  text += extra;
  return parse_scene(text);
}

}  // namespace

TEST_CASE("predict_view splats a single surfel as a disc") {
  Intrinsics K;
  K.fx = 500;
  K.fy = 500;
  K.cx = 320;
  K.cy = 240;
  K.width = 640;
  K.height = 480;

  SurfelModel model;
  Surfel s;
  s.position = {0, 0, 2};
  s.normal = {0, 0, -1};
  s.radius = 0.05;
  s.color = {90, 90, 90};
  model.surfels.push_back(s);

  const PredictedView view = predict_view(model, Se3Pose(), K);
  CHECK(view.depth.at(320, 240) == doctest::Approx(2.0));
  CHECK(view.index.at(320, 240) == 0);
  CHECK(view.intensity.at(320, 240) == doctest::Approx(90.0));

  int valid = 0;
  for (size_t i = 0; i < view.index.size(); ++i)
    if (view.index[i] >= 0) ++valid;
  // Disc of pixel radius fx*r/z = 12.5.
  CHECK(valid > 380);
  CHECK(valid < 540);
  CHECK(view.index.at(320 + 12, 240) == 0);
  CHECK(view.index.at(320 + 14, 240) == -1);
}

TEST_CASE("predict_view depth test and clipping") {
  Intrinsics K = small_intrinsics();
  SurfelModel model;
  Surfel near, far, behind;
  near.position = {0, 0, 1};
  near.normal = far.normal = behind.normal = Eigen::Vector3d(0, 0, -1);
  near.radius = far.radius = behind.radius = 0.02;
  far.position = {0, 0, 2};
  behind.position = {0, 0, -1};
  model.surfels.push_back(far);
  model.surfels.push_back(near);

  const PredictedView view = predict_view(model, Se3Pose(), K);
  CHECK(view.depth.at(159, 119) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(view.index.at(159, 119) == 1);

  SurfelModel only_behind;
  only_behind.surfels.push_back(behind);
  const PredictedView empty = predict_view(only_behind, Se3Pose(), K);
  for (size_t i = 0; i < empty.index.size(); ++i) CHECK(empty.index[i] == -1);
}

TEST_CASE("icp_step is zero on identical geometry") {
  const Intrinsics K = small_intrinsics();
  const auto script = room_script(1, camera_key(0, 0, 0, 0));
  const RgbdFrame frame = synth::render_frame(script, 0).frame;
  const SurfelModel model = model_from_frame(frame, nullptr, -1, K, Se3Pose());
  const Pyramid py = build_pyramid(frame, K, 1);
  const PredictedView view = predict_view(model, Se3Pose(), K);

  TrackerConfig cfg;
  const NormalEquations ne = icp_step(py.levels[0], view, Se3Pose(), cfg);
  CHECK(ne.inliers > 50000);
  CHECK(ne.energy / ne.inliers < 1e-10);
  CHECK(ne.b.norm() / ne.inliers < 1e-5);
}

TEST_CASE("icp_step recovers a 5 mm z-shift of a plane in one step") {
  Intrinsics K = small_intrinsics();
  // Predicted: plane at 2.000 m; live: plane at 2.005 m.
  DepthImage live_d(K.width, K.height, 2.005f);
  ColorImage c(K.width, K.height, Rgb8{100, 100, 100});
  const RgbdFrame live = RgbdFrame::make(0, std::move(c), std::move(live_d));

  DepthImage pred_d(K.width, K.height, 2.0f);
  ColorImage c2(K.width, K.height, Rgb8{100, 100, 100});
  const RgbdFrame pred = RgbdFrame::make(0, std::move(c2), std::move(pred_d));
  const SurfelModel model = model_from_frame(pred, nullptr, -1, K, Se3Pose());

  const Pyramid py = build_pyramid(live, K, 1);
  const PredictedView view = predict_view(model, Se3Pose(), K);
  TrackerConfig cfg;
  const NormalEquations ne = icp_step(py.levels[0], view, Se3Pose(), cfg);
  REQUIRE(ne.inliers > 1000);
  const Vector6d delta = ne.H.ldlt().solve(-ne.b);
  CHECK(delta[2] == doctest::Approx(-0.005).epsilon(0.02));
  CHECK(std::abs(delta[2] + 0.005) < 1e-4);
}

TEST_CASE("icp_step excludes correspondences over the normal gate") {
  const Intrinsics K = small_intrinsics();
  DepthImage d(K.width, K.height, 2.0f);
  ColorImage c(K.width, K.height, Rgb8{100, 100, 100});
  const RgbdFrame live = RgbdFrame::make(0, std::move(c), std::move(d));
  const Pyramid py = build_pyramid(live, K, 1);

  // Hand-built predicted view with normals tilted 45 degrees.
  PredictedView view;
  view.depth = DepthImage(K.width, K.height, 2.0f);
  view.intensity = IntensityImage(K.width, K.height, 100.0f);
  view.normals = NormalImage(K.width, K.height,
                             Eigen::Vector3f(-std::sqrt(0.5f), 0, -std::sqrt(0.5f)));
  view.index = Image<int32_t>(K.width, K.height, 0);

  TrackerConfig cfg;
  cfg.icp_normal_reject_deg = 30;
  const NormalEquations gated = icp_step(py.levels[0], view, Se3Pose(), cfg);
  CHECK(gated.inliers == 0);
  cfg.icp_normal_reject_deg = 60;
  const NormalEquations open = icp_step(py.levels[0], view, Se3Pose(), cfg);
  CHECK(open.inliers > 1000);
}

TEST_CASE("rgb_step is zero on identical frames and ignores textureless areas") {
  const Intrinsics K = small_intrinsics();
  const auto script = room_script(1, camera_key(0, 0, 0, 0));
  const RgbdFrame frame = synth::render_frame(script, 0).frame;
  const SurfelModel model = model_from_frame(frame, nullptr, -1, K, Se3Pose());
  const Pyramid py = build_pyramid(frame, K, 1);
  const PredictedView view = predict_view(model, Se3Pose(), K);

  TrackerConfig cfg;
  const NormalEquations ne = rgb_step(py.levels[0], view, Se3Pose(), cfg);
  CHECK(ne.inliers > 1000);
  CHECK(ne.energy / ne.inliers < 1e-4);

  // Constant-intensity scene contributes nothing.
  DepthImage d(K.width, K.height, 2.0f);
  ColorImage c(K.width, K.height, Rgb8{100, 100, 100});
  const RgbdFrame flat = RgbdFrame::make(0, std::move(c), std::move(d));
  const SurfelModel flat_model = model_from_frame(flat, nullptr, -1, K, Se3Pose());
  const Pyramid flat_py = build_pyramid(flat, K, 1);
  const PredictedView flat_view = predict_view(flat_model, Se3Pose(), K);
  const NormalEquations flat_ne = rgb_step(flat_py.levels[0], flat_view, Se3Pose(), cfg);
  CHECK(flat_ne.inliers == 0);
  CHECK(flat_ne.energy == 0.0);
}

TEST_CASE("rgb term alone recovers a small lateral shift") {
  const Intrinsics K = small_intrinsics();
  // Checkered wall straight ahead; camera shifted laterally by 2 px worth of
  // metric translation: dx = 2 * z / fx at z = 1.8.
  const double dx = 2.0 * 1.8 / K.fx;
  const auto script0 = room_script(1, camera_key(0, 0, 0, 0));
  const auto script1 = room_script(1, camera_key(0, dx, 0, 0));
  const RgbdFrame f0 = synth::render_frame(script0, 0).frame;
  const RgbdFrame f1 = synth::render_frame(script1, 0).frame;

  const SurfelModel model = model_from_frame(f0, nullptr, -1, K, Se3Pose());
  const Pyramid live = build_pyramid(f1, K, 1);
  const PredictedView view = predict_view(model, Se3Pose(), K);

  TrackerConfig cfg;
  Se3Pose warp;
  for (int iter = 0; iter < 20; ++iter) {
    const NormalEquations ne = rgb_step(live.levels[0], view, warp, cfg);
    REQUIRE(ne.inliers > 500);
    const Vector6d delta = ne.H.ldlt().solve(-ne.b);
    warp = se3_exp(delta) * warp;
    if (delta.norm() < 1e-9) break;
  }
  // warp maps live points onto the prediction: expect +dx along x.
  CHECK(warp.translation().x() == doctest::Approx(dx).epsilon(0.10));
  CHECK(std::abs(warp.translation().y()) < 0.002);
}

TEST_CASE("track_model is exact on identical frames") {
  const Intrinsics K = small_intrinsics();
  const auto script = room_script(1, camera_key(0, 0, 0, 0));
  const RgbdFrame frame = synth::render_frame(script, 0).frame;
  const SurfelModel model = model_from_frame(frame, nullptr, -1, K, Se3Pose());
  const Pyramid py = build_pyramid(frame, K, 4);

  TrackerConfig cfg;
  const TrackResult res = track_model(model, py, Se3Pose(), cfg);
  CHECK(res.converged);
  CHECK(res.pose.translation().norm() < 1e-6);
  CHECK(res.pose.angle() < 1e-6);
}

TEST_CASE("track_model recovers a 1 cm / 1 degree camera motion") {
  const Intrinsics K = small_intrinsics();
  const auto script0 = room_script(1, camera_key(0, 0, 0, 0));
  const auto script1 = room_script(1, camera_key(0, 0.008, 0.004, 0.003, 1.0));
  const RgbdFrame f0 = synth::render_frame(script0, 0).frame;
  const RgbdFrame f1 = synth::render_frame(script1, 0).frame;
  const Se3Pose cam1 = parse_scene(room_scene_header(1) + "camera\n" +
                                   camera_key(0, 0.008, 0.004, 0.003, 1.0) +
                                   mf::test::room_background())
                           .camera_pose_at(0);

  const SurfelModel model = model_from_frame(f0, nullptr, -1, K, Se3Pose());
  const Pyramid live = build_pyramid(f1, K, 4);
  TrackerConfig cfg;
  const TrackResult res = track_model(model, live, Se3Pose(), cfg);
  REQUIRE(res.converged);

  // Model frame == world (camera 0); expected pose maps world -> camera 1.
  const Se3Pose expected = cam1.inverse();
  const Se3Pose err = expected.inverse() * res.pose;
  CHECK(err.translation().norm() < 0.0005);
  CHECK(err.angle() * 180.0 / M_PI < 0.05);
}

TEST_CASE("track_model follows an object moved 2 cm under a static camera") {
  const Intrinsics K = small_intrinsics();
  const std::string box0 = R"(primitive 1 box
  extent 0.14 0.14 0.14
  albedo checker 0.045 235 120 40 30 60 160
  key 0 -0.1 0.28 1.15 euler 20 30 0
)";
  const std::string box1 = R"(primitive 1 box
  extent 0.14 0.14 0.14
  albedo checker 0.045 235 120 40 30 60 160
  key 0 -0.08 0.28 1.15 euler 20 30 0
)";
  const auto s0 = room_script(1, camera_key(0, 0, 0, 0), box0);
  const auto s1 = room_script(1, camera_key(0, 0, 0, 0), box1);
  const synth::RenderedFrame r0 = synth::render_frame(s0, 0);
  const synth::RenderedFrame r1 = synth::render_frame(s1, 0);

  const SurfelModel object = model_from_frame(r0.frame, &r0.gt_masks, 1, K, Se3Pose());
  const SurfelModel background = model_from_frame(r0.frame, &r0.gt_masks, 0, K, Se3Pose());

  const Pyramid live = build_pyramid(r1.frame, K, 4);
  TrackerConfig cfg;

  const TrackResult obj_res = track_model(object, live, Se3Pose(), cfg);
  REQUIRE(obj_res.inlier_count >= cfg.min_valid_correspondences);
  // Object moved +2 cm in x; the model-to-camera pose must absorb it.
  CHECK(obj_res.pose.translation().x() == doctest::Approx(0.02).epsilon(0.05));
  CHECK(obj_res.pose.translation().tail<2>().norm() < 0.003);

  const TrackResult bg_res = track_model(background, live, Se3Pose(), cfg);
  CHECK(bg_res.pose.translation().norm() < 0.001);
  CHECK(bg_res.pose.angle() * 180 / M_PI < 0.05);
}

TEST_CASE("textureless scenes make lambda irrelevant") {
  const Intrinsics K = small_intrinsics();
  DepthImage d(K.width, K.height, 0.0f);
  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x) {
      const double rx = (x - K.cx) / K.fx, ry = (y - K.cy) / K.fy;
      d.at(x, y) = static_cast<float>(2.0 / (1.0 + 0.3 * rx + 0.2 * ry));
    }
  ColorImage c(K.width, K.height, Rgb8{120, 120, 120});
  const RgbdFrame f = RgbdFrame::make(0, std::move(c), std::move(d));
  const SurfelModel model = model_from_frame(f, nullptr, -1, K, Se3Pose());
  const Pyramid py = build_pyramid(f, K, 4);

  TrackerConfig with_rgb;
  with_rgb.lambda = 0.1;
  TrackerConfig icp_only;
  icp_only.lambda = 0.0;
  const TrackResult a = track_model(model, py, Se3Pose(), with_rgb);
  const TrackResult b = track_model(model, py, Se3Pose(), icp_only);
  CHECK(a.e_rgb == 0.0);
  CHECK((a.pose.translation() - b.pose.translation()).norm() < 1e-12);
  CHECK((a.pose.rotation() - b.pose.rotation()).norm() < 1e-12);
}

TEST_CASE("track_model is invariant to surfel order") {
  const Intrinsics K = small_intrinsics();
  const auto script0 = room_script(1, camera_key(0, 0, 0, 0));
  const auto script1 = room_script(1, camera_key(0, 0.005, -0.002, 0.004, 0.5));
  const RgbdFrame f0 = synth::render_frame(script0, 0).frame;
  const RgbdFrame f1 = synth::render_frame(script1, 0).frame;

  SurfelModel model = model_from_frame(f0, nullptr, -1, K, Se3Pose());
  const Pyramid live = build_pyramid(f1, K, 4);
  TrackerConfig cfg;
  const TrackResult a = track_model(model, live, Se3Pose(), cfg);

  std::mt19937 rng(11);
  std::shuffle(model.surfels.begin(), model.surfels.end(), rng);
  const TrackResult b = track_model(model, live, Se3Pose(), cfg);

  CHECK((a.pose.translation() - b.pose.translation()).norm() < 1e-6);
  CHECK((a.pose.rotation() - b.pose.rotation()).norm() < 1e-6);
}

TEST_CASE("insufficient overlap returns the prior pose unconverged") {
  const Intrinsics K = small_intrinsics();
  SurfelModel tiny;
  for (int i = 0; i < 10; ++i) {
    Surfel s;
    s.position = {0.01 * i, 0, 1.5};
    s.normal = {0, 0, -1};
    s.radius = 0.004;
    tiny.surfels.push_back(s);
  }
  const auto script = room_script(1, camera_key(0, 0, 0, 0));
  const RgbdFrame frame = synth::render_frame(script, 0).frame;
  const Pyramid py = build_pyramid(frame, K, 4);

  TrackerConfig cfg;
  const Se3Pose prior(Eigen::Matrix3d::Identity(), {0.3, 0.2, 0.1});
  const TrackResult res = track_model(tiny, py, prior, cfg);
  CHECK(!res.converged);
  CHECK(res.inlier_count < cfg.min_valid_correspondences);
  CHECK((res.pose.translation() - prior.translation()).norm() == 0.0);
}

TEST_CASE("analytic Jacobians match central finite differences") {
  // Per-correspondence check: freeze the association, then differentiate the
  // residual model numerically and compare against the accumulated Jacobian.
  Intrinsics K;
  K.fx = 240;
  K.fy = 240;
  K.cx = 79.5;
  K.cy = 59.5;
  K.width = 160;
  K.height = 120;

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);

  int icp_checked = 0, rgb_checked = 0;
  for (int config = 0; config < 25; ++config) {
    // Random gently-curved textured surface.
    const double a1 = 0.2 * u(rng), a2 = 0.2 * u(rng), amp = 0.05 * u(rng);
    DepthImage d(K.width, K.height, 0.0f);
    ColorImage c(K.width, K.height);
    for (int y = 0; y < K.height; ++y)
      for (int x = 0; x < K.width; ++x) {
        const double rx = (x - K.cx) / K.fx, ry = (y - K.cy) / K.fy;
        d.at(x, y) = static_cast<float>(1.8 / (1.0 + a1 * rx + a2 * ry) +
                                        amp * std::sin(7 * rx) * std::cos(6 * ry));
        const uint8_t g = static_cast<uint8_t>(
            128 + 90 * std::sin(25 * rx + 2 * a1) * std::cos(21 * ry + a2));
        c.at(x, y) = {g, g, g};
      }
    const RgbdFrame frame = RgbdFrame::make(0, std::move(c), std::move(d));
    const SurfelModel model = model_from_frame(frame, nullptr, -1, K, Se3Pose());
    const Pyramid py = build_pyramid(frame, K, 1);
    const PredictedView view = predict_view(model, Se3Pose(), K);

    Vector6d w;
    w << 0.002 * u(rng), 0.002 * u(rng), 0.002 * u(rng), 0.001 * u(rng), 0.001 * u(rng),
        0.001 * u(rng);
    const Se3Pose warp = se3_exp(w);

    TrackerConfig cfg;
    std::vector<Correspondence> icp_dump, rgb_dump;
    icp_step(py.levels[0], view, warp, cfg, &icp_dump);
    rgb_step(py.levels[0], view, warp, cfg, &rgb_dump);
    REQUIRE(icp_dump.size() > 500);
    REQUIRE(rgb_dump.size() > 500);

    const double h = 1e-6;
    for (size_t pick = 0; pick < icp_dump.size(); pick += icp_dump.size() / 40 + 1) {
      const Correspondence& corr = icp_dump[pick];
      for (int k = 0; k < 6; ++k) {
        Vector6d e = Vector6d::Zero();
        e[k] = h;
        auto residual = [&](const Se3Pose& wp) {
          return corr.normal.dot(corr.v_pred - wp * corr.v_live);
        };
        const double fd =
            (residual(se3_exp(e) * warp) - residual(se3_exp(-e) * warp)) / (2 * h);
        const double scale = std::max({std::abs(fd), std::abs(corr.J[k]), 1e-6});
        CHECK(std::abs(fd - corr.J[k]) / scale < 1e-4);
        ++icp_checked;
      }
    }

    for (size_t pick = 0; pick < rgb_dump.size(); pick += rgb_dump.size() / 40 + 1) {
      const Correspondence& corr = rgb_dump[pick];
      // Skip samples whose warped pixel is too close to the pixel lattice,
      // where the bilinear surface is not differentiable.
      const Eigen::Vector3d q = warp * corr.v_live;
      const Eigen::Vector2d uu = project_unchecked(q, K);
      const double fx = uu.x() - std::floor(uu.x());
      const double fy = uu.y() - std::floor(uu.y());
      if (fx < 0.05 || fx > 0.95 || fy < 0.05 || fy > 0.95) continue;

      auto residual = [&](const Se3Pose& wp) {
        const Eigen::Vector3d qq = wp * corr.v_live;
        const Eigen::Vector2d uv = project_unchecked(qq, K);
        const double ip = sample_predicted_intensity(view, uv.x(), uv.y());
        return (corr.i_live - ip) / 255.0;
      };
      for (int k = 0; k < 6; ++k) {
        Vector6d e = Vector6d::Zero();
        e[k] = h;
        const double fd =
            (residual(se3_exp(e) * warp) - residual(se3_exp(-e) * warp)) / (2 * h);
        if (std::isnan(fd)) continue;
        // Absolute floor at 1e-4 of the typical Jacobian magnitude; entries
        // at exactly zero gradient otherwise amplify FD round-off.
        const double scale = std::max({std::abs(fd), std::abs(corr.J[k]), 1e-4});
        CHECK(std::abs(fd - corr.J[k]) / scale < 1e-4);
        ++rgb_checked;
      }
    }
  }
  CHECK(icp_checked >= 100 * 6);
  CHECK(rgb_checked >= 100 * 6);
}
