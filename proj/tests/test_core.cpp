#include <doctest.h>

#include <random>

#include "mf/camera.h"
#include "mf/error.h"
#include "mf/frame.h"
#include "mf/normals.h"
#include "mf/pyramid.h"
#include "mf/se3.h"

using namespace mf;

namespace {

Intrinsics test_intrinsics() {
  Intrinsics K;
  K.fx = 500;
  K.fy = 500;
  K.cx = 320;
  K.cy = 240;
  K.width = 640;
  K.height = 480;
  return K;
}

RgbdFrame plane_frame(const Intrinsics& K, float z, int t = 0) {
  DepthImage depth(K.width, K.height, z);
  ColorImage color(K.width, K.height, Rgb8{128, 128, 128});
  return RgbdFrame::make(t, std::move(color), std::move(depth));
}

}  // namespace

TEST_CASE("project maps camera points to pixels") {
  const Intrinsics K = test_intrinsics();
  CHECK(project({0, 0, 1}, K).isApprox(Eigen::Vector2d(320, 240)));
  CHECK(project({0.1, 0, 1}, K).isApprox(Eigen::Vector2d(370, 240)));
  CHECK(project({0.3, -0.2, 2}, K).isApprox(Eigen::Vector2d(395, 190)));
  CHECK_THROWS_AS(project({0, 0, -1}, K), Error);
  CHECK_THROWS_AS(project({0, 0, 0}, K), Error);
}

TEST_CASE("backproject inverts project") {
  const Intrinsics K = test_intrinsics();
  CHECK(backproject({320, 240}, 2, K).isApprox(Eigen::Vector3d(0, 0, 2)));
  CHECK(backproject({420, 240}, 1, K).isApprox(Eigen::Vector3d(0.2, 0, 1)));
  CHECK_THROWS_AS(backproject({320, 240}, 0, K), Error);
  CHECK_THROWS_AS(backproject({-10, 240}, 1, K), Error);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ux(0, K.width - 1), uy(0, K.height - 1), ud(0.2, 8.0);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector2d u(ux(rng), uy(rng));
    const double d = ud(rng);
    const Eigen::Vector3d p = backproject(u, d, K);
    CHECK(p.z() == doctest::Approx(d));
    CHECK((project(p, K) - u).norm() < 1e-9);
  }
}

TEST_CASE("se3_exp identity, translation and rotation") {
  CHECK(se3_exp(Vector6d::Zero()).rotation().isIdentity(1e-12));
  CHECK(se3_exp(Vector6d::Zero()).translation().norm() == 0.0);

  Vector6d t;
  t << 1, 0, 0, 0, 0, 0;
  const Se3Pose pure_t = se3_exp(t);
  CHECK(pure_t.rotation().isIdentity(1e-12));
  CHECK(pure_t.translation().isApprox(Eigen::Vector3d(1, 0, 0)));

  Vector6d w;
  w << 0, 0, 0, 0, 0, M_PI / 2;
  const Se3Pose rot = se3_exp(w);
  CHECK((rot * Eigen::Vector3d(1, 0, 0) - Eigen::Vector3d(0, 1, 0)).norm() < 1e-9);
}

TEST_CASE("se3_exp small-angle matches first order") {
  Vector6d tw;
  tw << 1e-6, -2e-6, 3e-6, -1e-6, 2e-6, -3e-6;
  const Se3Pose p = se3_exp(tw);
  const Eigen::Matrix3d first_order = Eigen::Matrix3d::Identity() + skew(tw.tail<3>());
  CHECK((p.rotation() - first_order).norm() < 1e-11);
  CHECK((p.translation() - tw.head<3>()).norm() < 1e-11);
}

TEST_CASE("compose and invert") {
  const Se3Pose a = se3_exp((Vector6d() << 0.1, -0.2, 0.3, 0.2, -0.1, 0.4).finished());
  CHECK((compose(Se3Pose(), a).rotation() - a.rotation()).norm() < 1e-12);

  const Se3Pose ti(Eigen::Matrix3d::Identity(), Eigen::Vector3d(1, 2, 3));
  CHECK(invert(ti).translation().isApprox(Eigen::Vector3d(-1, -2, -3)));

  Vector6d zq;
  zq << 0, 0, 0, 0, 0, M_PI / 2;
  const Se3Pose fwd = se3_exp(zq);
  const Se3Pose id = compose(fwd, invert(fwd));
  CHECK(id.rotation().isIdentity(1e-9));
  CHECK(id.translation().norm() < 1e-9);

  // Associativity.
  const Se3Pose b = se3_exp((Vector6d() << -0.3, 0.1, 0.2, -0.2, 0.3, 0.1).finished());
  const Se3Pose c = se3_exp((Vector6d() << 0.2, 0.2, -0.1, 0.1, 0.1, -0.3).finished());
  const Se3Pose lhs = compose(compose(a, b), c);
  const Se3Pose rhs = compose(a, compose(b, c));
  CHECK((lhs.rotation() - rhs.rotation()).norm() < 1e-9);
  CHECK((lhs.translation() - rhs.translation()).norm() < 1e-9);
}

TEST_CASE("long compose chains stay orthonormal") {
  const Se3Pose step = se3_exp((Vector6d() << 0.001, 0, 0, 0.0, 0.001, 0.002).finished());
  Se3Pose acc;
  for (int i = 0; i < 5000; ++i) acc = acc * step;
  CHECK(acc.orthonormality_error() < 1e-9);
  CHECK(acc.rotation().determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("compute_normals on a fronto-parallel plane") {
  const Intrinsics K = test_intrinsics();
  const RgbdFrame f = plane_frame(K, 2.0f);
  const NormalImage n = compute_normals(f.depth, K);
  int checked = 0;
  for (int y = 10; y < K.height - 10; y += 20)
    for (int x = 10; x < K.width - 10; x += 20) {
      REQUIRE(normal_valid(n.at(x, y)));
      CHECK((n.at(x, y).cast<double>() - Eigen::Vector3d(0, 0, -1)).norm() < 1e-3);
      ++checked;
    }
  CHECK(checked > 100);
}

TEST_CASE("compute_normals on a 45-degree tilted plane") {
  const Intrinsics K = test_intrinsics();
  // Plane through (0,0,2) with normal (-1,0,-1)/sqrt(2): z = 2 - x.
  DepthImage depth(K.width, K.height, 0.0f);
  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x) {
      // Solve z from the ray equation: p = ((x-cx)/fx, (y-cy)/fy, 1) * z.
      const double rx = (x - K.cx) / K.fx;
      const double z = 2.0 / (1.0 + rx);
      if (z > 0) depth.at(x, y) = static_cast<float>(z);
    }
  const NormalImage n = compute_normals(depth, K);
  const Eigen::Vector3d expected = Eigen::Vector3d(-1, 0, -1).normalized();
  for (int y = 100; y < K.height - 100; y += 40)
    for (int x = 100; x < K.width - 100; x += 40) {
      REQUIRE(normal_valid(n.at(x, y)));
      CHECK((n.at(x, y).cast<double>() - expected).norm() < 1e-2);
    }
}

TEST_CASE("compute_normals invalidates hole borders") {
  const Intrinsics K = test_intrinsics();
  RgbdFrame f = plane_frame(K, 2.0f);
  f.depth.at(100, 100) = 0;  // hole
  const NormalImage n = compute_normals(f.depth, K);
  CHECK(!normal_valid(n.at(100, 100)));
  CHECK(!normal_valid(n.at(99, 100)));
  CHECK(!normal_valid(n.at(101, 100)));
  CHECK(!normal_valid(n.at(100, 99)));
  CHECK(!normal_valid(n.at(100, 101)));
  CHECK(normal_valid(n.at(98, 100)));
}

TEST_CASE("pyramid dimensions and constant intensity") {
  const Intrinsics K = test_intrinsics();
  const RgbdFrame f = plane_frame(K, 2.0f);
  const Pyramid py = build_pyramid(f, K, 4);
  REQUIRE(py.level_count() == 4);
  CHECK(py.levels[0].depth.width() == 640);
  CHECK(py.levels[1].depth.width() == 320);
  CHECK(py.levels[2].depth.width() == 160);
  CHECK(py.levels[3].depth.width() == 80);
  CHECK(py.levels[3].depth.height() == 60);
  for (const PyramidLevel& lv : py.levels)
    for (size_t i = 0; i < lv.intensity.size(); ++i)
      CHECK(lv.intensity[i] == doctest::Approx(128.0));
}

TEST_CASE("pyramid depth downsampling uses the median of valid pixels") {
  const Intrinsics K = test_intrinsics();
  RgbdFrame f = plane_frame(K, 1.0f);
  f.depth.at(0, 0) = 2.0f;
  f.depth.at(1, 0) = 2.0f;
  f.depth.at(0, 1) = 0.0f;
  f.depth.at(1, 1) = 2.2f;
  const Pyramid py = build_pyramid(f, K, 2);
  CHECK(py.levels[1].depth.at(0, 0) == doctest::Approx(2.0));

  // A block of all-invalid depth stays invalid.
  RgbdFrame g = plane_frame(K, 1.0f);
  g.depth.at(10, 10) = g.depth.at(11, 10) = g.depth.at(10, 11) = g.depth.at(11, 11) = 0.0f;
  const Pyramid py2 = build_pyramid(g, K, 2);
  CHECK(py2.levels[1].depth.at(5, 5) == 0.0f);
}

TEST_CASE("pyramid intrinsics reproject consistently across levels") {
  const Intrinsics K = test_intrinsics();
  const RgbdFrame f = plane_frame(K, 2.0f);
  const Pyramid py = build_pyramid(f, K, 4);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ux(2, K.width - 3), uy(2, K.height - 3);
  for (int k = 0; k + 1 < py.level_count(); ++k) {
    const Intrinsics& Ka = py.levels[k].intrinsics;
    const Intrinsics& Kb = py.levels[k + 1].intrinsics;
    for (int i = 0; i < 50; ++i) {
      const double sx = ux(rng) / (1 << k), sy = uy(rng) / (1 << k);
      const Eigen::Vector3d p = backproject_unchecked(sx, sy, 2.0, Ka);
      const Eigen::Vector2d u_half = project_unchecked(p, Kb);
      // Pixel (x,y) at level k covers pixel ((x-0.5)/2, ...) at level k+1.
      const Eigen::Vector2d expected((sx - 0.5) / 2.0, (sy - 0.5) / 2.0);
      CHECK((u_half - expected).norm() < 0.5);
    }
  }
}

TEST_CASE("pyramid rejects too-small images") {
  Intrinsics K = test_intrinsics();
  K.width = 32;
  K.height = 32;
  K.cx = 16;
  K.cy = 16;
  const RgbdFrame f = plane_frame(K, 1.0f);
  CHECK_THROWS_AS(build_pyramid(f, K, 4), Error);
  CHECK_NOTHROW(build_pyramid(f, K, 3));
}

TEST_CASE("RgbdFrame intensity is the channel mean") {
  ColorImage color(4, 4, Rgb8{10, 20, 40});
  DepthImage depth(4, 4, 1.0f);
  const RgbdFrame f = RgbdFrame::make(0, std::move(color), std::move(depth));
  for (size_t i = 0; i < f.intensity.size(); ++i)
    CHECK(f.intensity[i] == doctest::Approx((10 + 20 + 40) / 3.0));
}

TEST_CASE("intrinsics invariants enforced") {
  Intrinsics K = test_intrinsics();
  CHECK_NOTHROW(K.validate());
  K.fx = -1;
  CHECK_THROWS_AS(K.validate(), Error);
  K = test_intrinsics();
  K.cx = K.width;
  CHECK_THROWS_AS(K.validate(), Error);
  K = test_intrinsics();
  K.depth_scale = 0;
  CHECK_THROWS_AS(K.validate(), Error);
}
