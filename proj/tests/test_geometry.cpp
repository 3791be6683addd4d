#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "km3d/error.hpp"
#include "km3d/geometry.hpp"
#include "km3d/grm.hpp"
#include "test_support.hpp"

using namespace km3d;
using doctest::Approx;

TEST_CASE("camera decomposition reproduces P") {
  const CameraModel cam = synth::kitti_camera();
  CHECK(cam.fx() == Approx(721.5377));
  CHECK(cam.cy() == Approx(172.854));
  Mat34 rebuilt;
  rebuilt.leftCols<3>() = cam.K();
  rebuilt.col(3) = cam.K() * cam.t();
  CHECK((rebuilt - cam.P()).norm() / cam.P().norm() < 1e-12);
  CHECK(cam.t().x() == Approx((44.85728 - 609.5593 * 2.745884e-03) / 721.5377).epsilon(1e-12));
}

TEST_CASE("camera rejects invalid projection matrices") {
  Mat34 P = synth::kitti_camera().P();
  P(2, 0) = 0.1;
  CHECK_THROWS_AS(CameraModel::from_projection(P), Error);
  P = synth::kitti_camera().P();
  P(0, 0) = -1.0;
  CHECK_THROWS_AS(CameraModel::from_projection(P), Error);
}

TEST_CASE("local corners follow the sign table") {
  const auto unit = local_corners({2.0, 2.0, 2.0});
  CHECK(unit[0].isApprox(Vec3(1, 1, 1)));
  CHECK(local_corners({1.63, 1.53, 3.88})[kCenterKeypoint].isZero());
  // h=1.5, w=1.6, l=3.9; index 7 in 1-based numbering is (-,-,-).
  const auto c = local_corners({1.5, 1.6, 3.9});
  CHECK(c[6].x() == Approx(-1.95));
  CHECK(c[6].y() == Approx(-0.75));
  CHECK(c[6].z() == Approx(-0.8));
}

TEST_CASE("rotate_y") {
  CHECK(rotate_y(0.0).isIdentity(1e-15));
  const Vec3 v = rotate_y(std::numbers::pi / 2) * Vec3::UnitX();
  CHECK((v - Vec3(0, 0, -1)).norm() < 1e-15);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ang(-10.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const double a = ang(rng);
    const double b = ang(rng);
    const Mat3 R = rotate_y(a);
    CHECK((R.transpose() * R - Mat3::Identity()).norm() < 1e-12);
    CHECK(R.determinant() == Approx(1.0).epsilon(1e-12));
    CHECK((rotate_y(a) * rotate_y(b) - rotate_y(a + b)).norm() < 1e-10);
  }
}

TEST_CASE("normalize_angle lands in (-pi, pi]") {
  CHECK(normalize_angle(std::numbers::pi) == std::numbers::pi);
  CHECK(normalize_angle(-std::numbers::pi) == std::numbers::pi);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ang(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = normalize_angle(ang(rng));
    CHECK(a > -std::numbers::pi);
    CHECK(a <= std::numbers::pi);
  }
}

TEST_CASE("project_box") {
  const CameraModel cam = test::simple_camera();
  SUBCASE("center projects to the principal point") {
    const auto kps = project_box(cam, test::make_box(1.5, 1.6, 3.9, 0.0, Vec3(0, 0, 5)));
    CHECK((kps.pts[kCenterKeypoint] - Vec2(640, 180)).norm() < 1e-12);
    CHECK(kps.kept() == 9);
  }
  SUBCASE("round trip through the linear solver") {
    const ObjectBox3D box = test::make_box(1.5, 1.6, 3.9, 0.3, Vec3(1, 1.5, 10));
    const auto sol = grm::solve_full(project_box(cam, box), box.dim, box.theta, cam);
    CHECK((sol.T - box.T).norm() < 1e-6);
  }
  SUBCASE("depth guard") {
    CHECK_THROWS_AS(project_box(cam, test::make_box(1.5, 1.6, 3.9, 0.0, Vec3(0, 0, 1e-7))), Error);
    try {
      project_box(cam, test::make_box(1.5, 1.6, 3.9, 0.0, Vec3(0, 0, 1e-7)));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonPositiveDepth);
    }
  }
}

TEST_CASE("normalize_keypoints") {
  const CameraModel cam = test::simple_camera();
  CHECK(cam.normalize({640, 180}).isZero());
  CHECK((cam.normalize({640 + 700, 180}) - Vec2(1, 0)).norm() < 1e-15);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> px(-500.0, 1500.0);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p(px(rng), px(rng));
    CHECK((cam.denormalize(cam.normalize(p)) - p).norm() < 1e-9);
  }
}

TEST_CASE("alpha and theta conversion") {
  const CameraModel cam = test::simple_camera();
  CHECK(alpha_to_theta(0.2, {640, 100}, cam) == Approx(0.2));
  CHECK(alpha_to_theta(0.0, {640 + 700, 100}, cam) == Approx(std::numbers::pi / 4));

  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const ObjectBox3D box = test::random_box(rng);
    const CameraModel kc = synth::kitti_camera();
    const Vec2 center = project_box(kc, box).pts[kCenterKeypoint];
    const double a = theta_to_alpha(box.theta, center, kc);
    CHECK(std::abs(normalize_angle(alpha_to_theta(a, center, kc) - box.theta)) < 1e-12);
  }
}

TEST_CASE("bbox_from_3d") {
  const CameraModel cam = test::simple_camera();
  SUBCASE("axis-aligned box at the optical axis is symmetric") {
    const Box2D b = bbox_from_3d(cam, test::make_box(1.5, 1.6, 3.9, 0.0, Vec3(0, 0, 12)));
    CHECK(b.center().x() == Approx(640.0));
    CHECK(b.center().y() == Approx(180.0));
  }
  SUBCASE("width matches direct corner enumeration") {
    // theta = 0, T = (0, 0, 20): corners at x = +-l/2, z = 20 +- w/2; the
    // widest extent comes from the near face.
    const double l = 3.9;
    const double w = 1.6;
    const double expected = 700.0 * (l / 2) / (20 - w / 2) * 2;
    const Box2D b = bbox_from_3d(cam, test::make_box(1.5, w, l, 0.0, Vec3(0, 0, 20)));
    CHECK(b.width() == Approx(expected).epsilon(1e-12));
  }
  SUBCASE("contains every projected corner and ignores order") {
    std::mt19937_64 rng(5);
    const CameraModel kc = synth::kitti_camera();
    for (int i = 0; i < 100; ++i) {
      const ObjectBox3D box = test::random_box(rng);
      const Box2D b = bbox_from_3d(kc, box);
      const auto kps = project_box(kc, box);
      double umin = 1e300, umax = -1e300;
      for (int k = kCenterKeypoint - 1; k >= 0; --k) {
        CHECK(kps.pts[k].x() >= b.u_min - 1e-9);
        CHECK(kps.pts[k].x() <= b.u_max + 1e-9);
        CHECK(kps.pts[k].y() >= b.v_min - 1e-9);
        CHECK(kps.pts[k].y() <= b.v_max + 1e-9);
        umin = std::min(umin, kps.pts[k].x());
        umax = std::max(umax, kps.pts[k].x());
      }
      CHECK(umin == b.u_min);
      CHECK(umax == b.u_max);
    }
  }
}
