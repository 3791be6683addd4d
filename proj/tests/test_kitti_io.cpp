#include <doctest.h>

#include <random>
#include <string>

#include "km3d/kitti_io.hpp"
#include "test_support.hpp"

using namespace km3d;
using namespace km3d::kitti;
using doctest::Approx;

namespace {

const char* kCalib =
    "P0: 700 0 640 0 0 700 180 0 0 0 1 0\n"
    "P1: 700 0 640 -380 0 700 180 0 0 0 1 0\n"
    "P2: 700 0 640 0 0 700 180 0 0 0 1 0\n"
    "P3: 700 0 640 0 0 700 180 0 0 0 1 0\n"
    "R0_rect: 1 0 0 0 1 0 0 0 1\n";

const char* kLabel = "Car 0.00 0 -1.57 100.0 100.0 200.0 180.0 1.50 1.60 3.90 1.00 1.50 10.00 -1.47";

KittiObject sized(double height, int occ, double trunc) {
  KittiObject o;
  o.type = "Car";
  o.bbox = {10, 100, 60, 100 + height};
  o.occluded = occ;
  o.truncated = trunc;
  return o;
}

}  // namespace

TEST_CASE("calibration parsing") {
  const CalibFile c = parse_calib(kCalib);
  CHECK(c.p2.fx() == 700.0);
  CHECK(c.p2.cx() == 640.0);
  CHECK(c.p2.cy() == 180.0);
  CHECK(c.p2.t().isZero(0.0));
  CHECK(c.matrix("P1")(0, 3) == -380.0);
  CHECK(c.entries.at("R0_rect").size() == 9);

  const CalibFile real = parse_calib(
      "P2: 7.215377e+02 0.000000e+00 6.095593e+02 4.485728e+01 0.000000e+00 7.215377e+02 1.728540e+02 "
      "2.163791e-01 0.000000e+00 0.000000e+00 1.000000e+00 2.745884e-03\n");
  CHECK((real.p2.P() - synth::kitti_camera().P()).norm() == 0.0);

  SUBCASE("missing P2") {
    CHECK(test::thrown_code([] { parse_calib("P0: 1 0 0 0 0 1 0 0 0 0 1 0\n"); }) == ErrorCode::MissingKey);
  }
  SUBCASE("malformed number is located") {
    try {
      parse_calib("P0: 1 0 0 0 0 1 0 0 0 0 1 0\nP2: 1 2 three 4 5 6 7 8 9 10 11 12\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.code() == ErrorCode::MalformedNumber);
      CHECK(e.line() == 2);
      CHECK(e.column() == 9);
    }
  }
  SUBCASE("short P2") {
    CHECK(test::thrown_code([] { parse_calib("P2: 1 2 3\n"); }).has_value());
  }
}

TEST_CASE("label parsing") {
  const auto objs = parse_labels(kLabel);
  REQUIRE(objs.size() == 1);
  const KittiObject& o = objs[0];
  CHECK(o.type == "Car");
  CHECK(o.alpha == -1.57);
  CHECK(o.bbox.u_min == 100.0);
  CHECK(o.bbox.v_max == 180.0);
  CHECK(o.h == 1.5);
  CHECK(o.w == 1.6);
  CHECK(o.l == 3.9);
  CHECK(o.location == Vec3(1.0, 1.5, 10.0));
  CHECK(o.rotation_y == -1.47);
  CHECK_FALSE(o.score.has_value());

  const auto res = parse_labels(std::string(kLabel) + " 0.87\n\n");
  REQUIRE(res.size() == 1);
  CHECK(res[0].score == 0.87);

  const auto dc = parse_labels("DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10\n");
  REQUIRE(dc.size() == 1);
  CHECK(dc[0].type == "DontCare");
  CHECK(dc[0].truncated == -1.0);
  CHECK(dc[0].occluded == -1);
  CHECK(dc[0].location.x() == -1000.0);
  CHECK(dc[0].rotation_y == -10.0);

  const auto multi = parse_labels("Pedestrian 0 0 0 1 2 3 4 1.8 0.6 0.8 0 0 5 0\nCyclist 0 0 0 1 2 3 4 1.7 0.6 1.8 0 0 5 0\n");
  REQUIRE(multi.size() == 2);
  CHECK(multi[1].type == "Cyclist");

  SUBCASE("errors") {
    try {
      parse_labels(std::string(kLabel) + "\nCar 0 0 0 1 2 3\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.code() == ErrorCode::FieldCount);
      CHECK(e.line() == 2);
    }
    try {
      parse_labels("Car 0.00 0 -1.57 100.0 100.0 200.0 180.0 1.50 x1.60 3.90 1.00 1.50 10.00 -1.47");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.code() == ErrorCode::MalformedNumber);
      CHECK(e.line() == 1);
      CHECK(e.column() == 47);
    }
  }
}

TEST_CASE("result writing") {
  auto objs = parse_labels(std::string(kLabel) + " 0.876\n" +
                           "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10\n");
  const std::string text = write_results(objs);
  CHECK(text.substr(0, text.find('\n')) ==
        "Car 0.00 0 -1.57 100.00 100.00 200.00 180.00 1.50 1.60 3.90 1.00 1.50 10.00 -1.47 0.88");
  CHECK(write_results(parse_labels(text)) == text);

  const auto back = parse_labels(text);
  REQUIRE(back.size() == objs.size());
  CHECK(back[1].score == 1.0);
  CHECK(std::abs(*back[0].score - 0.876) <= 0.005);

  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    KittiObject o;
    o.type = "Car";
    o.alpha = u(rng) / 20;
    o.bbox = {std::abs(u(rng)), std::abs(u(rng)), 100 + std::abs(u(rng)), 100 + std::abs(u(rng))};
    o.h = 1 + std::abs(u(rng)) / 50;
    o.w = 1 + std::abs(u(rng)) / 50;
    o.l = 3 + std::abs(u(rng)) / 50;
    o.location = Vec3(u(rng), u(rng) / 10, 50 + u(rng));
    o.rotation_y = u(rng) / 20;
    o.score = (u(rng) + 50) / 100;
    const std::string once = write_results({o});
    const KittiObject p = parse_labels(once).at(0);
    CHECK(std::abs(p.location.x() - o.location.x()) <= 0.005 + 1e-12);
    CHECK(std::abs(p.rotation_y - o.rotation_y) <= 0.005 + 1e-12);
    CHECK(std::abs(*p.score - *o.score) <= 0.005 + 1e-12);
    CHECK(write_results(parse_labels(once)) == once);
  }

  const std::string gt = write_labels(objs);
  CHECK(gt.substr(0, gt.find('\n')) ==
        "Car 0.00 0 -1.57 100.00 100.00 200.00 180.00 1.50 1.60 3.90 1.00 1.50 10.00 -1.47");
}

TEST_CASE("difficulty") {
  CHECK(difficulty(sized(50, 0, 0.0)) == Difficulty::Easy);
  CHECK(difficulty(sized(30, 1, 0.2)) == Difficulty::Moderate);
  CHECK(difficulty(sized(30, 2, 0.45)) == Difficulty::Hard);
  CHECK(difficulty(sized(20, 0, 0.0)) == Difficulty::Ignored);
  CHECK(difficulty(sized(50, 3, 0.0)) == Difficulty::Ignored);
  CHECK(difficulty(sized(50, 0, 0.6)) == Difficulty::Ignored);
  CHECK(meets(sized(50, 0, 0.0), Difficulty::Hard));
  CHECK_FALSE(meets(sized(30, 1, 0.0), Difficulty::Easy));

  // Loosening any attribute never demotes.
  auto rank = [](Difficulty d) { return static_cast<int>(d); };
  for (double h : {10.0, 24.0, 25.0, 39.0, 40.0, 80.0})
    for (int occ = 0; occ <= 3; ++occ)
      for (double tr : {0.0, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7}) {
        const int base = rank(difficulty(sized(h, occ, tr)));
        CHECK(rank(difficulty(sized(h + 20, occ, tr))) <= base);
        if (occ > 0) CHECK(rank(difficulty(sized(h, occ - 1, tr))) <= base);
        CHECK(rank(difficulty(sized(h, occ, std::max(0.0, tr - 0.1)))) <= base);
      }
}

TEST_CASE("box conversion") {
  const KittiObject o = parse_labels(kLabel).at(0);
  const ObjectBox3D box = gt_to_box(o);
  CHECK(box.T.isApprox(Vec3(1.0, 0.75, 10.0)));
  CHECK(box.theta == -1.47);
  CHECK(box.alpha == -1.57);
  CHECK(box.dim.h == 1.5);

  const KittiObject back = box_to_gt(box, o);
  CHECK(back.location.isApprox(o.location));
  CHECK(back.h == o.h);
  CHECK(back.rotation_y == o.rotation_y);
  CHECK(back.alpha == o.alpha);
  CHECK(write_labels({back}) == write_labels({o}));

  // The center keypoint sits half a height above the bottom-center location.
  const CameraModel cam = CameraModel::from_intrinsics(700, 700, 640, 180);
  const Vec2 c = project_box(cam, box).pts[kCenterKeypoint];
  CHECK(c.x() == Approx(640 + 700 * 1.0 / 10.0));
  CHECK(c.y() == Approx(180 + 700 * 0.75 / 10.0));
}
