#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "km3d/eval.hpp"
#include "test_support.hpp"

using namespace km3d;
using namespace km3d::eval;
using doctest::Approx;
using kitti::Difficulty;
using kitti::KittiObject;

namespace {

constexpr double kPi = std::numbers::pi;

KittiObject car(int slot, double score = -1.0) {
  KittiObject o;
  o.type = "Car";
  o.bbox = {100.0 * slot, 100, 100.0 * slot + 60, 160};
  o.h = 1.5;
  o.w = 1.6;
  o.l = 3.9;
  o.location = Vec3(5.0 * slot, 1.5, 20);
  o.rotation_y = 0.1 * slot;
  if (score >= 0) o.score = score;
  return o;
}

/// Jittered detection of a ground-truth object.
KittiObject jitter(const KittiObject& gt, std::mt19937_64& rng, double score) {
  std::uniform_real_distribution<double> px(-12.0, 12.0);
  std::uniform_real_distribution<double> m(-0.6, 0.6);
  KittiObject d = gt;
  d.bbox.u_min += px(rng);
  d.bbox.u_max += px(rng);
  d.bbox.v_min += px(rng) / 3;
  d.bbox.v_max += px(rng) / 3;
  d.location.x() += m(rng);
  d.location.z() += m(rng);
  d.l *= 1 + m(rng) / 4;
  d.rotation_y += m(rng);
  d.score = score;
  return d;
}

ObjectBox3D random_pair_box(std::mt19937_64& rng, const Vec3& around) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ObjectBox3D b;
  b.dim = {1.5 + 0.3 * u(rng), 1.6 + 0.3 * u(rng), 3.9 + 0.8 * u(rng)};
  b.theta = kPi * u(rng);
  b.T = around + Vec3(1.5 * u(rng), 0.4 * u(rng), 1.5 * u(rng));
  return b;
}

}  // namespace

TEST_CASE("2D IoU") {
  const Box2D a{0, 0, 1, 1};
  CHECK(iou_2d(a, a) == 1.0);
  CHECK(iou_2d(a, {2, 2, 3, 3}) == 0.0);
  CHECK(iou_2d(a, {0.5, 0, 1.5, 1}) == Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("polygon helpers") {
  CHECK(polygon_area({{0, 0}, {2, 0}, {2, 1}, {0, 1}}) == Approx(2.0));
  CHECK(polygon_area({{0, 0}, {2, 0}, {2, 0}, {2, 1}, {0, 1}}) == Approx(2.0));
  const auto clipped = clip_convex({{0, 0}, {2, 0}, {2, 2}, {0, 2}}, {{1, 1}, {3, 1}, {3, 3}, {1, 3}});
  CHECK(polygon_area(clipped) == Approx(1.0));
  const auto c = bev_corners({0, 0, 4, 2, 0.3});
  double cross = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Vec2& p = c[i];
    const Vec2& q = c[(i + 1) % 4];
    cross += p.x() * q.y() - q.x() * p.y();
  }
  CHECK(cross / 2 == Approx(8.0));
}

TEST_CASE("BEV IoU") {
  const BevBox sq{0, 0, 1, 1, 0};
  CHECK(bev_iou(sq, sq) == Approx(1.0));
  CHECK(bev_iou(sq, {2, 0, 1, 1, 0}) == 0.0);

  // Rotating a unit square by 45 degrees: regular octagon intersection.
  const BevBox rot{0, 0, 1, 1, kPi / 4};
  const double inter = 2 * (std::sqrt(2.0) - 1);
  CHECK(bev_intersection(sq, rot) == Approx(inter).epsilon(1e-12));
  CHECK(bev_iou(sq, rot) == Approx(inter / (2 - inter)).epsilon(1e-12));

  // Same pair through the volume sampler with equal heights.
  ObjectBox3D a = test::make_box(1.0, 1.0, 1.0, 0.0, Vec3(0, 0, 10));
  ObjectBox3D b = test::make_box(1.0, 1.0, 1.0, kPi / 4, Vec3(0, 0, 10));
  std::mt19937_64 rng(61);
  const auto mc = synth::monte_carlo_iou3d(a, b, 1'000'000, rng);
  CHECK(std::abs(mc.value - bev_iou(sq, rot)) < 1e-3);
  CHECK(iou_3d(a, b) == Approx(bev_iou(sq, rot)).epsilon(1e-12));
}

TEST_CASE("3D IoU") {
  const ObjectBox3D a = test::make_box(1.5, 1.6, 3.9, 0.4, Vec3(1, 1, 15));
  CHECK(iou_3d(a, a) == Approx(1.0));
  ObjectBox3D up = a;
  up.T.y() -= 1.5;
  CHECK(iou_3d(a, up) == 0.0);
  up.T.y() = a.T.y() - 0.75;
  CHECK(iou_3d(a, up) == Approx(0.75 / 2.25).epsilon(1e-12));

  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  std::uniform_real_distribution<double> sh(-20.0, 20.0);
  for (int i = 0; i < 300; ++i) {
    const Vec3 c(sh(rng), 0, 30 + sh(rng));
    const ObjectBox3D p = random_pair_box(rng, c);
    const ObjectBox3D q = random_pair_box(rng, c);
    const double iou = iou_3d(p, q);
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
    CHECK(std::abs(iou - iou_3d(q, p)) < 1e-12);
    CHECK(std::abs(bev_iou(to_bev(p), to_bev(q)) - bev_iou(to_bev(q), to_bev(p))) < 1e-12);

    // Rigid motion: yaw about the vertical axis plus translation.
    const double phi = ang(rng);
    const Vec3 d(sh(rng), sh(rng) / 10, sh(rng));
    auto move = [&](ObjectBox3D b) {
      b.T = rotate_y(phi) * b.T + d;
      b.theta = normalize_angle(b.theta + phi);
      return b;
    };
    CHECK(std::abs(iou_3d(move(p), move(q)) - iou) < 1e-9);
  }

  SUBCASE("statistical self-test of the sampler") {
    int within = 0;
    const int pairs = 100;
    for (int i = 0; i < pairs; ++i) {
      const ObjectBox3D p = random_pair_box(rng, Vec3(0, 0, 20));
      const ObjectBox3D q = random_pair_box(rng, Vec3(0, 0, 20));
      const auto mc = synth::monte_carlo_iou3d(p, q, 100'000, rng);
      const double exact = iou_3d(p, q);
      within += std::abs(mc.value - exact) <= 3 * mc.stderr_ + 1e-12;
    }
    CHECK(within >= 99);
  }
}

TEST_CASE("recall sampling") {
  const auto r11 = recall_points(Sampling::Eleven);
  REQUIRE(r11.size() == 11);
  CHECK(r11.front() == 0.0);
  CHECK(r11.back() == Approx(1.0));
  const auto r40 = recall_points(Sampling::Forty);
  REQUIRE(r40.size() == 40);
  CHECK(r40.front() == Approx(1.0 / 40));
  CHECK(r40.back() == Approx(1.0));
  CHECK(default_threshold("Car") == 0.7);
  CHECK(default_threshold("Pedestrian") == 0.5);
}

TEST_CASE("average precision") {
  SUBCASE("perfect detector") {
    Frame f;
    for (int i = 0; i < 4; ++i) {
      f.gts.push_back(car(i));
      f.dets.push_back(car(i, 1.0));
    }
    for (Metric m : {Metric::AP2D, Metric::APBEV, Metric::AP3D, Metric::AOS})
      for (Sampling s : {Sampling::Eleven, Sampling::Forty}) {
        const auto res = evaluate({f}, {"Car", m, s, 0.7});
        for (const auto& r : res) CHECK(r.ap == Approx(1.0));
      }
  }
  SUBCASE("no detections") {
    Frame f;
    f.gts.push_back(car(0));
    CHECK(average_precision({f}, {}, Difficulty::Moderate).ap == 0.0);
  }
  SUBCASE("hand-computed three ground truths, four detections") {
    Frame f;
    for (int i = 0; i < 3; ++i) f.gts.push_back(car(i));
    f.dets = {car(0, 0.9), car(7, 0.8), car(1, 0.7), car(0, 0.6)};
    const EvalConfig c11{"Car", Metric::AP2D, Sampling::Eleven, 0.7};
    const EvalConfig c40{"Car", Metric::AP2D, Sampling::Forty, 0.7};
    CHECK(average_precision({f}, c11, Difficulty::Easy).ap == Approx(6.0 / 11).epsilon(1e-12));
    CHECK(average_precision({f}, c40, Difficulty::Easy).ap == Approx(13.0 / 24).epsilon(1e-12));
    CHECK(synth::brute_force_ap({f}, c11) == Approx(6.0 / 11).epsilon(1e-12));
    CHECK(synth::brute_force_ap({f}, c40) == Approx(13.0 / 24).epsilon(1e-12));
  }
  SUBCASE("orientation similarity") {
    Frame f;
    f.gts = {car(0), car(1)};
    f.dets = {car(0, 0.9), car(1, 0.8)};
    f.dets[0].rotation_y += kPi / 2;
    f.dets[1].rotation_y += kPi / 2;
    CHECK(average_precision({f}, {"Car", Metric::AOS, Sampling::Forty, 0.7}, Difficulty::Easy).ap ==
          Approx(0.5));
    CHECK(average_precision({f}, {"Car", Metric::AP2D, Sampling::Forty, 0.7}, Difficulty::Easy).ap ==
          Approx(1.0));
  }
  SUBCASE("DontCare and ignored ground truth absorb detections") {
    Frame f;
    f.gts = {car(0)};
    KittiObject dc;
    dc.type = "DontCare";
    dc.bbox = {500, 90, 700, 200};
    f.gts.push_back(dc);
    KittiObject van = car(3);
    van.type = "Van";
    f.gts.push_back(van);
    f.dets = {car(0, 0.5), car(5, 0.9), car(3, 0.95)};
    CHECK(average_precision({f}, {"Car", Metric::AP2D, Sampling::Forty, 0.7}, Difficulty::Easy).ap ==
          Approx(1.0));
  }
  SUBCASE("short detections are not counted") {
    Frame f;
    f.gts = {car(0)};
    KittiObject tiny = car(4, 0.99);
    tiny.bbox.v_max = tiny.bbox.v_min + 20;
    f.dets = {car(0, 0.5), tiny};
    CHECK(average_precision({f}, {"Car", Metric::AP2D, Sampling::Forty, 0.7}, Difficulty::Moderate).ap ==
          Approx(1.0));
  }
  SUBCASE("matches exhaustive matching on random fixtures") {
    std::mt19937_64 rng(63);
    std::uniform_real_distribution<double> sc(0.0, 1.0);
    std::uniform_int_distribution<int> count(1, 3);
    for (int t = 0; t < 300; ++t) {
      std::vector<Frame> frames(2);
      for (auto& f : frames) {
        const int n = count(rng);
        for (int i = 0; i < n; ++i) f.gts.push_back(car(i));
        const int m = count(rng) + 1;
        for (int j = 0; j < m; ++j) {
          const int target = std::uniform_int_distribution<int>(0, 4)(rng);
          f.dets.push_back(target < n ? jitter(f.gts[target], rng, sc(rng)) : car(target + 3, sc(rng)));
        }
      }
      for (Metric m : {Metric::AP2D, Metric::APBEV, Metric::AP3D})
        for (Sampling s : {Sampling::Eleven, Sampling::Forty}) {
          const EvalConfig cfg{"Car", m, s, 0.5};
          CHECK(average_precision(frames, cfg, Difficulty::Hard).ap ==
                Approx(synth::brute_force_ap(frames, cfg)).epsilon(1e-12));
        }
    }
  }
  SUBCASE("a correct top-scoring detection never lowers AP") {
    std::mt19937_64 rng(64);
    std::uniform_real_distribution<double> sc(0.0, 0.9);
    for (int t = 0; t < 200; ++t) {
      Frame f;
      for (int i = 0; i < 4; ++i) f.gts.push_back(car(i));
      const int missing = std::uniform_int_distribution<int>(0, 3)(rng);
      for (int i = 0; i < 4; ++i)
        if (i != missing) f.dets.push_back(jitter(f.gts[i], rng, sc(rng)));
      f.dets.push_back(car(9, sc(rng)));
      const EvalConfig cfg{"Car", Metric::AP2D, Sampling::Forty, 0.5};
      const double before = average_precision({f}, cfg, Difficulty::Easy).ap;
      f.dets.push_back(car(missing, 1.0));
      CHECK(average_precision({f}, cfg, Difficulty::Easy).ap >= before - 1e-15);
    }
  }
}
