#pragma once

#include <array>
#include <string>
#include <vector>

#include "km3d/geometry.hpp"
#include "km3d/kitti_io.hpp"

namespace km3d::eval {

/// Rotated rectangle on the ground plane (x, z), length along the yaw heading.
struct BevBox {
  double x = 0.0;
  double z = 0.0;
  double l = 0.0;
  double w = 0.0;
  double yaw = 0.0;
};

BevBox to_bev(const ObjectBox3D& box);
/// Counter-clockwise corners in the (x, z) plane.
std::array<Vec2, 4> bev_corners(const BevBox& box);

double polygon_area(const std::vector<Vec2>& poly);
/// Sutherland-Hodgman clip of a convex subject polygon against a convex clip polygon.
std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip);

double iou_2d(const Box2D& a, const Box2D& b);
double bev_intersection(const BevBox& a, const BevBox& b);
double bev_iou(const BevBox& a, const BevBox& b);
double iou_3d(const ObjectBox3D& a, const ObjectBox3D& b);

enum class Metric { AP2D, APBEV, AP3D, AOS };
enum class Sampling { Eleven, Forty };

const char* to_string(Metric m);
const char* to_string(Sampling s);

struct EvalConfig {
  std::string class_name = "Car";
  Metric metric = Metric::AP3D;
  Sampling sampling = Sampling::Forty;
  double iou_threshold = 0.7;
};

/// Ground truth and detections of one image.
struct Frame {
  std::vector<kitti::KittiObject> gts;
  std::vector<kitti::KittiObject> dets;
};

struct PrCurve {
  std::vector<double> scores;       ///< descending, one per counted detection
  std::vector<bool> is_tp;
  std::vector<double> precision;    ///< raw cumulative precision
  std::vector<double> recall;
  std::vector<double> recall_points;
  std::vector<double> sampled;      ///< interpolated precision (or similarity for AOS)
  int num_gt = 0;
};

struct ApResult {
  double ap = 0.0;
  PrCurve curve;
};

std::vector<double> recall_points(Sampling s);

/// AP (or AOS) over all frames for one difficulty level.
ApResult average_precision(const std::vector<Frame>& frames, const EvalConfig& cfg, kitti::Difficulty level);

/// Easy, Moderate, Hard.
std::array<ApResult, 3> evaluate(const std::vector<Frame>& frames, const EvalConfig& cfg);

/// Benchmark default overlap: 0.7 for Car, 0.5 for the other classes.
double default_threshold(const std::string& class_name);

}  // namespace km3d::eval
