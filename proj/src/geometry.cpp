#include "km3d/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "km3d/error.hpp"

namespace km3d {

namespace {
constexpr double kMinDepth = 1e-6;
}

CameraModel CameraModel::from_projection(const Mat34& P) {
  if (!P.allFinite()) {
    throw Error(ErrorCode::InvalidCamera, "projection matrix has non-finite entries");
  }
  const Mat3 K = P.leftCols<3>();
  const double scale = K.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * std::max(scale, 1.0);
  if (std::abs(K(1, 0)) > tol || std::abs(K(2, 0)) > tol || std::abs(K(2, 1)) > tol) {
    throw Error(ErrorCode::InvalidCamera, "left 3x3 block of P is not upper triangular");
  }
  if (std::abs(K(2, 2) - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidCamera, "K(2,2) must be 1");
  }
  if (!(K(0, 0) > 0.0) || !(K(1, 1) > 0.0)) {
    throw Error(ErrorCode::InvalidCamera, "focal lengths must be positive");
  }
  CameraModel cam;
  cam.P_ = P;
  cam.K_ = K;
  cam.K_(1, 0) = cam.K_(2, 0) = cam.K_(2, 1) = 0.0;
  cam.t_ = cam.K_.triangularView<Eigen::Upper>().solve(P.col(3));
  return cam;
}

CameraModel CameraModel::from_intrinsics(double fx, double fy, double cx, double cy, const Vec3& t) {
  Mat3 K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  Mat34 P;
  P.leftCols<3>() = K;
  P.col(3) = K * t;
  return from_projection(P);
}

Vec2 CameraModel::normalize(const Vec2& pixel) const {
  const double y = (pixel.y() - cy()) / fy();
  const double x = (pixel.x() - cx() - skew() * y) / fx();
  return {x, y};
}

Vec2 CameraModel::denormalize(const Vec2& normalized) const {
  return {fx() * normalized.x() + skew() * normalized.y() + cx(), fy() * normalized.y() + cy()};
}

Vec2 CameraModel::project(const Vec3& point) const {
  const Vec3 h = P_ * point.homogeneous();
  return h.hnormalized();
}

int KeypointSet::kept() const { return static_cast<int>(std::count(mask.begin(), mask.end(), true)); }

double normalize_angle(double angle) {
  constexpr double pi = std::numbers::pi;
  while (angle > pi) angle -= 2.0 * pi;
  while (angle <= -pi) angle += 2.0 * pi;
  return angle;
}

std::array<Vec3, kNumKeypoints> local_corners(const Dimension3D& dim) {
  std::array<Vec3, kNumKeypoints> out;
  const Vec3 half(dim.l / 2.0, dim.h / 2.0, dim.w / 2.0);
  for (int i = 0; i < kNumKeypoints; ++i) {
    out[i] = Vec3(kCornerTable[i][0], kCornerTable[i][1], kCornerTable[i][2]).cwiseProduct(half);
  }
  return out;
}

Mat3 rotate_y(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat3 R;
  R << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  return R;
}

std::array<Vec3, kNumKeypoints> box_points(const ObjectBox3D& box) {
  const Mat3 R = rotate_y(box.theta);
  auto pts = local_corners(box.dim);
  for (auto& p : pts) p = R * p + box.T;
  return pts;
}

KeypointSet project_box(const CameraModel& cam, const ObjectBox3D& box) {
  KeypointSet kps;
  const auto pts = box_points(box);
  for (int i = 0; i < kNumKeypoints; ++i) {
    if (!(cam.depth(pts[i]) > kMinDepth)) {
      throw Error(ErrorCode::NonPositiveDepth, "keypoint " + std::to_string(i) + " has depth " +
                                                   std::to_string(cam.depth(pts[i])));
    }
    kps.pts[i] = cam.project(pts[i]);
  }
  return kps;
}

std::array<Vec2, kNumKeypoints> normalize_keypoints(const CameraModel& cam, const KeypointSet& kps) {
  std::array<Vec2, kNumKeypoints> out;
  for (int i = 0; i < kNumKeypoints; ++i) out[i] = cam.normalize(kps.pts[i]);
  return out;
}

double ray_angle(const Vec2& center_kp, const CameraModel& cam) {
  return std::atan2((center_kp.x() - cam.cx()) / cam.fx(), 1.0);
}

double alpha_to_theta(double alpha, const Vec2& center_kp, const CameraModel& cam) {
  return normalize_angle(alpha + ray_angle(center_kp, cam));
}

double theta_to_alpha(double theta, const Vec2& center_kp, const CameraModel& cam) {
  return normalize_angle(theta - ray_angle(center_kp, cam));
}

Box2D bbox_from_3d(const CameraModel& cam, const ObjectBox3D& box) {
  const KeypointSet kps = project_box(cam, box);
  Box2D out{kps.pts[0].x(), kps.pts[0].y(), kps.pts[0].x(), kps.pts[0].y()};
  for (int i = 1; i < kCenterKeypoint; ++i) {
    out.u_min = std::min(out.u_min, kps.pts[i].x());
    out.v_min = std::min(out.v_min, kps.pts[i].y());
    out.u_max = std::max(out.u_max, kps.pts[i].x());
    out.v_max = std::max(out.v_max, kps.pts[i].y());
  }
  return out;
}

}  // namespace km3d
