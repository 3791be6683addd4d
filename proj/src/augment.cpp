#include "km3d/augment.hpp"

#include <cmath>

#include "km3d/error.hpp"
#include "km3d/grm.hpp"

namespace km3d::augment {

namespace {

Eigen::Matrix2d linear_part(const AffineAug& aug) { return aug.M.leftCols<2>(); }

Vec2 flip_u(const AffineAug& aug, const Vec2& p) {
  return aug.flip ? Vec2(aug.image_width - 1.0 - p.x(), p.y()) : p;
}

KeypointSet permute(const KeypointSet& kps) {
  KeypointSet out;
  for (int i = 0; i < kNumKeypoints; ++i) {
    out.pts[i] = kps.pts[kFlipPermutation[i]];
    out.mask[i] = kps.mask[kFlipPermutation[i]];
  }
  return out;
}

codec::Prediction map_prediction(const codec::Prediction& in, const AffineAug& aug, const CameraModel& solve_cam,
                                 bool forward) {
  codec::Prediction out = in;
  out.center = forward ? apply_point(aug, in.center) : invert_point(aug, in.center);
  out.kps = forward ? apply_keypoints(aug, in.kps) : invert_keypoints(aug, in.kps);
  out.alpha = forward ? apply_alpha(aug, in.alpha) : invert_alpha(aug, in.alpha);
  const double theta = alpha_to_theta(out.alpha, out.kps.pts[kCenterKeypoint], solve_cam);
  out.theta = theta;
  out.T = grm::solve_full(out.kps, out.dim, theta, solve_cam).T;
  return out;
}

}  // namespace

AffineAug AffineAug::identity(double image_width) {
  AffineAug aug;
  aug.image_width = image_width;
  return aug;
}

AffineAug AffineAug::from_matrix(const Eigen::Matrix<double, 2, 3>& M, bool flip, double image_width) {
  AffineAug aug;
  aug.M = M;
  aug.flip = flip;
  aug.image_width = image_width;
  if (!(std::abs(linear_part(aug).determinant()) > 1e-9)) {
    throw Error(ErrorCode::InvalidAffine, "affine linear part is singular");
  }
  return aug;
}

AffineAug make_aug(double scale, const Vec2& shift, bool flip, double image_width) {
  if (!(scale >= kMinScale && scale <= kMaxScale)) {
    throw Error(ErrorCode::InvalidScale, "scale " + std::to_string(scale) + " outside [0.6, 1.4]");
  }
  Eigen::Matrix<double, 2, 3> M;
  M << scale, 0.0, shift.x(), 0.0, scale, shift.y();
  return AffineAug::from_matrix(M, flip, image_width);
}

Vec2 apply_point(const AffineAug& aug, const Vec2& p) { return aug.M * flip_u(aug, p).homogeneous(); }

Vec2 invert_point(const AffineAug& aug, const Vec2& p) {
  const Vec2 q = linear_part(aug).inverse() * (p - aug.M.col(2));
  return flip_u(aug, q);
}

KeypointSet apply_keypoints(const AffineAug& aug, const KeypointSet& kps) {
  KeypointSet out = aug.flip ? permute(kps) : kps;
  for (auto& p : out.pts) p = apply_point(aug, p);
  return out;
}

KeypointSet invert_keypoints(const AffineAug& aug, const KeypointSet& kps) {
  KeypointSet out = kps;
  for (auto& p : out.pts) p = invert_point(aug, p);
  return aug.flip ? permute(out) : out;
}

double apply_alpha(const AffineAug& aug, double alpha) { return aug.flip ? normalize_angle(-alpha) : alpha; }

double invert_alpha(const AffineAug& aug, double alpha) { return apply_alpha(aug, alpha); }

// P' = A3 * F * P * diag(-1, 1, 1, 1) where A3 lifts M to 3x3 and F mirrors u.
// The trailing diag flips the world x axis so K' keeps a positive fx.
CameraModel apply_intrinsics(const AffineAug& aug, const CameraModel& cam) {
  Eigen::Matrix3d A3 = Eigen::Matrix3d::Identity();
  A3.topRows<2>() = aug.M;
  Mat34 P = cam.P();
  if (aug.flip) {
    Eigen::Matrix3d F;
    F << -1.0, 0.0, aug.image_width - 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0;
    P = F * P;
    P.col(0) = -P.col(0);
  }
  return CameraModel::from_projection(A3 * P);
}

std::vector<codec::Prediction> transform_predictions(const std::vector<codec::Prediction>& preds,
                                                     const AffineAug& aug, const CameraModel& cam) {
  const CameraModel aug_cam = apply_intrinsics(aug, cam);
  std::vector<codec::Prediction> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(map_prediction(p, aug, aug_cam, true));
  return out;
}

std::vector<codec::Prediction> dealign(const std::vector<codec::Prediction>& preds, const AffineAug& aug,
                                       const CameraModel& cam) {
  std::vector<codec::Prediction> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(map_prediction(p, aug, cam, false));
  return out;
}

}  // namespace km3d::augment
