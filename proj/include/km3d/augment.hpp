#pragma once

#include <vector>

#include "km3d/codec.hpp"
#include "km3d/geometry.hpp"

namespace km3d::augment {

inline constexpr double kMinScale = 0.6;
inline constexpr double kMaxScale = 1.4;

/// Keypoint index of the same semantic corner after a horizontal mirror.
/// Mirroring x -> -x with yaw -> -yaw flips the sign of the local l-axis.
inline constexpr std::array<int, kNumKeypoints> kFlipPermutation = {3, 2, 1, 0, 7, 6, 5, 4, 8};

/**
 * Coordinate-level augmentation: an optional horizontal flip about the image
 * center (u -> width - 1 - u) followed by the 2x3 affine map M.
 */
struct AffineAug {
  Eigen::Matrix<double, 2, 3> M = (Eigen::Matrix<double, 2, 3>() << 1, 0, 0, 0, 1, 0).finished();
  bool flip = false;
  double image_width = 0.0;

  static AffineAug identity(double image_width = 0.0);
  /// General constructor; throws InvalidAffine if the linear part is singular.
  static AffineAug from_matrix(const Eigen::Matrix<double, 2, 3>& M, bool flip, double image_width);
};

/// Scale + shift + flip; throws InvalidScale outside [0.6, 1.4].
AffineAug make_aug(double scale, const Vec2& shift, bool flip, double image_width);

Vec2 apply_point(const AffineAug& aug, const Vec2& p);
Vec2 invert_point(const AffineAug& aug, const Vec2& p);

KeypointSet apply_keypoints(const AffineAug& aug, const KeypointSet& kps);
KeypointSet invert_keypoints(const AffineAug& aug, const KeypointSet& kps);

double apply_alpha(const AffineAug& aug, double alpha);
/// Flipping is an involution on alpha, so this equals apply_alpha.
double invert_alpha(const AffineAug& aug, double alpha);

/// Camera whose projection of the (mirrored, if flipped) scene equals the
/// augmented projection of the original scene.
CameraModel apply_intrinsics(const AffineAug& aug, const CameraModel& cam);

/// Maps canonical predictions into the augmented frame. Positions and yaw are
/// re-solved with the augmented camera.
std::vector<codec::Prediction> transform_predictions(const std::vector<codec::Prediction>& preds,
                                                     const AffineAug& aug, const CameraModel& cam);

/// Brings predictions made under `aug` back to the canonical frame and
/// re-solves positions with the original camera.
std::vector<codec::Prediction> dealign(const std::vector<codec::Prediction>& preds, const AffineAug& aug,
                                       const CameraModel& cam);

}  // namespace km3d::augment
