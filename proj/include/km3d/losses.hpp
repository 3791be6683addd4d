#pragma once

#include <vector>

#include "km3d/augment.hpp"
#include "km3d/codec.hpp"
#include "km3d/geometry.hpp"

namespace km3d::losses {

struct LossWeights {
  double w_m = 1.0;
  double w_kc = 1.0;
  double w_D = 1.0;
  double w_O = 1.0;
  double w_T = 1.0;
  double w_conf = 1.0;
};

/// Piecewise depth guide: linear below `a` meters, logarithmic above.
struct DepthGuide {
  double alpha_g = 0.01;
  double a = 5.0;
};

inline constexpr double kProbClamp = 1e-7;
inline constexpr double kDefaultMatchRadius = 8.0;
inline constexpr double kRampupLength = 100.0;

/// Penalty-reduced focal loss over a heatmap; throws ShapeMismatch.
double focal_loss(const Tensor3& pred, const Tensor3& gt);

double depth_weight(double Z, const DepthGuide& guide = {});

/// Depth-weighted L1 over all 9 keypoints, averaged over objects. Empty input gives 0.
double keypoint_loss(const std::vector<KeypointSet>& pred, const std::vector<KeypointSet>& gt,
                     const std::vector<double>& gt_depths, const DepthGuide& guide = {});

/// Softmax cross-entropy on each bin's membership plus L1 on (sin, cos) for the bins containing alpha.
double multibin_loss(const codec::OrientationVector& pred, double alpha);

/// Binary cross-entropy with the prediction clamped away from 0 and 1.
double bce(double pred, double target);

struct ObjectPrediction {
  KeypointSet kps;
  Dimension3D dim;
  codec::OrientationVector orient{};
  double conf3d = 0.0;
};

struct ObjectTarget {
  KeypointSet kps;
  ObjectBox3D box;  ///< alpha and theta filled in
};

struct SupervisedBatch {
  Tensor3 heat_pred;
  Tensor3 heat_gt;
  CameraModel cam;
  std::vector<ObjectPrediction> preds;
  std::vector<ObjectTarget> targets;  ///< matched one-to-one with preds
};

struct LossTerms {
  double main_center = 0.0;
  double keypoints = 0.0;
  double dimension = 0.0;
  double orientation = 0.0;
  double position = 0.0;
  double confidence = 0.0;
};

struct SupervisedLoss {
  LossTerms raw;
  LossTerms weighted;
  double total = 0.0;
};

/// Weighted six-term detection objective. The position term solves each
/// predicted object through the GRM; the confidence target is the 3D IoU of
/// the resulting box with its ground truth.
SupervisedLoss supervised_loss(const SupervisedBatch& batch, const LossWeights& weights = {});

/// Gaussian ramp-up exp(-5 (1 - t/100)^2), held at 1 from t = 100 on.
double rampup(double t);

struct PredictionView {
  std::vector<codec::Prediction> preds;
  augment::AffineAug aug;
};

struct ConsistencyLoss {
  double position = 0.0;
  double orientation = 0.0;
  double dimension = 0.0;
  double total = 0.0;
  int pairs = 0;
};

/// MSE between two augmented views of the same image after undoing both
/// augmentations. Objects are paired greedily by nearest de-augmented center.
ConsistencyLoss consistency_loss(const PredictionView& a, const PredictionView& b, const CameraModel& cam,
                                 double match_radius = kDefaultMatchRadius);

double semi_supervised_loss(double sup, double unsup, double t);

}  // namespace km3d::losses
