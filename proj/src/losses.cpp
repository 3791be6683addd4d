#include "km3d/losses.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "km3d/error.hpp"
#include "km3d/eval.hpp"
#include "km3d/grm.hpp"

namespace km3d::losses {

double focal_loss(const Tensor3& pred, const Tensor3& gt) {
  if (!pred.same_shape(gt)) throw Error(ErrorCode::ShapeMismatch, "focal loss inputs differ in shape");
  double sum = 0.0;
  int positives = 0;
  const auto& p = pred.data();
  const auto& g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
    if (g[i] == 1.0) {
      sum += (1.0 - q) * (1.0 - q) * std::log(q);
      ++positives;
    } else {
      sum += std::pow(1.0 - g[i], 4) * q * q * std::log(1.0 - q);
    }
  }
  return -sum / std::max(positives, 1);
}

double depth_weight(double Z, const DepthGuide& guide) {
  if (Z < guide.a) return guide.alpha_g * Z;
  return std::log10(Z + 1.0 - guide.a) + guide.alpha_g * guide.a;
}

double keypoint_loss(const std::vector<KeypointSet>& pred, const std::vector<KeypointSet>& gt,
                     const std::vector<double>& gt_depths, const DepthGuide& guide) {
  if (pred.size() != gt.size() || gt.size() != gt_depths.size()) {
    throw Error(ErrorCode::ShapeMismatch, "keypoint loss object lists differ in length");
  }
  if (gt.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < gt.size(); ++j) {
    const double g = depth_weight(gt_depths[j], guide);
    for (int i = 0; i < kNumKeypoints; ++i) sum += g * (pred[j].pts[i] - gt[j].pts[i]).lpNorm<1>();
  }
  return sum / static_cast<double>(gt.size());
}

double multibin_loss(const codec::OrientationVector& pred, double alpha) {
  double loss = 0.0;
  for (int bin = 0; bin < 2; ++bin) {
    const int base = 4 * bin;
    const bool member = codec::in_bin(bin, alpha);
    // log-softmax of the two membership logits
    const double hi = std::max(pred[base], pred[base + 1]);
    const double lse = hi + std::log(std::exp(pred[base] - hi) + std::exp(pred[base + 1] - hi));
    loss += lse - pred[base + (member ? 1 : 0)];
    if (member) {
      const double residual = normalize_angle(alpha - codec::kBinCenters[bin]);
      loss += std::abs(pred[base + 2] - std::sin(residual)) + std::abs(pred[base + 3] - std::cos(residual));
    }
  }
  return loss;
}

double bce(double pred, double target) {
  const double q = std::clamp(pred, kProbClamp, 1.0 - kProbClamp);
  return -(target * std::log(q) + (1.0 - target) * std::log(1.0 - q));
}

SupervisedLoss supervised_loss(const SupervisedBatch& batch, const LossWeights& weights) {
  if (batch.preds.size() != batch.targets.size()) {
    throw Error(ErrorCode::ShapeMismatch, "predictions and targets are not matched one-to-one");
  }
  SupervisedLoss out;
  LossTerms& raw = out.raw;
  raw.main_center = focal_loss(batch.heat_pred, batch.heat_gt);

  std::vector<KeypointSet> pred_kps;
  std::vector<KeypointSet> gt_kps;
  std::vector<double> depths;
  const std::size_t n = batch.preds.size();
  for (std::size_t j = 0; j < n; ++j) {
    const ObjectPrediction& p = batch.preds[j];
    const ObjectTarget& t = batch.targets[j];
    pred_kps.push_back(p.kps);
    gt_kps.push_back(t.kps);
    depths.push_back(t.box.T.z());

    raw.dimension += std::abs(p.dim.h - t.box.dim.h) + std::abs(p.dim.w - t.box.dim.w) +
                     std::abs(p.dim.l - t.box.dim.l);
    raw.orientation += multibin_loss(p.orient, t.box.alpha);

    ObjectBox3D solved;
    solved.dim = p.dim;
    solved.alpha = codec::decode_orientation(p.orient);
    solved.theta = alpha_to_theta(solved.alpha, p.kps.pts[kCenterKeypoint], batch.cam);
    solved.T = grm::solve_full(p.kps, p.dim, solved.theta, batch.cam).T;
    raw.position += (solved.T - t.box.T).norm();

    const double iou = std::clamp(eval::iou_3d(solved, t.box), 0.0, 1.0);
    raw.confidence += bce(p.conf3d, iou);
  }
  raw.keypoints = keypoint_loss(pred_kps, gt_kps, depths);
  if (n > 0) {
    const double inv = 1.0 / static_cast<double>(n);
    raw.dimension *= inv;
    raw.orientation *= inv;
    raw.position *= inv;
    raw.confidence *= inv;
  }

  LossTerms& w = out.weighted;
  w.main_center = weights.w_m * raw.main_center;
  w.keypoints = weights.w_kc * raw.keypoints;
  w.dimension = weights.w_D * raw.dimension;
  w.orientation = weights.w_O * raw.orientation;
  w.position = weights.w_T * raw.position;
  w.confidence = weights.w_conf * raw.confidence;
  out.total = w.main_center + w.keypoints + w.dimension + w.orientation + w.position + w.confidence;
  return out;
}

double rampup(double t) {
  const double x = 1.0 - std::min(std::max(t, 0.0), kRampupLength) / kRampupLength;
  return std::exp(-5.0 * x * x);
}

ConsistencyLoss consistency_loss(const PredictionView& a, const PredictionView& b, const CameraModel& cam,
                                 double match_radius) {
  const auto ca = augment::dealign(a.preds, a.aug, cam);
  const auto cb = augment::dealign(b.preds, b.aug, cam);

  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    for (std::size_t j = 0; j < cb.size(); ++j) {
      const double d = (ca[i].center - cb[j].center).norm();
      if (d <= match_radius) candidates.emplace_back(d, i, j);
    }
  }
  std::sort(candidates.begin(), candidates.end());

  ConsistencyLoss out;
  std::vector<bool> used_a(ca.size(), false);
  std::vector<bool> used_b(cb.size(), false);
  for (const auto& [d, i, j] : candidates) {
    if (used_a[i] || used_b[j]) continue;
    used_a[i] = used_b[j] = true;
    const auto& pa = ca[i];
    const auto& pb = cb[j];
    out.position += (*pa.T - *pb.T).squaredNorm() / 3.0;
    const Vec2 ea(std::sin(*pa.theta), std::cos(*pa.theta));
    const Vec2 eb(std::sin(*pb.theta), std::cos(*pb.theta));
    out.orientation += (ea - eb).squaredNorm() / 2.0;
    const Vec3 da(pa.dim.h, pa.dim.w, pa.dim.l);
    const Vec3 db(pb.dim.h, pb.dim.w, pb.dim.l);
    out.dimension += (da - db).squaredNorm() / 3.0;
    ++out.pairs;
  }
  if (out.pairs == 0) return out;
  const double inv = 1.0 / out.pairs;
  out.position *= inv;
  out.orientation *= inv;
  out.dimension *= inv;
  out.total = out.position + out.orientation + out.dimension;
  return out;
}

double semi_supervised_loss(double sup, double unsup, double t) { return sup + rampup(t) * unsup; }

}  // namespace km3d::losses
