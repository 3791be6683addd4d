#pragma once

#include <random>
#include <vector>

#include "km3d/geometry.hpp"

namespace km3d::grm {

/// Smallest-to-largest singular value ratio below which a system is rank deficient.
inline constexpr double kRankTolerance = 1e-10;
inline constexpr double kDefaultDropProb = 0.5;

/**
 * Overdetermined 2k x 3 system A T' = b for the camera-offset position
 * T' = T + t. Rows come in (x, y) pairs, one pair per kept keypoint.
 */
struct LinearSystem {
  Eigen::Matrix<double, Eigen::Dynamic, 3> A;
  Eigen::VectorXd b;
  std::vector<int> row_map;  ///< keypoint index of each row pair
};

struct PositionSolution {
  Vec3 T = Vec3::Zero();
  Vec3 singular_values = Vec3::Zero();  ///< descending
  double residual = 0.0;                ///< ||A T' - b||_2
};

/// Jacobians of the solved position with respect to every input.
struct GrmGradients {
  Eigen::Matrix<double, 3, 2 * kNumKeypoints> dT_dkp = Eigen::Matrix<double, 3, 2 * kNumKeypoints>::Zero();
  Mat3 dT_ddim = Mat3::Zero();  ///< columns ordered (h, w, l)
  Vec3 dT_dtheta = Vec3::Zero();
};

/// Upstream dL/dT pushed back through the solver.
struct GrmInputGradients {
  Eigen::Matrix<double, 2 * kNumKeypoints, 1> dL_dkp = Eigen::Matrix<double, 2 * kNumKeypoints, 1>::Zero();
  Vec3 dL_ddim = Vec3::Zero();  ///< (h, w, l)
  double dL_dtheta = 0.0;
};

LinearSystem build_system(const std::array<Vec2, kNumKeypoints>& norm_kps, const KeypointMask& mask,
                          const Dimension3D& dim, double theta);

/// Pseudo-inverse solve through the SVD of A. The returned T is T' (no camera
/// offset removed).
PositionSolution solve_position(const LinearSystem& sys);

/// Full pipeline from pixel keypoints to camera-frame box center.
PositionSolution solve_full(const KeypointSet& kps, const Dimension3D& dim, double theta, const CameraModel& cam);

GrmGradients grm_jacobian(const KeypointSet& kps, const Dimension3D& dim, double theta, const CameraModel& cam);

GrmInputGradients grm_backward(const KeypointSet& kps, const Dimension3D& dim, double theta,
                               const CameraModel& cam, const Vec3& dL_dT);

/// Independent Bernoulli drop per keypoint, repaired up to min_keep kept.
KeypointMask keypoint_dropout(std::mt19937_64& rng, double drop_prob = kDefaultDropProb, int min_keep = 2);

}  // namespace km3d::grm
