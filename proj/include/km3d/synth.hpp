#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "km3d/codec.hpp"
#include "km3d/eval.hpp"
#include "km3d/geometry.hpp"
#include "km3d/kitti_io.hpp"

// Reference machinery used to check the production modules. Each oracle
// avoids the code path it verifies: Gauss-Newton never touches the linear
// solver, the Monte-Carlo IoU never clips polygons, the naive losses are
// written out from their definitions.
namespace km3d::synth {

/// KITTI object 000000 left color camera.
CameraModel kitti_camera();
inline constexpr int kKittiWidth = 1242;
inline constexpr int kKittiHeight = 375;

struct SceneSpec {
  std::uint64_t seed = 7;
  int object_count = 3;
  double dim_jitter = 0.3;  ///< +-fraction around the dimension prior
  double z_min = 4.0;
  double z_max = 60.0;
  double noise_sigma = 0.0;  ///< keypoint pixel noise
  CameraModel cam = kitti_camera();
  int image_width = kKittiWidth;
  int image_height = kKittiHeight;
  int num_classes = 1;
  int min_cell_gap = 2;  ///< Chebyshev distance between main-center cells
};

struct SceneObject {
  ObjectBox3D box;
  KeypointSet exact_kps;
  KeypointSet kps;  ///< exact_kps plus noise
  Box2D bbox;
  Vec2 main_center = Vec2::Zero();  ///< center of the 2D box, pixels
  int cell_x = 0;
  int cell_y = 0;
};

struct Scene {
  CameraModel cam;
  int image_width = 0;
  int image_height = 0;
  std::vector<SceneObject> objects;
  codec::HeadMaps maps;

  /// Ground truth as KITTI labels (bottom-center locations).
  std::vector<kitti::KittiObject> labels() const;
  /// Canonical predictions exactly as the heads would decode them.
  std::vector<codec::Prediction> predictions() const;
};

/// Throws FrustumExhausted if an object cannot be placed in 1000 attempts.
Scene generate_scene(const SceneSpec& spec);

/// Samples one box whose 9 points all lie more than 0.5 m in front of the camera
/// and whose projected 2D center falls inside the image.
ObjectBox3D sample_box(std::mt19937_64& rng, const SceneSpec& spec);

struct GaussNewtonResult {
  Vec3 T = Vec3::Zero();
  int iterations = 0;
  double rms_pixels = 0.0;
};

/// Minimizes the pixel reprojection error of the kept keypoints over T.
/// Throws NoConvergence after max_iterations.
GaussNewtonResult gauss_newton_position(const KeypointSet& kps, const Dimension3D& dim, double theta,
                                        const CameraModel& cam, const Vec3& T0, int max_iterations = 100,
                                        double step_tolerance = 1e-10);

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central differences, one column per input component.
Eigen::MatrixXd finite_diff_gradients(const VectorFn& fn, const Eigen::VectorXd& x, double step = 1e-5);

struct GradientCheck {
  double keypoints = 0.0;  ///< relative Frobenius error of dT/dkp
  double dimension = 0.0;
  double theta = 0.0;

  double max() const { return std::max({keypoints, dimension, theta}); }
};

/// Compares grm::grm_jacobian with central differences of grm::solve_full.
/// Each block error is ||J_analytic - J_numeric||_F / max(||J_numeric||_F, 1e-12).
GradientCheck check_grm_gradients(const KeypointSet& kps, const Dimension3D& dim, double theta,
                                  const CameraModel& cam, double step = 1e-5);

struct MonteCarloEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::int64_t samples = 0;
};

/// Stratified uniform sampling of the union's axis-aligned bounding volume.
MonteCarloEstimate monte_carlo_iou3d(const ObjectBox3D& a, const ObjectBox3D& b, std::int64_t n,
                                     std::mt19937_64& rng);

/// Straight double-loop focal loss.
double naive_focal_loss(const Tensor3& pred, const Tensor3& gt);
/// Multi-Bin loss evaluated from first principles.
double naive_multibin_loss(const codec::OrientationVector& pred, double alpha);

/// Peak test by explicit neighbourhood comparison against the max-pooled map.
std::vector<codec::Peak> naive_peaks(const Tensor3& map, double threshold);

/**
 * AP by exhaustive enumeration: for every score-ranked prefix the number of
 * true positives is the maximum one-to-one matching between prefix
 * detections and ground truth (IoU >= threshold, same image). Meant for
 * small hand fixtures in which every GT is valid.
 */
double brute_force_ap(const std::vector<eval::Frame>& frames, const eval::EvalConfig& cfg);

}  // namespace km3d::synth
