#pragma once

#include <array>
#include <numbers>

#include <Eigen/Dense>

namespace km3d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

inline constexpr int kNumKeypoints = 9;
/// Index of the projected 3D center inside a KeypointSet (0-based).
inline constexpr int kCenterKeypoint = 8;

/**
 * Pinhole camera described by a 3x4 projection matrix P = K [I | t].
 *
 * K is upper triangular with K(2,2) = 1; t is the camera offset in meters
 * (the stereo baseline term of KITTI's P2/P3 matrices).
 */
class CameraModel {
 public:
  /// Decomposes P; throws InvalidCamera if K is not upper triangular with
  /// positive focal lengths and unit K(2,2).
  static CameraModel from_projection(const Mat34& P);
  static CameraModel from_intrinsics(double fx, double fy, double cx, double cy, const Vec3& t = Vec3::Zero());

  const Mat34& P() const { return P_; }
  const Mat3& K() const { return K_; }
  const Vec3& t() const { return t_; }
  double fx() const { return K_(0, 0); }
  double fy() const { return K_(1, 1); }
  double cx() const { return K_(0, 2); }
  double cy() const { return K_(1, 2); }
  double skew() const { return K_(0, 1); }

  /// K^-1 (u, v, 1), first two components.
  Vec2 normalize(const Vec2& pixel) const;
  Vec2 denormalize(const Vec2& normalized) const;

  /// Homogeneous depth of a camera-frame point, i.e. Z + t_z.
  double depth(const Vec3& point) const { return point.z() + t_.z(); }
  Vec2 project(const Vec3& point) const;

 private:
  Mat34 P_ = Mat34::Zero();
  Mat3 K_ = Mat3::Identity();
  Vec3 t_ = Vec3::Zero();
};

struct Dimension3D {
  double h = 0.0;
  double w = 0.0;
  double l = 0.0;

  bool valid() const { return h > 0.0 && w > 0.0 && l > 0.0; }
};

/// Center-anchored 3D box in the camera frame (y points down).
struct ObjectBox3D {
  Dimension3D dim;
  double theta = 0.0;  ///< global yaw about the camera y axis
  double alpha = 0.0;  ///< local orientation relative to the viewing ray
  Vec3 T = Vec3::Zero();
};

using KeypointMask = std::array<bool, kNumKeypoints>;

inline constexpr KeypointMask kAllKept = {true, true, true, true, true, true, true, true, true};

/// 8 box corners followed by the projected 3D center, pixel coordinates.
struct KeypointSet {
  std::array<Vec2, kNumKeypoints> pts{};
  KeypointMask mask = kAllKept;

  int kept() const;
};

/// Local corner signs in units of (l/2, h/2, w/2). Row i is keypoint i; the
/// final row is the box center.
inline constexpr std::array<std::array<int, 3>, kNumKeypoints> kCornerTable = {{
    {+1, +1, +1},
    {+1, +1, -1},
    {-1, +1, -1},
    {-1, +1, +1},
    {+1, -1, +1},
    {+1, -1, -1},
    {-1, -1, -1},
    {-1, -1, +1},
    {0, 0, 0},
}};

struct Box2D {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  Vec2 center() const { return {0.5 * (u_min + u_max), 0.5 * (v_min + v_max)}; }
};

/// Folds an angle into (-pi, pi] by repeated 2*pi steps.
double normalize_angle(double angle);

std::array<Vec3, kNumKeypoints> local_corners(const Dimension3D& dim);
Mat3 rotate_y(double theta);

/// Camera-frame positions of the 8 corners and center of a box.
std::array<Vec3, kNumKeypoints> box_points(const ObjectBox3D& box);

/// Throws NonPositiveDepth when any of the 9 points has depth <= 1e-6 m.
KeypointSet project_box(const CameraModel& cam, const ObjectBox3D& box);

std::array<Vec2, kNumKeypoints> normalize_keypoints(const CameraModel& cam, const KeypointSet& kps);

/// Horizontal angle of the viewing ray through an image point.
double ray_angle(const Vec2& center_kp, const CameraModel& cam);
double alpha_to_theta(double alpha, const Vec2& center_kp, const CameraModel& cam);
double theta_to_alpha(double theta, const Vec2& center_kp, const CameraModel& cam);

/// Tightest 2D box around the 8 projected corners.
Box2D bbox_from_3d(const CameraModel& cam, const ObjectBox3D& box);

}  // namespace km3d
