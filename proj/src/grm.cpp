#include "km3d/grm.hpp"

#include <cmath>

#include "km3d/error.hpp"

namespace km3d::grm {

namespace {

struct CornerTerms {
  double lateral;  // x_c cos + z_c sin
  double depth;    // -x_c sin + z_c cos
  double height;   // y_c
};

CornerTerms corner_terms(const Vec3& c, double cos_t, double sin_t) {
  return {c.x() * cos_t + c.z() * sin_t, -c.x() * sin_t + c.z() * cos_t, c.y()};
}

void require_constraints(const KeypointMask& mask) {
  int kept = 0;
  for (bool m : mask) kept += m ? 1 : 0;
  if (kept < 2) {
    throw Error(ErrorCode::InsufficientConstraints, "need at least 2 keypoints, got " + std::to_string(kept));
  }
}

}  // namespace

LinearSystem build_system(const std::array<Vec2, kNumKeypoints>& norm_kps, const KeypointMask& mask,
                          const Dimension3D& dim, double theta) {
  require_constraints(mask);
  const auto corners = local_corners(dim);
  const double c = std::cos(theta);
  const double s = std::sin(theta);

  LinearSystem sys;
  for (int i = 0; i < kNumKeypoints; ++i) {
    if (mask[i]) sys.row_map.push_back(i);
  }
  const auto rows = static_cast<Eigen::Index>(2 * sys.row_map.size());
  sys.A.resize(rows, 3);
  sys.b.resize(rows);

  Eigen::Index r = 0;
  for (int i : sys.row_map) {
    const Vec2& n = norm_kps[i];
    const CornerTerms ct = corner_terms(corners[i], c, s);
    sys.A.row(r) << -1.0, 0.0, n.x();
    sys.b(r) = ct.lateral - n.x() * ct.depth;
    sys.A.row(r + 1) << 0.0, -1.0, n.y();
    sys.b(r + 1) = ct.height - n.y() * ct.depth;
    r += 2;
  }
  return sys;
}

PositionSolution solve_position(const LinearSystem& sys) {
  if (sys.A.rows() < 4) {
    throw Error(ErrorCode::InsufficientConstraints, "system has fewer than 4 rows");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (!(sv(2) >= kRankTolerance * sv(0)) || sv(0) == 0.0) {
    throw Error(ErrorCode::DegenerateSystem, "singular values " + std::to_string(sv(0)) + ", " +
                                                 std::to_string(sv(1)) + ", " + std::to_string(sv(2)));
  }
  PositionSolution out;
  const Eigen::VectorXd Utb = svd.matrixU().transpose() * sys.b;
  out.T = svd.matrixV() * Utb.cwiseQuotient(sv);
  out.singular_values = sv;
  out.residual = (sys.A * out.T - sys.b).norm();
  return out;
}

PositionSolution solve_full(const KeypointSet& kps, const Dimension3D& dim, double theta, const CameraModel& cam) {
  const LinearSystem sys = build_system(normalize_keypoints(cam, kps), kps.mask, dim, theta);
  PositionSolution out = solve_position(sys);
  out.T -= cam.t();
  if (!(out.T.z() > 0.0)) {
    throw Error(ErrorCode::BehindCamera, "solved Z = " + std::to_string(out.T.z()));
  }
  return out;
}

// With M = A^T A and residual r = b - A T', a perturbation of (A, b) moves the
// least-squares solution by dT' = M^-1 (dA^T r + A^T (db - dA T')). Every
// input touches only the row pair of its own keypoint, and A depends on the
// normalized keypoints alone (its third column).
GrmGradients grm_jacobian(const KeypointSet& kps, const Dimension3D& dim, double theta, const CameraModel& cam) {
  const auto norm = normalize_keypoints(cam, kps);
  const LinearSystem sys = build_system(norm, kps.mask, dim, theta);
  const PositionSolution sol = solve_position(sys);
  const Vec3& Tp = sol.T;
  const Eigen::VectorXd r = sys.b - sys.A * Tp;
  const Mat3 M_inv = (sys.A.transpose() * sys.A).inverse();

  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const auto corners = local_corners(dim);

  GrmGradients g;
  Eigen::Index row = 0;
  for (int i : sys.row_map) {
    const Vec2& n = norm[i];
    const Vec3 ax = sys.A.row(row).transpose();
    const Vec3 ay = sys.A.row(row + 1).transpose();
    const double rx = r(row);
    const double ry = r(row + 1);
    const CornerTerms ct = corner_terms(corners[i], c, s);

    // Normalized coordinates: A row gets e3, b row gets -depth.
    const Vec3 dT_dnx = M_inv * (Vec3::UnitZ() * rx + ax * (-ct.depth - Tp.z()));
    const Vec3 dT_dny = M_inv * (Vec3::UnitZ() * ry + ay * (-ct.depth - Tp.z()));

    // Chain to pixels: nx = (u - cx - skew ny) / fx, ny = (v - cy) / fy.
    g.dT_dkp.col(2 * i) = dT_dnx / cam.fx();
    g.dT_dkp.col(2 * i + 1) = dT_dny / cam.fy() - dT_dnx * cam.skew() / (cam.fx() * cam.fy());

    // b-only inputs contribute M^-1 (ax db_x + ay db_y).
    const int sx = kCornerTable[i][0];
    const int sy = kCornerTable[i][1];
    const int sz = kCornerTable[i][2];
    const double dbx_dh = 0.0;
    const double dby_dh = 0.5 * sy;
    const double dbx_dw = 0.5 * sz * (s - n.x() * c);
    const double dby_dw = -n.y() * 0.5 * sz * c;
    const double dbx_dl = 0.5 * sx * (c + n.x() * s);
    const double dby_dl = n.y() * 0.5 * sx * s;
    g.dT_ddim.col(0) += M_inv * (ax * dbx_dh + ay * dby_dh);
    g.dT_ddim.col(1) += M_inv * (ax * dbx_dw + ay * dby_dw);
    g.dT_ddim.col(2) += M_inv * (ax * dbx_dl + ay * dby_dl);

    const Vec3& cn = corners[i];
    const double dlateral = -cn.x() * s + cn.z() * c;
    const double ddepth = -cn.x() * c - cn.z() * s;
    g.dT_dtheta += M_inv * (ax * (dlateral - n.x() * ddepth) + ay * (-n.y() * ddepth));
    row += 2;
  }
  return g;
}

GrmInputGradients grm_backward(const KeypointSet& kps, const Dimension3D& dim, double theta,
                               const CameraModel& cam, const Vec3& dL_dT) {
  const GrmGradients J = grm_jacobian(kps, dim, theta, cam);
  GrmInputGradients out;
  out.dL_dkp = J.dT_dkp.transpose() * dL_dT;
  out.dL_ddim = J.dT_ddim.transpose() * dL_dT;
  out.dL_dtheta = J.dT_dtheta.dot(dL_dT);
  return out;
}

KeypointMask keypoint_dropout(std::mt19937_64& rng, double drop_prob, int min_keep) {
  if (min_keep < 2 || min_keep > kNumKeypoints) {
    throw Error(ErrorCode::InsufficientConstraints, "min_keep must lie in [2, 9]");
  }
  KeypointMask mask{};
  std::bernoulli_distribution drop(drop_prob);
  int kept = 0;
  for (auto& m : mask) {
    m = !drop(rng);
    kept += m ? 1 : 0;
  }
  while (kept < min_keep) {
    std::vector<int> dropped;
    for (int i = 0; i < kNumKeypoints; ++i) {
      if (!mask[i]) dropped.push_back(i);
    }
    std::uniform_int_distribution<std::size_t> pick(0, dropped.size() - 1);
    mask[dropped[pick(rng)]] = true;
    ++kept;
  }
  return mask;
}

}  // namespace km3d::grm
