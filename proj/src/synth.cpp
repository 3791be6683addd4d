#include "km3d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "km3d/error.hpp"
#include "km3d/grm.hpp"

namespace km3d::synth {

CameraModel kitti_camera() {
  Mat34 P;
  P << 7.215377e+02, 0.000000e+00, 6.095593e+02, 4.485728e+01, 0.000000e+00, 7.215377e+02, 1.728540e+02,
      2.163791e-01, 0.000000e+00, 0.000000e+00, 1.000000e+00, 2.745884e-03;
  return CameraModel::from_projection(P);
}

// ---------------------------------------------------------------------------
// Scene generation

namespace {

constexpr int kMaxAttempts = 1000;
constexpr double kMinCornerDepth = 0.5;

void draw_gaussian(Tensor3& heat, int channel, int cx, int cy, double radius) {
  const double sigma = (2.0 * radius + 1.0) / 6.0;
  const int r = static_cast<int>(std::ceil(radius));
  for (int y = std::max(0, cy - r); y <= std::min(heat.height() - 1, cy + r); ++y) {
    for (int x = std::max(0, cx - r); x <= std::min(heat.width() - 1, cx + r); ++x) {
      const double d2 = double(x - cx) * (x - cx) + double(y - cy) * (y - cy);
      const double v = std::exp(-d2 / (2.0 * sigma * sigma));
      heat.at(y, x, channel) = std::max(heat.at(y, x, channel), v);
    }
  }
}

}  // namespace

ObjectBox3D sample_box(std::mt19937_64& rng, const SceneSpec& spec) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const CameraModel& cam = spec.cam;

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    ObjectBox3D box;
    const double j = spec.dim_jitter;
    box.dim = {codec::kDimensionPrior.h * uniform(1.0 - j, 1.0 + j), codec::kDimensionPrior.w * uniform(1.0 - j, 1.0 + j),
               codec::kDimensionPrior.l * uniform(1.0 - j, 1.0 + j)};
    box.theta = normalize_angle(uniform(-std::numbers::pi, std::numbers::pi));
    const double Z = uniform(spec.z_min, spec.z_max);
    const Vec2 pixel(uniform(0.0, spec.image_width), uniform(0.0, spec.image_height));
    const Vec2 n = cam.normalize(pixel);
    const double depth = Z + cam.t().z();
    box.T = Vec3(n.x() * depth, n.y() * depth, depth) - cam.t();

    bool ok = true;
    for (const Vec3& p : box_points(box)) ok = ok && cam.depth(p) > kMinCornerDepth;
    if (!ok) continue;
    const Box2D b = bbox_from_3d(cam, box);
    const Vec2 c = b.center();
    if (c.x() < 0.0 || c.y() < 0.0 || c.x() >= spec.image_width || c.y() >= spec.image_height) continue;
    box.alpha = theta_to_alpha(box.theta, cam.project(box.T), cam);
    return box;
  }
  throw Error(ErrorCode::FrustumExhausted, "could not place an object inside the frustum");
}

Scene generate_scene(const SceneSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int stride = codec::kStride;
  const int map_w = spec.image_width / stride;
  const int map_h = spec.image_height / stride;

  Scene scene;
  scene.cam = spec.cam;
  scene.image_width = spec.image_width;
  scene.image_height = spec.image_height;
  scene.maps = codec::HeadMaps::zeros(map_h, map_w, spec.num_classes);

  for (int k = 0; k < spec.object_count; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      SceneObject obj;
      obj.box = sample_box(rng, spec);
      obj.bbox = bbox_from_3d(spec.cam, obj.box);
      obj.main_center = obj.bbox.center();
      obj.cell_x = static_cast<int>(std::floor(obj.main_center.x() / stride));
      obj.cell_y = static_cast<int>(std::floor(obj.main_center.y() / stride));
      if (obj.cell_x >= map_w || obj.cell_y >= map_h) continue;
      bool clear = true;
      for (const auto& other : scene.objects) {
        const int gap = std::max(std::abs(other.cell_x - obj.cell_x), std::abs(other.cell_y - obj.cell_y));
        clear = clear && gap >= spec.min_cell_gap;
      }
      if (!clear) continue;
      obj.exact_kps = project_box(spec.cam, obj.box);
      obj.kps = obj.exact_kps;
      if (spec.noise_sigma > 0.0) {
        for (auto& p : obj.kps.pts) p += spec.noise_sigma * Vec2(noise(rng), noise(rng));
      }
      scene.objects.push_back(std::move(obj));
      placed = true;
    }
    if (!placed) throw Error(ErrorCode::FrustumExhausted, "could not separate object " + std::to_string(k));
  }

  codec::HeadMaps& maps = scene.maps;
  for (const auto& obj : scene.objects) {
    const int x = obj.cell_x;
    const int y = obj.cell_y;
    const double radius = std::max(1.0, std::floor(std::min(obj.bbox.width(), obj.bbox.height()) / stride / 4.0));
    draw_gaussian(maps.main_center, 0, x, y, radius);
    for (int i = 0; i < kNumKeypoints; ++i) {
      maps.kp_offsets.at(y, x, 2 * i) = obj.kps.pts[i].x() / stride - x;
      maps.kp_offsets.at(y, x, 2 * i + 1) = obj.kps.pts[i].y() / stride - y;
    }
    const Vec3 delta = codec::encode_dimension(obj.box.dim);
    for (int c = 0; c < 3; ++c) maps.dim_residual.at(y, x, c) = delta(c);
    const auto ov = codec::encode_orientation(obj.box.alpha);
    for (int c = 0; c < codec::kOrientationChannels; ++c) maps.orient.at(y, x, c) = ov[static_cast<std::size_t>(c)];
    maps.conf3d.at(y, x, 0) = 1.0;
  }
  return scene;
}

std::vector<kitti::KittiObject> Scene::labels() const {
  std::vector<kitti::KittiObject> out;
  for (const auto& obj : objects) {
    kitti::KittiObject templ;
    templ.type = "Car";
    templ.bbox = obj.bbox;
    out.push_back(kitti::box_to_gt(obj.box, templ));
  }
  return out;
}

std::vector<codec::Prediction> Scene::predictions() const {
  std::vector<codec::Prediction> out;
  for (const auto& obj : objects) {
    codec::Prediction p;
    p.center = Vec2(obj.cell_x, obj.cell_y) * codec::kStride;
    p.score2d = 1.0;
    p.kps = obj.kps;
    p.dim = obj.box.dim;
    p.alpha = obj.box.alpha;
    p.conf3d = 1.0;
    p.fused = 1.0;
    p.theta = obj.box.theta;
    p.T = obj.box.T;
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gauss-Newton on pixel residuals

namespace {

// Signs of the 9 box points in units of (l/2, h/2, w/2).
constexpr double kSigns[9][3] = {{1, 1, 1},   {1, 1, -1},  {-1, 1, -1}, {-1, 1, 1}, {1, -1, 1},
                                 {1, -1, -1}, {-1, -1, -1}, {-1, -1, 1}, {0, 0, 0}};

// Solves the 3x3 system N x = g by Cramer's rule.
bool solve3(const double N[3][3], const double g[3], double x[3]) {
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double d = det3(N);
  if (!(std::abs(d) > 1e-300)) return false;
  for (int c = 0; c < 3; ++c) {
    double m[3][3];
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) m[r][k] = (k == c) ? g[r] : N[r][k];
    x[c] = det3(m) / d;
  }
  return true;
}

struct Reprojection {
  double cost = 0.0;
  double JtJ[3][3] = {};
  double Jtr[3] = {};
};

Reprojection reprojection(const KeypointSet& kps, const Dimension3D& dim, double theta, const Mat34& P,
                          const double T[3]) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Reprojection out;
  for (int i = 0; i < 9; ++i) {
    if (!kps.mask[i]) continue;
    const double lx = kSigns[i][0] * dim.l / 2.0;
    const double ly = kSigns[i][1] * dim.h / 2.0;
    const double lz = kSigns[i][2] * dim.w / 2.0;
    const double X[3] = {c * lx + s * lz + T[0], ly + T[1], -s * lx + c * lz + T[2]};
    double h[3];
    for (int r = 0; r < 3; ++r) h[r] = P(r, 0) * X[0] + P(r, 1) * X[1] + P(r, 2) * X[2] + P(r, 3);
    const double u = h[0] / h[2];
    const double v = h[1] / h[2];
    const double ru = u - kps.pts[i].x();
    const double rv = v - kps.pts[i].y();
    out.cost += ru * ru + rv * rv;
    // d(h0/h2)/dT_k = (P0k h2 - h0 P2k) / h2^2, since dX/dT = I.
    double Ju[3];
    double Jv[3];
    for (int k = 0; k < 3; ++k) {
      Ju[k] = (P(0, k) * h[2] - h[0] * P(2, k)) / (h[2] * h[2]);
      Jv[k] = (P(1, k) * h[2] - h[1] * P(2, k)) / (h[2] * h[2]);
    }
    for (int a = 0; a < 3; ++a) {
      out.Jtr[a] += Ju[a] * ru + Jv[a] * rv;
      for (int b = 0; b < 3; ++b) out.JtJ[a][b] += Ju[a] * Ju[b] + Jv[a] * Jv[b];
    }
  }
  return out;
}

}  // namespace

GaussNewtonResult gauss_newton_position(const KeypointSet& kps, const Dimension3D& dim, double theta,
                                        const CameraModel& cam, const Vec3& T0, int max_iterations,
                                        double step_tolerance) {
  int kept = 0;
  for (bool m : kps.mask) kept += m ? 1 : 0;
  if (kept < 2) throw Error(ErrorCode::InsufficientConstraints, "Gauss-Newton needs 2 keypoints");

  const Mat34& P = cam.P();
  double T[3] = {T0.x(), T0.y(), T0.z()};
  Reprojection cur = reprojection(kps, dim, theta, P, T);
  for (int it = 1; it <= max_iterations; ++it) {
    double step[3];
    const double neg[3] = {-cur.Jtr[0], -cur.Jtr[1], -cur.Jtr[2]};
    if (!solve3(cur.JtJ, neg, step)) {
      throw Error(ErrorCode::NoConvergence, "singular normal equations at iteration " + std::to_string(it));
    }
    // Step halving keeps the cost from increasing.
    double scale = 1.0;
    double trial[3];
    Reprojection next;
    for (int halving = 0; halving < 30; ++halving) {
      for (int k = 0; k < 3; ++k) trial[k] = T[k] + scale * step[k];
      next = reprojection(kps, dim, theta, P, trial);
      if (next.cost <= cur.cost || scale < 1e-6) break;
      scale *= 0.5;
    }
    const double step_norm = scale * std::sqrt(step[0] * step[0] + step[1] * step[1] + step[2] * step[2]);
    for (int k = 0; k < 3; ++k) T[k] = trial[k];
    cur = next;
    if (step_norm < step_tolerance) {
      return {Vec3(T[0], T[1], T[2]), it, std::sqrt(cur.cost / kept)};
    }
  }
  throw Error(ErrorCode::NoConvergence, "no convergence after " + std::to_string(max_iterations) +
                                            " iterations, last T = (" + std::to_string(T[0]) + ", " +
                                            std::to_string(T[1]) + ", " + std::to_string(T[2]) +
                                            "), rms = " + std::to_string(std::sqrt(cur.cost / kept)) + " px");
}

Eigen::MatrixXd finite_diff_gradients(const VectorFn& fn, const Eigen::VectorXd& x, double step) {
  const Eigen::VectorXd f0 = fn(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(k) += step;
    xm(k) -= step;
    J.col(k) = (fn(xp) - fn(xm)) / (2.0 * step);
  }
  return J;
}

GradientCheck check_grm_gradients(const KeypointSet& kps, const Dimension3D& dim, double theta,
                                  const CameraModel& cam, double step) {
  const grm::GrmGradients analytic = grm::grm_jacobian(kps, dim, theta, cam);

  // Inputs packed as (18 pixel coordinates, h, w, l, theta).
  Eigen::VectorXd x(2 * kNumKeypoints + 4);
  for (int i = 0; i < kNumKeypoints; ++i) {
    x(2 * i) = kps.pts[i].x();
    x(2 * i + 1) = kps.pts[i].y();
  }
  x.tail<4>() << dim.h, dim.w, dim.l, theta;
  const VectorFn solve = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    KeypointSet k = kps;
    for (int i = 0; i < kNumKeypoints; ++i) k.pts[i] = Vec2(v(2 * i), v(2 * i + 1));
    const Dimension3D d{v(18), v(19), v(20)};
    return grm::solve_full(k, d, v(21), cam).T;
  };
  const Eigen::MatrixXd numeric = finite_diff_gradients(solve, x, step);

  auto rel = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& n) {
    return (a - n).norm() / std::max(n.norm(), 1e-12);
  };
  GradientCheck out;
  out.keypoints = rel(analytic.dT_dkp, numeric.leftCols(2 * kNumKeypoints));
  out.dimension = rel(analytic.dT_ddim, numeric.middleCols(2 * kNumKeypoints, 3));
  out.theta = rel(analytic.dT_dtheta, numeric.rightCols(1));
  return out;
}

// ---------------------------------------------------------------------------
// Monte-Carlo IoU

namespace {

// Box with its yaw trigonometry cached for repeated point tests.
struct Solid {
  double c, s, x, y, z, hl, hh, hw;
  explicit Solid(const ObjectBox3D& b)
      : c(std::cos(b.theta)), s(std::sin(b.theta)), x(b.T.x()), y(b.T.y()), z(b.T.z()),
        hl(b.dim.l / 2.0), hh(b.dim.h / 2.0), hw(b.dim.w / 2.0) {}

  bool contains(double px, double py, double pz) const {
    const double dx = px - x;
    const double dz = pz - z;
    return std::abs(py - y) <= hh && std::abs(c * dx - s * dz) <= hl && std::abs(s * dx + c * dz) <= hw;
  }
};

void extend_bounds(const ObjectBox3D& box, double lo[3], double hi[3]) {
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  for (int sx = -1; sx <= 1; sx += 2) {
    for (int sy = -1; sy <= 1; sy += 2) {
      for (int sz = -1; sz <= 1; sz += 2) {
        const double lx = sx * box.dim.l / 2.0;
        const double lz = sz * box.dim.w / 2.0;
        const double p[3] = {box.T.x() + c * lx + s * lz, box.T.y() + sy * box.dim.h / 2.0,
                             box.T.z() - s * lx + c * lz};
        for (int k = 0; k < 3; ++k) {
          lo[k] = std::min(lo[k], p[k]);
          hi[k] = std::max(hi[k], p[k]);
        }
      }
    }
  }
}

}  // namespace

MonteCarloEstimate monte_carlo_iou3d(const ObjectBox3D& a, const ObjectBox3D& b, std::int64_t n,
                                     std::mt19937_64& rng) {
  double lo[3] = {1e300, 1e300, 1e300};
  double hi[3] = {-1e300, -1e300, -1e300};
  extend_bounds(a, lo, hi);
  extend_bounds(b, lo, hi);

  const auto m = static_cast<std::int64_t>(std::ceil(std::cbrt(static_cast<double>(n)) - 1e-9));
  // Top 53 bits of the engine output as a uniform double in [0, 1).
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const Solid sa(a);
  const Solid sb(b);
  std::int64_t in_a = 0;
  std::int64_t in_b = 0;
  std::int64_t in_both = 0;
  const double cell[3] = {(hi[0] - lo[0]) / m, (hi[1] - lo[1]) / m, (hi[2] - lo[2]) / m};
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < m; ++j) {
      for (std::int64_t k = 0; k < m; ++k) {
        const double px = lo[0] + (i + unit()) * cell[0];
        const double py = lo[1] + (j + unit()) * cell[1];
        const double pz = lo[2] + (k + unit()) * cell[2];
        const bool ia = sa.contains(px, py, pz);
        const bool ib = sb.contains(px, py, pz);
        in_a += ia;
        in_b += ib;
        in_both += ia && ib;
      }
    }
  }
  MonteCarloEstimate est;
  est.samples = m * m * m;
  const std::int64_t in_union = in_a + in_b - in_both;
  if (in_union == 0) return est;
  const double p = static_cast<double>(in_both) / static_cast<double>(in_union);
  est.value = p;
  est.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(in_union));
  return est;
}

// ---------------------------------------------------------------------------
// Naive references

double naive_focal_loss(const Tensor3& pred, const Tensor3& gt) {
  if (!pred.same_shape(gt)) throw Error(ErrorCode::ShapeMismatch, "shape mismatch");
  double total = 0.0;
  double count = 0.0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      for (int c = 0; c < gt.channels(); ++c) {
        double p = pred.at(y, x, c);
        if (p < 1e-7) p = 1e-7;
        if (p > 1.0 - 1e-7) p = 1.0 - 1e-7;
        const double g = gt.at(y, x, c);
        if (g == 1.0) {
          total += -(1.0 - p) * (1.0 - p) * std::log(p);
          count += 1.0;
        } else {
          const double neg_weight = (1.0 - g) * (1.0 - g) * (1.0 - g) * (1.0 - g);
          total += -neg_weight * p * p * std::log(1.0 - p);
        }
      }
    }
  }
  return total / (count > 0.0 ? count : 1.0);
}

double naive_multibin_loss(const codec::OrientationVector& pred, double alpha) {
  const double pi = std::numbers::pi;
  double a = alpha;
  while (a > pi) a -= 2 * pi;
  while (a <= -pi) a += 2 * pi;
  const bool member[2] = {a <= pi / 6 || a >= 5 * pi / 6, a >= -pi / 6 || a <= -5 * pi / 6};
  const double centers[2] = {-pi / 2, pi / 2};
  double loss = 0.0;
  for (int bin = 0; bin < 2; ++bin) {
    const double out_logit = pred[4 * bin];
    const double in_logit = pred[4 * bin + 1];
    const double p_in = std::exp(in_logit) / (std::exp(in_logit) + std::exp(out_logit));
    loss += member[bin] ? -std::log(p_in) : -std::log(1.0 - p_in);
    if (member[bin]) {
      const double d = a - centers[bin];
      loss += std::abs(pred[4 * bin + 2] - std::sin(d)) + std::abs(pred[4 * bin + 3] - std::cos(d));
    }
  }
  return loss;
}

std::vector<codec::Peak> naive_peaks(const Tensor3& map, double threshold) {
  const int H = map.height();
  const int W = map.width();
  std::vector<codec::Peak> peaks;
  for (int c = 0; c < map.channels(); ++c) {
    // First pass: 3x3 max pool. Second pass: keep a cell iff it equals the
    // pooled value and it is the first maximal cell (row-major) of its window.
    std::vector<double> pooled(static_cast<std::size_t>(H) * W, -1e300);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int yy = y - 1; yy <= y + 1; ++yy)
          for (int xx = x - 1; xx <= x + 1; ++xx)
            if (yy >= 0 && yy < H && xx >= 0 && xx < W)
              pooled[static_cast<std::size_t>(y) * W + x] =
                  std::max(pooled[static_cast<std::size_t>(y) * W + x], map.at(yy, xx, c));
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double v = map.at(y, x, c);
        if (v < threshold || v != pooled[static_cast<std::size_t>(y) * W + x]) continue;
        int first_y = -1;
        int first_x = -1;
        for (int yy = y - 1; yy <= y + 1 && first_y < 0; ++yy)
          for (int xx = x - 1; xx <= x + 1; ++xx)
            if (yy >= 0 && yy < H && xx >= 0 && xx < W && map.at(yy, xx, c) == v) {
              first_y = yy;
              first_x = xx;
              break;
            }
        if (first_y == y && first_x == x) peaks.push_back({c, y, x, v});
      }
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const codec::Peak& a, const codec::Peak& b) { return a.score > b.score; });
  return peaks;
}

// ---------------------------------------------------------------------------
// Brute-force AP

namespace {

double fixture_overlap(const kitti::KittiObject& d, const kitti::KittiObject& g, eval::Metric metric) {
  switch (metric) {
    case eval::Metric::AP2D:
    case eval::Metric::AOS: return eval::iou_2d(d.bbox, g.bbox);
    case eval::Metric::APBEV: return eval::bev_iou(eval::to_bev(kitti::gt_to_box(d)), eval::to_bev(kitti::gt_to_box(g)));
    case eval::Metric::AP3D: return eval::iou_3d(kitti::gt_to_box(d), kitti::gt_to_box(g));
  }
  return 0.0;
}

// Largest matching between dets and gts where edge[d][g] is allowed.
int max_matching(const std::vector<std::vector<bool>>& edge, std::size_t d, std::vector<bool>& used) {
  if (d == edge.size()) return 0;
  int best = max_matching(edge, d + 1, used);
  for (std::size_t g = 0; g < used.size(); ++g) {
    if (!edge[d][g] || used[g]) continue;
    used[g] = true;
    best = std::max(best, 1 + max_matching(edge, d + 1, used));
    used[g] = false;
  }
  return best;
}

}  // namespace

double brute_force_ap(const std::vector<eval::Frame>& frames, const eval::EvalConfig& cfg) {
  struct Ranked {
    double score;
    std::size_t frame;
    std::size_t det;
  };
  std::vector<Ranked> ranked;
  int num_gt = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (const auto& g : frames[f].gts) num_gt += g.type == cfg.class_name ? 1 : 0;
    for (std::size_t j = 0; j < frames[f].dets.size(); ++j) {
      if (frames[f].dets[j].type == cfg.class_name) ranked.push_back({frames[f].dets[j].score.value_or(0.0), f, j});
    }
  }
  if (num_gt == 0) return 0.0;
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

  std::vector<double> precision;
  std::vector<double> recall;
  for (std::size_t k = 1; k <= ranked.size(); ++k) {
    int tp = 0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      std::vector<std::size_t> gts;
      for (std::size_t g = 0; g < frames[f].gts.size(); ++g)
        if (frames[f].gts[g].type == cfg.class_name) gts.push_back(g);
      std::vector<std::vector<bool>> edge;
      for (std::size_t r = 0; r < k; ++r) {
        if (ranked[r].frame != f) continue;
        std::vector<bool> row;
        for (std::size_t g : gts) {
          row.push_back(fixture_overlap(frames[f].dets[ranked[r].det], frames[f].gts[g], cfg.metric) >=
                        cfg.iou_threshold);
        }
        edge.push_back(row);
      }
      std::vector<bool> used(gts.size(), false);
      tp += max_matching(edge, 0, used);
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k));
    recall.push_back(static_cast<double>(tp) / num_gt);
  }

  double sum = 0.0;
  const auto points = eval::recall_points(cfg.sampling);
  for (double r : points) {
    double best = 0.0;
    for (std::size_t k = 0; k < precision.size(); ++k) {
      if (recall[k] >= r - 1e-12) best = std::max(best, precision[k]);
    }
    sum += best;
  }
  return sum / static_cast<double>(points.size());
}

}  // namespace km3d::synth
