#include "km3d/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace km3d::eval {

namespace {

constexpr double kMergeEps = 1e-9;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Intersection of segment p->q with the infinite line through a->b.
Vec2 line_intersection(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) {
  const Vec2 r = q - p;
  const Vec2 s = b - a;
  const double denom = cross(r, s);
  if (std::abs(denom) < 1e-300) return p;
  const double t = cross(a - p, s) / denom;
  return p + t * r;
}

std::vector<Vec2> merge_close(const std::vector<Vec2>& poly) {
  std::vector<Vec2> out;
  for (const auto& p : poly) {
    if (out.empty() || (p - out.back()).norm() > kMergeEps) out.push_back(p);
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() <= kMergeEps) out.pop_back();
  return out;
}

}  // namespace

BevBox to_bev(const ObjectBox3D& box) { return {box.T.x(), box.T.z(), box.dim.l, box.dim.w, box.theta}; }

std::array<Vec2, 4> bev_corners(const BevBox& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  // Same ground-plane rotation as rotate_y: x = lx c + lz s, z = -lx s + lz c.
  constexpr double signs[4][2] = {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    const double lx = signs[i][0] * box.l / 2.0;
    const double lz = signs[i][1] * box.w / 2.0;
    out[i] = Vec2(box.x + lx * c + lz * s, box.z - lx * s + lz * c);
  }
  if (cross(out[1] - out[0], out[2] - out[1]) < 0.0) std::reverse(out.begin(), out.end());
  return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
  const auto p = merge_close(poly);
  if (p.size() < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) a += cross(p[i], p[(i + 1) % p.size()]);
  return std::abs(a) / 2.0;
}

std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip) {
  std::vector<Vec2> output = subject;
  for (std::size_t e = 0; e < clip.size() && !output.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    const Vec2 edge = b - a;
    std::vector<Vec2> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2& cur = input[i];
      const Vec2& prev = input[(i + input.size() - 1) % input.size()];
      const bool cur_in = cross(edge, cur - a) >= 0.0;
      const bool prev_in = cross(edge, prev - a) >= 0.0;
      if (cur_in) {
        if (!prev_in) output.push_back(line_intersection(prev, cur, a, b));
        output.push_back(cur);
      } else if (prev_in) {
        output.push_back(line_intersection(prev, cur, a, b));
      }
    }
  }
  return merge_close(output);
}

double iou_2d(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.width() * a.height() + b.width() * b.height() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double bev_intersection(const BevBox& a, const BevBox& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  return polygon_area(clip_convex({ca.begin(), ca.end()}, {cb.begin(), cb.end()}));
}

double bev_iou(const BevBox& a, const BevBox& b) {
  const double inter = bev_intersection(a, b);
  const double uni = a.l * a.w + b.l * b.w - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double iou_3d(const ObjectBox3D& a, const ObjectBox3D& b) {
  const double top = std::max(a.T.y() - a.dim.h / 2.0, b.T.y() - b.dim.h / 2.0);
  const double bottom = std::min(a.T.y() + a.dim.h / 2.0, b.T.y() + b.dim.h / 2.0);
  const double overlap_h = bottom - top;
  if (overlap_h <= 0.0) return 0.0;
  const double inter = bev_intersection(to_bev(a), to_bev(b)) * overlap_h;
  const double va = a.dim.h * a.dim.w * a.dim.l;
  const double vb = b.dim.h * b.dim.w * b.dim.l;
  const double uni = va + vb - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

const char* to_string(Metric m) {
  switch (m) {
    case Metric::AP2D: return "2d";
    case Metric::APBEV: return "bev";
    case Metric::AP3D: return "3d";
    case Metric::AOS: return "aos";
  }
  return "unknown";
}

const char* to_string(Sampling s) { return s == Sampling::Eleven ? "ap11" : "ap40"; }

std::vector<double> recall_points(Sampling s) {
  std::vector<double> pts;
  if (s == Sampling::Eleven) {
    for (int i = 0; i <= 10; ++i) pts.push_back(i / 10.0);
  } else {
    for (int i = 1; i <= 40; ++i) pts.push_back(i / 40.0);
  }
  return pts;
}

double default_threshold(const std::string& class_name) {
  return class_name == "Car" ? 0.7 : 0.5;
}

namespace {

enum class GtRole { Valid, Ignored, DontCare, Other };

bool neighbor_class(const std::string& cls, const std::string& type) {
  return (cls == "Car" && type == "Van") || (cls == "Pedestrian" && type == "Person_sitting");
}

GtRole gt_role(const kitti::KittiObject& gt, const EvalConfig& cfg, kitti::Difficulty level) {
  if (gt.type == "DontCare") return GtRole::DontCare;
  if (gt.type == cfg.class_name) return kitti::meets(gt, level) ? GtRole::Valid : GtRole::Ignored;
  if (neighbor_class(cfg.class_name, gt.type)) return GtRole::Ignored;
  return GtRole::Other;
}

double overlap(const kitti::KittiObject& det, const kitti::KittiObject& gt, Metric metric) {
  switch (metric) {
    case Metric::AP2D:
    case Metric::AOS: return iou_2d(det.bbox, gt.bbox);
    case Metric::APBEV: return bev_iou(to_bev(kitti::gt_to_box(det)), to_bev(kitti::gt_to_box(gt)));
    case Metric::AP3D: return iou_3d(kitti::gt_to_box(det), kitti::gt_to_box(gt));
  }
  return 0.0;
}

// Intersection over the detection's own area, used against DontCare regions.
double covered_fraction(const Box2D& det, const Box2D& region) {
  const double iw = std::min(det.u_max, region.u_max) - std::max(det.u_min, region.u_min);
  const double ih = std::min(det.v_max, region.v_max) - std::max(det.v_min, region.v_min);
  const double area = det.width() * det.height();
  if (iw <= 0.0 || ih <= 0.0 || area <= 0.0) return 0.0;
  return iw * ih / area;
}

struct Assignment {
  double score;
  bool tp;
  double similarity;
};

}  // namespace

ApResult average_precision(const std::vector<Frame>& frames, const EvalConfig& cfg, kitti::Difficulty level) {
  std::vector<Assignment> assigned;
  int num_gt = 0;

  for (const Frame& frame : frames) {
    std::vector<GtRole> roles;
    roles.reserve(frame.gts.size());
    for (const auto& gt : frame.gts) {
      roles.push_back(gt_role(gt, cfg, level));
      if (roles.back() == GtRole::Valid) ++num_gt;
    }
    std::vector<bool> taken(frame.gts.size(), false);

    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < frame.dets.size(); ++j) {
      const auto& d = frame.dets[j];
      if (d.type != cfg.class_name) continue;
      if (d.bbox.height() < kitti::min_height(level)) continue;
      order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return frame.dets[a].score.value_or(0.0) > frame.dets[b].score.value_or(0.0);
    });

    for (std::size_t j : order) {
      const auto& det = frame.dets[j];
      auto best_match = [&](GtRole role) {
        int best = -1;
        double best_iou = cfg.iou_threshold;
        for (std::size_t i = 0; i < frame.gts.size(); ++i) {
          if (roles[i] != role || taken[i]) continue;
          const double iou = overlap(det, frame.gts[i], cfg.metric);
          if (iou >= best_iou && (best < 0 || iou > best_iou)) {
            best = static_cast<int>(i);
            best_iou = iou;
          }
        }
        return best;
      };

      const int valid = best_match(GtRole::Valid);
      if (valid >= 0) {
        taken[static_cast<std::size_t>(valid)] = true;
        const double delta = det.rotation_y - frame.gts[static_cast<std::size_t>(valid)].rotation_y;
        assigned.push_back({det.score.value_or(0.0), true, (1.0 + std::cos(delta)) / 2.0});
        continue;
      }
      const int ignored = best_match(GtRole::Ignored);
      if (ignored >= 0) {
        taken[static_cast<std::size_t>(ignored)] = true;
        continue;
      }
      bool in_dontcare = false;
      for (std::size_t i = 0; i < frame.gts.size() && !in_dontcare; ++i) {
        in_dontcare = roles[i] == GtRole::DontCare &&
                      covered_fraction(det.bbox, frame.gts[i].bbox) >= cfg.iou_threshold;
      }
      if (in_dontcare) continue;
      assigned.push_back({det.score.value_or(0.0), false, 0.0});
    }
  }

  std::stable_sort(assigned.begin(), assigned.end(),
                   [](const Assignment& a, const Assignment& b) { return a.score > b.score; });

  ApResult result;
  PrCurve& curve = result.curve;
  curve.num_gt = num_gt;
  curve.recall_points = recall_points(cfg.sampling);

  std::vector<double> quality;  // precision, or accumulated similarity for AOS
  int tp = 0;
  double sim = 0.0;
  for (std::size_t k = 0; k < assigned.size(); ++k) {
    tp += assigned[k].tp ? 1 : 0;
    sim += assigned[k].similarity;
    const double count = static_cast<double>(k + 1);
    curve.scores.push_back(assigned[k].score);
    curve.is_tp.push_back(assigned[k].tp);
    curve.precision.push_back(tp / count);
    curve.recall.push_back(num_gt > 0 ? static_cast<double>(tp) / num_gt : 0.0);
    quality.push_back(cfg.metric == Metric::AOS ? sim / count : tp / count);
  }

  // Right-to-left running max gives the interpolated envelope.
  std::vector<double> envelope(quality.size());
  double running = 0.0;
  for (std::size_t k = quality.size(); k-- > 0;) {
    running = std::max(running, quality[k]);
    envelope[k] = running;
  }

  for (double r : curve.recall_points) {
    double p = 0.0;
    if (num_gt > 0) {
      for (std::size_t k = 0; k < envelope.size(); ++k) {
        if (curve.recall[k] >= r - 1e-12) {
          p = envelope[k];
          break;
        }
      }
    }
    curve.sampled.push_back(p);
  }
  result.ap = curve.sampled.empty()
                  ? 0.0
                  : std::accumulate(curve.sampled.begin(), curve.sampled.end(), 0.0) / curve.sampled.size();
  return result;
}

std::array<ApResult, 3> evaluate(const std::vector<Frame>& frames, const EvalConfig& cfg) {
  return {average_precision(frames, cfg, kitti::Difficulty::Easy),
          average_precision(frames, cfg, kitti::Difficulty::Moderate),
          average_precision(frames, cfg, kitti::Difficulty::Hard)};
}

}  // namespace km3d::eval
