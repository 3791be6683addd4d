#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "km3d/geometry.hpp"

namespace km3d::kitti {

struct KittiObject {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  Box2D bbox;
  double h = 0.0;
  double w = 0.0;
  double l = 0.0;
  Vec3 location = Vec3::Zero();  ///< bottom center, camera frame
  double rotation_y = 0.0;
  std::optional<double> score;
};

enum class Difficulty { Easy = 0, Moderate = 1, Hard = 2, Ignored = 3 };

const char* to_string(Difficulty d);

struct CalibFile {
  /// Every "key: values" line in file order of appearance.
  std::map<std::string, std::vector<double>> entries;
  CameraModel p2;

  /// 3x4 matrix for keys holding 12 values (P0..P3, Tr_*).
  Mat34 matrix(const std::string& key) const;
};

/// Throws ParseError(MissingKey) without a P2 line and ParseError(MalformedNumber)
/// at the offending token.
CalibFile parse_calib(std::string_view text);
CalibFile load_calib(const std::string& path);

/// Accepts 15 (ground truth) or 16 (result) fields per non-empty line.
std::vector<KittiObject> parse_labels(std::string_view text);
std::vector<KittiObject> load_labels(const std::string& path);

/// 16 fields per line, all reals with two decimals. Missing scores print as 1.00.
std::string write_results(const std::vector<KittiObject>& objects);
/// 15 fields per line, no score column.
std::string write_labels(const std::vector<KittiObject>& objects);

/// Tightest KITTI split an object qualifies for.
Difficulty difficulty(const KittiObject& obj);
/// Cumulative split membership as used by the benchmark (Hard includes Easy).
bool meets(const KittiObject& obj, Difficulty level);
double min_height(Difficulty level);

/// Bottom-center KITTI location to the center-anchored internal box.
ObjectBox3D gt_to_box(const KittiObject& obj);
/// Inverse of gt_to_box; bbox, truncation and occlusion come from `templ`.
KittiObject box_to_gt(const ObjectBox3D& box, const KittiObject& templ = {});

}  // namespace km3d::kitti
