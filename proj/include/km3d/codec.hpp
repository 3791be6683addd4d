#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "km3d/geometry.hpp"

namespace km3d {

/// Dense H x W x C tensor, row-major with channels innermost.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int height, int width, int channels, double fill = 0.0)
      : height_(height), width_(width), channels_(channels),
        data_(static_cast<std::size_t>(height) * width * channels, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  bool same_shape(const Tensor3& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  double& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

namespace codec {

inline constexpr int kStride = 4;
inline constexpr double kPeakThreshold = 0.4;
inline constexpr int kOrientationChannels = 8;
/// Magnitude of the saturated membership logits written by encode_orientation.
inline constexpr double kSaturatedLogit = 10.0;

/// Average KITTI car size used as the dimension prior.
inline constexpr Dimension3D kDimensionPrior{1.63, 1.53, 3.88};

/// Centers of the two overlapping orientation bins.
inline constexpr double kBinCenters[2] = {-std::numbers::pi / 2.0, std::numbers::pi / 2.0};

using OrientationVector = std::array<double, kOrientationChannels>;

struct HeadMaps {
  Tensor3 main_center;  ///< one channel per class, in [0, 1]
  Tensor3 kp_offsets;   ///< 18 channels, offsets in cells from the peak cell
  Tensor3 dim_residual; ///< 3 channels (h, w, l) log-residuals
  Tensor3 orient;       ///< 8 channels, Multi-Bin layout
  Tensor3 conf3d;       ///< 1 channel, in [0, 1]
  int stride = kStride;

  static HeadMaps zeros(int height, int width, int num_classes);
  /// Throws ShapeMismatch if spatial extents or channel counts disagree.
  void validate() const;
};

struct Peak {
  int class_id = 0;
  int y = 0;
  int x = 0;
  double score = 0.0;
};

struct Prediction {
  int class_id = 0;
  Vec2 center = Vec2::Zero();
  double score2d = 0.0;
  KeypointSet kps;
  Dimension3D dim;
  double alpha = 0.0;
  double conf3d = 0.0;
  double fused = 0.0;
  std::optional<double> theta;
  std::optional<Vec3> T;
};

Dimension3D decode_dimension(const Vec3& delta);
Vec3 encode_dimension(const Dimension3D& dim);

/// Whether alpha lies inside bin 0 ([-7pi/6, pi/6]) or bin 1 ([-pi/6, 7pi/6]).
bool in_bin(int bin, double alpha);

/// Layout: [bin0 logits(out, in), bin0 sin, bin0 cos, bin1 logits(out, in), bin1 sin, bin1 cos].
OrientationVector encode_orientation(double alpha);
double decode_orientation(const OrientationVector& v);

/// 3x3 non-maximum suppression per class channel. Ties inside a window go to
/// the lexicographically smallest (y, x) cell. Sorted by descending score.
std::vector<Peak> extract_peaks(const Tensor3& main_center, double threshold = kPeakThreshold);

struct DecodeOptions {
  double threshold = kPeakThreshold;
  bool run_grm = true;
  std::size_t top_k = 0;  ///< 0 keeps every peak
};

std::vector<Prediction> decode_objects(const HeadMaps& maps, const CameraModel& cam,
                                       const DecodeOptions& options = {});

/// Binary HeadMaps container, see docs/headmaps_format.md.
void write_head_maps(std::ostream& os, const HeadMaps& maps);
HeadMaps read_head_maps(std::istream& is);
void save_head_maps(const std::string& path, const HeadMaps& maps);
HeadMaps load_head_maps(const std::string& path);

}  // namespace codec
}  // namespace km3d
