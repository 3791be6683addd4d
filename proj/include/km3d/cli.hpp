#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "km3d/augment.hpp"
#include "km3d/eval.hpp"
#include "km3d/losses.hpp"

namespace km3d::cli {

/// Stable process exit codes.
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInputError = 2, kDegenerate = 3 };

inline constexpr std::uint64_t kDefaultSeed = 20200925;
/// KM3D_SEED overrides kDefaultSeed when set to an unsigned integer.
std::uint64_t default_seed();

enum class Format { Csv, Json };

struct SolveOptions {
  std::string calib_path;
  std::string maps_path;                  ///< empty: use a generated fixture
  std::optional<std::uint64_t> fixture_seed;
  int fixture_objects = 3;
  int drop_keypoints = 0;                 ///< keypoints removed per object, 0..7
  std::uint64_t seed = kDefaultSeed;
  double threshold = 0.4;
  std::size_t top_k = 0;
  Format format = Format::Csv;
};

struct GradcheckOptions {
  int trials = 100;
  std::uint64_t seed = kDefaultSeed;
  double tolerance = 1e-4;
  double drop_prob = 0.5;
};

struct EvalOptions {
  std::string det_dir;
  std::string gt_dir;
  std::string calib_dir;  ///< optional; when set every stem needs a calib file
  std::string class_name = "Car";
  std::vector<eval::Metric> metrics = {eval::Metric::AP2D, eval::Metric::APBEV, eval::Metric::AP3D};
  eval::Sampling sampling = eval::Sampling::Forty;
  std::optional<double> threshold;
  Format format = Format::Csv;
  std::string curve_path;  ///< optional per-curve CSV dump
};

struct ExtremeOptions {
  std::uint64_t seed = kDefaultSeed;
  std::vector<double> sigmas = {0.0, 1.0, 2.0};
  int trials = 1000;
};

struct ExtremeRow {
  double sigma = 0.0;
  int k = 0;
  int trials = 0;
  double median_error = 0.0;
  double mean_error = 0.0;
  int failures = 0;
};

struct ConsistencyOptions {
  std::uint64_t seed = kDefaultSeed;
  int objects = 3;
  augment::AffineAug a1 = augment::AffineAug::identity();
  augment::AffineAug a2 = augment::AffineAug::identity();
  double dropout = 0.0;          ///< keypoint drop probability per view
  Vec3 perturb_dim = Vec3::Zero();  ///< added to (h, w, l) of the second view
  double match_radius = losses::kDefaultMatchRadius;
  Format format = Format::Csv;
};

struct GenerateOptions {
  std::uint64_t seed = kDefaultSeed;
  int objects = 3;
  double noise = 0.0;
  std::string out_dir;
  std::string stem = "000000";
};

/// "scale,dx,dy[,flip]" with flip as 0/1; throws Error on malformed specs.
augment::AffineAug parse_aug(const std::string& spec, double image_width);

int cmd_solve(const SolveOptions& opt, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);
int cmd_extreme(const ExtremeOptions& opt, std::ostream& out, std::ostream& err);
int cmd_consistency(const ConsistencyOptions& opt, std::ostream& out, std::ostream& err);
int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err);

/// Position error statistics behind cmd_extreme, one row per (sigma, k).
std::vector<ExtremeRow> extreme_test(const ExtremeOptions& opt);

}  // namespace km3d::cli
