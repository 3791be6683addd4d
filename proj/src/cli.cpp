#include "km3d/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "km3d/codec.hpp"
#include "km3d/error.hpp"
#include "km3d/grm.hpp"
#include "km3d/kitti_io.hpp"
#include "km3d/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace km3d::cli {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("KM3D_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
  }
  return kDefaultSeed;
}

augment::AffineAug parse_aug(const std::string& spec, double image_width) {
  std::vector<double> vals;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedNumber, "augmentation spec '" + spec + "': bad value '" + item + "'");
    }
  }
  if (vals.size() != 3 && vals.size() != 4) {
    throw Error(ErrorCode::FieldCount, "augmentation spec '" + spec + "' needs scale,dx,dy[,flip]");
  }
  const bool flip = vals.size() == 4 && vals[3] != 0.0;
  return augment::make_aug(vals[0], Vec2(vals[1], vals[2]), flip, image_width);
}

namespace {

std::string mask_string(const KeypointMask& mask) {
  std::string s;
  for (bool m : mask) s.push_back(m ? '1' : '0');
  return s;
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::DegenerateSystem:
    case ErrorCode::BehindCamera:
    case ErrorCode::InsufficientConstraints:
    case ErrorCode::NonPositiveDepth:
    case ErrorCode::NoConvergence: return kDegenerate;
    default: return kInputError;
  }
}

KeypointMask drop_exactly(std::mt19937_64& rng, int count) {
  KeypointMask mask = kAllKept;
  std::array<int, kNumKeypoints> idx{};
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (int i = 0; i < count; ++i) mask[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = false;
  return mask;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_solve(const SolveOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.drop_keypoints < 0 || opt.drop_keypoints > kNumKeypoints - 2) {
    err << "error: --drop-keypoints must lie in [0, 7]\n";
    return kInputError;
  }
  CameraModel cam;
  codec::HeadMaps maps;
  try {
    if (opt.maps_path.empty()) {
      synth::SceneSpec spec;
      spec.seed = opt.fixture_seed.value_or(opt.seed);
      spec.object_count = opt.fixture_objects;
      if (!opt.calib_path.empty()) spec.cam = kitti::load_calib(opt.calib_path).p2;
      const synth::Scene scene = synth::generate_scene(spec);
      cam = scene.cam;
      maps = scene.maps;
    } else {
      if (opt.calib_path.empty()) throw Error(ErrorCode::MissingKey, "--calib is required with --maps");
      cam = kitti::load_calib(opt.calib_path).p2;
      maps = codec::load_head_maps(opt.maps_path);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  codec::DecodeOptions dopt;
  dopt.threshold = opt.threshold;
  dopt.run_grm = false;
  dopt.top_k = opt.top_k;
  const auto preds = codec::decode_objects(maps, cam, dopt);

  std::mt19937_64 rng(opt.seed);
  json records = json::array();
  if (opt.format == Format::Csv) out << "object,class,score,X,Y,Z,residual,sv0,sv1,sv2,mask\n";
  for (std::size_t k = 0; k < preds.size(); ++k) {
    KeypointSet kps = preds[k].kps;
    if (opt.drop_keypoints > 0) kps.mask = drop_exactly(rng, opt.drop_keypoints);
    const double theta = alpha_to_theta(preds[k].alpha, kps.pts[kCenterKeypoint], cam);
    grm::PositionSolution sol;
    try {
      sol = grm::solve_full(kps, preds[k].dim, theta, cam);
    } catch (const Error& e) {
      err << "error: object " << k << ": " << e.what() << "\n";
      return exit_for(e);
    }
    if (opt.format == Format::Csv) {
      out << k << ',' << preds[k].class_id << ',' << fmt(preds[k].fused) << ',' << fmt(sol.T.x()) << ','
          << fmt(sol.T.y()) << ',' << fmt(sol.T.z()) << ',' << fmt(sol.residual) << ','
          << fmt(sol.singular_values(0)) << ',' << fmt(sol.singular_values(1)) << ','
          << fmt(sol.singular_values(2)) << ',' << mask_string(kps.mask) << '\n';
    } else {
      records.push_back({{"object", k},
                         {"class", preds[k].class_id},
                         {"score", preds[k].fused},
                         {"T", {sol.T.x(), sol.T.y(), sol.T.z()}},
                         {"residual", sol.residual},
                         {"singular_values", {sol.singular_values(0), sol.singular_values(1), sol.singular_values(2)}},
                         {"mask", mask_string(kps.mask)}});
    }
  }
  if (opt.format == Format::Json) out << records.dump(2) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.trials <= 0) {
    err << "warning: no trials requested, gradient check passes vacuously\n";
    out << "trial,kept,err_keypoints,err_dimension,err_theta,max\n";
    return kOk;
  }
  std::mt19937_64 rng(opt.seed);
  synth::SceneSpec spec;
  double worst = 0.0;
  out << "trial,kept,err_keypoints,err_dimension,err_theta,max\n";
  for (int t = 0; t < opt.trials; ++t) {
    synth::GradientCheck check;
    KeypointSet kps;
    // Redraw masks whose systems are rank deficient.
    for (;;) {
      const ObjectBox3D box = synth::sample_box(rng, spec);
      kps = project_box(spec.cam, box);
      kps.mask = grm::keypoint_dropout(rng, opt.drop_prob);
      try {
        check = synth::check_grm_gradients(kps, box.dim, box.theta, spec.cam);
        break;
      } catch (const Error&) {
      }
    }
    worst = std::max(worst, check.max());
    out << t << ',' << kps.kept() << ',' << fmt(check.keypoints) << ',' << fmt(check.dimension) << ','
        << fmt(check.theta) << ',' << fmt(check.max()) << '\n';
  }
  if (worst > opt.tolerance) {
    err << "FAIL: max relative error " << worst << " exceeds " << opt.tolerance << "\n";
    return kCheckFailed;
  }
  err << "PASS: max relative error " << worst << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  std::vector<eval::Frame> frames;
  try {
    if (!fs::is_directory(opt.gt_dir)) throw Error(ErrorCode::Io, "ground-truth dir " + opt.gt_dir + " not found");
    if (!fs::is_directory(opt.det_dir)) throw Error(ErrorCode::Io, "detection dir " + opt.det_dir + " not found");
    std::set<std::string> gt_stems;
    for (const auto& e : fs::directory_iterator(opt.gt_dir)) {
      if (e.path().extension() == ".txt") gt_stems.insert(e.path().stem().string());
    }
    for (const auto& e : fs::directory_iterator(opt.det_dir)) {
      if (e.path().extension() == ".txt" && !gt_stems.count(e.path().stem().string())) {
        throw Error(ErrorCode::Io, "detection file " + e.path().filename().string() + " has no ground truth");
      }
    }
    for (const auto& stem : gt_stems) {
      if (!opt.calib_dir.empty() && !fs::exists(fs::path(opt.calib_dir) / (stem + ".txt"))) {
        throw Error(ErrorCode::Io, "calibration for " + stem + " missing");
      }
      eval::Frame frame;
      frame.gts = kitti::load_labels((fs::path(opt.gt_dir) / (stem + ".txt")).string());
      const fs::path det = fs::path(opt.det_dir) / (stem + ".txt");
      if (fs::exists(det)) frame.dets = kitti::load_labels(det.string());
      frames.push_back(std::move(frame));
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  std::ofstream curves;
  if (!opt.curve_path.empty()) {
    curves.open(opt.curve_path);
    if (!curves) {
      err << "error: cannot write " << opt.curve_path << "\n";
      return kInputError;
    }
    curves << "class,metric,difficulty,recall_point,precision\n";
  }

  json rows = json::array();
  if (opt.format == Format::Csv) out << "class,metric,difficulty,threshold,AP\n";
  for (eval::Metric metric : opt.metrics) {
    eval::EvalConfig cfg;
    cfg.class_name = opt.class_name;
    cfg.metric = metric;
    cfg.sampling = opt.sampling;
    cfg.iou_threshold = opt.threshold.value_or(eval::default_threshold(opt.class_name));
    const auto results = eval::evaluate(frames, cfg);
    for (int d = 0; d < 3; ++d) {
      const char* diff = kitti::to_string(static_cast<kitti::Difficulty>(d));
      const double ap = results[static_cast<std::size_t>(d)].ap;
      if (opt.format == Format::Csv) {
        out << cfg.class_name << ',' << eval::to_string(metric) << ',' << diff << ',' << cfg.iou_threshold << ','
            << fmt(ap) << '\n';
      } else {
        rows.push_back({{"class", cfg.class_name},
                        {"metric", eval::to_string(metric)},
                        {"difficulty", diff},
                        {"threshold", cfg.iou_threshold},
                        {"sampling", eval::to_string(opt.sampling)},
                        {"AP", ap}});
      }
      if (curves.is_open()) {
        const auto& c = results[static_cast<std::size_t>(d)].curve;
        for (std::size_t k = 0; k < c.recall_points.size(); ++k) {
          curves << cfg.class_name << ',' << eval::to_string(metric) << ',' << diff << ',' << c.recall_points[k]
                 << ',' << fmt(c.sampled[k]) << '\n';
        }
      }
    }
  }
  if (opt.format == Format::Json) out << rows.dump(2) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

std::vector<ExtremeRow> extreme_test(const ExtremeOptions& opt) {
  std::vector<ExtremeRow> rows;
  synth::SceneSpec spec;
  for (double sigma : opt.sigmas) {
    // Common random numbers across k: same boxes, noise and keypoint order.
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::vector<double>> errors(kNumKeypoints + 1);
    std::vector<int> failures(kNumKeypoints + 1, 0);
    for (int t = 0; t < opt.trials; ++t) {
      const ObjectBox3D box = synth::sample_box(rng, spec);
      KeypointSet kps = project_box(spec.cam, box);
      for (auto& p : kps.pts) p += sigma * Vec2(noise(rng), noise(rng));
      std::array<int, kNumKeypoints> order{};
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int k = 2; k <= kNumKeypoints; ++k) {
        kps.mask.fill(false);
        for (int i = 0; i < k; ++i) kps.mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
        try {
          const Vec3 T = grm::solve_full(kps, box.dim, box.theta, spec.cam).T;
          errors[static_cast<std::size_t>(k)].push_back((T - box.T).norm());
        } catch (const Error&) {
          ++failures[static_cast<std::size_t>(k)];
          errors[static_cast<std::size_t>(k)].push_back(std::numeric_limits<double>::infinity());
        }
      }
    }
    for (int k = 2; k <= kNumKeypoints; ++k) {
      const auto& e = errors[static_cast<std::size_t>(k)];
      ExtremeRow row;
      row.sigma = sigma;
      row.k = k;
      row.trials = opt.trials;
      row.failures = failures[static_cast<std::size_t>(k)];
      row.median_error = median(e);
      double sum = 0.0;
      int finite = 0;
      for (double v : e) {
        if (std::isfinite(v)) {
          sum += v;
          ++finite;
        }
      }
      row.mean_error = finite > 0 ? sum / finite : std::numeric_limits<double>::quiet_NaN();
      rows.push_back(row);
    }
  }
  return rows;
}

int cmd_extreme(const ExtremeOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.trials <= 0) {
    err << "error: --trials must be positive\n";
    return kInputError;
  }
  out << "sigma,k,trials,median_error,mean_error,failures\n";
  for (const auto& r : extreme_test(opt)) {
    out << r.sigma << ',' << r.k << ',' << r.trials << ',' << fmt(r.median_error) << ',' << fmt(r.mean_error) << ','
        << r.failures << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_consistency(const ConsistencyOptions& opt, std::ostream& out, std::ostream& err) {
  synth::SceneSpec spec;
  spec.seed = opt.seed;
  spec.object_count = opt.objects;
  losses::ConsistencyLoss loss;
  try {
    const synth::Scene scene = synth::generate_scene(spec);
    const auto canonical = scene.predictions();
    std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);

    auto view = [&](const augment::AffineAug& aug, const Vec3& dim_offset) {
      std::vector<codec::Prediction> preds = canonical;
      for (auto& p : preds) {
        p.dim.h += dim_offset.x();
        p.dim.w += dim_offset.y();
        p.dim.l += dim_offset.z();
        if (opt.dropout > 0.0) p.kps.mask = grm::keypoint_dropout(rng, opt.dropout);
      }
      return losses::PredictionView{augment::transform_predictions(preds, aug, scene.cam), aug};
    };
    augment::AffineAug a1 = opt.a1;
    augment::AffineAug a2 = opt.a2;
    a1.image_width = a2.image_width = scene.image_width;
    loss = losses::consistency_loss(view(a1, Vec3::Zero()), view(a2, opt.perturb_dim), scene.cam, opt.match_radius);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e);
  }
  if (opt.format == Format::Csv) {
    out << "pairs,position,orientation,dimension,total\n"
        << loss.pairs << ',' << fmt(loss.position) << ',' << fmt(loss.orientation) << ',' << fmt(loss.dimension) << ','
        << fmt(loss.total) << '\n';
  } else {
    out << json{{"pairs", loss.pairs},
                {"position", loss.position},
                {"orientation", loss.orientation},
                {"dimension", loss.dimension},
                {"total", loss.total}}
               .dump(2)
        << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    synth::SceneSpec spec;
    spec.seed = opt.seed;
    spec.object_count = opt.objects;
    spec.noise_sigma = opt.noise;
    const synth::Scene scene = synth::generate_scene(spec);

    const fs::path root(opt.out_dir);
    fs::create_directories(root / "label_2");
    fs::create_directories(root / "calib");
    fs::create_directories(root / "maps");

    std::ofstream labels(root / "label_2" / (opt.stem + ".txt"));
    labels << kitti::write_labels(scene.labels());

    std::ofstream calib(root / "calib" / (opt.stem + ".txt"));
    calib.precision(12);
    for (const char* key : {"P0", "P1", "P2", "P3"}) {
      calib << key << ":";
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) calib << ' ' << scene.cam.P()(r, c);
      calib << '\n';
    }
    const fs::path maps_path = root / "maps" / (opt.stem + ".hmap");
    codec::save_head_maps(maps_path.string(), scene.maps);
    if (!labels || !calib) throw Error(ErrorCode::Io, "failed writing fixture files under " + opt.out_dir);
    out << "wrote " << scene.objects.size() << " objects to " << root.string() << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}

}  // namespace km3d::cli
