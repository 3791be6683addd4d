#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "km3d/cli.hpp"
#include "km3d/error.hpp"

using namespace km3d;

namespace {

const std::map<std::string, cli::Format> kFormats = {{"csv", cli::Format::Csv}, {"json", cli::Format::Json}};

const std::map<std::string, eval::Metric> kMetrics = {
    {"2d", eval::Metric::AP2D}, {"bev", eval::Metric::APBEV}, {"3d", eval::Metric::AP3D}, {"aos", eval::Metric::AOS}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"km3d: keypoint-based monocular 3D geometry, losses and evaluation"};
  app.require_subcommand(1);
  const std::uint64_t seed = cli::default_seed();

  cli::SolveOptions solve;
  solve.seed = seed;
  std::uint64_t fixture_seed = 0;
  auto* s = app.add_subcommand("solve", "Recover object positions from decoded keypoints");
  s->add_option("--calib", solve.calib_path, "KITTI calibration file (P2 is used)");
  s->add_option("--maps", solve.maps_path, "head-map container to decode");
  auto* fixture_opt = s->add_option("--fixture-seed", fixture_seed, "decode a generated fixture instead of --maps");
  s->add_option("--fixture-objects", solve.fixture_objects, "objects in the generated fixture");
  s->add_option("--drop-keypoints", solve.drop_keypoints, "keypoints removed per object (0-7)");
  s->add_option("--seed", solve.seed, "RNG seed for keypoint dropping");
  s->add_option("--threshold", solve.threshold, "main-center peak threshold");
  s->add_option("--top-k", solve.top_k, "keep at most K detections (0 = all)");
  s->add_option("--format", solve.format, "csv or json")->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));

  cli::GradcheckOptions grad;
  grad.seed = seed;
  auto* g = app.add_subcommand("gradcheck", "Compare analytic GRM gradients with central differences");
  g->add_option("--trials", grad.trials, "random scenes to check");
  g->add_option("--seed", grad.seed, "RNG seed");
  g->add_option("--tolerance", grad.tolerance, "maximum relative error");
  g->add_option("--drop-prob", grad.drop_prob, "keypoint drop probability per trial");

  cli::EvalOptions ev;
  std::vector<std::string> metric_names;
  bool ap11 = false;
  double threshold = -1.0;
  auto* e = app.add_subcommand("eval", "Average precision over KITTI-format result files");
  e->add_option("--det", ev.det_dir, "directory of result files")->required();
  e->add_option("--gt", ev.gt_dir, "directory of label_2 files")->required();
  e->add_option("--calib", ev.calib_dir, "calibration directory (checked for completeness)");
  e->add_option("--class", ev.class_name, "object class");
  e->add_option("--metric", metric_names, "2d, bev, 3d, aos (repeatable)");
  e->add_flag("--ap11", ap11, "11 recall points instead of 40");
  e->add_option("--threshold", threshold, "IoU threshold (default per class)");
  e->add_option("--format", ev.format, "csv or json")->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
  e->add_option("--curves", ev.curve_path, "write interpolated precision per recall point");

  cli::ExtremeOptions ex;
  ex.seed = seed;
  auto* x = app.add_subcommand("extreme", "Position error versus number of kept keypoints");
  x->add_option("--seed", ex.seed, "RNG seed");
  x->add_option("--sigma", ex.sigmas, "keypoint noise levels in pixels (repeatable)");
  x->add_option("--trials", ex.trials, "trials per noise level");

  cli::ConsistencyOptions co;
  co.seed = seed;
  std::string a1 = "1,0,0,0";
  std::string a2 = "1,0,0,0";
  std::vector<double> perturb;
  auto* c = app.add_subcommand("consistency", "Consistency loss between two augmented views of a fixture");
  c->add_option("--seed", co.seed, "fixture seed");
  c->add_option("--objects", co.objects, "objects in the fixture");
  c->add_option("--a1", a1, "first augmentation scale,dx,dy[,flip]");
  c->add_option("--a2", a2, "second augmentation scale,dx,dy[,flip]");
  c->add_option("--dropout", co.dropout, "keypoint drop probability in both views");
  c->add_option("--perturb-dim", perturb, "dh dw dl added to the second view")->expected(3);
  c->add_option("--match-radius", co.match_radius, "pairing radius in pixels");
  c->add_option("--format", co.format, "csv or json")->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));

  cli::GenerateOptions gen;
  gen.seed = seed;
  auto* gn = app.add_subcommand("generate", "Write a synthetic fixture (maps, labels, calibration)");
  gn->add_option("--seed", gen.seed, "scene seed");
  gn->add_option("--objects", gen.objects, "object count");
  gn->add_option("--noise", gen.noise, "keypoint noise sigma in pixels");
  gn->add_option("--out", gen.out_dir, "output directory")->required();
  gn->add_option("--stem", gen.stem, "file stem");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : cli::kInputError;
  }

  try {
    if (*s) {
      if (*fixture_opt) solve.fixture_seed = fixture_seed;
      return cli::cmd_solve(solve, std::cout, std::cerr);
    }
    if (*g) return cli::cmd_gradcheck(grad, std::cout, std::cerr);
    if (*e) {
      if (!metric_names.empty()) {
        ev.metrics.clear();
        for (const auto& m : metric_names) {
          const auto it = kMetrics.find(m);
          if (it == kMetrics.end()) {
            std::cerr << "error: unknown metric '" << m << "'\n";
            return cli::kInputError;
          }
          ev.metrics.push_back(it->second);
        }
      }
      if (ap11) ev.sampling = eval::Sampling::Eleven;
      if (threshold > 0.0) ev.threshold = threshold;
      return cli::cmd_eval(ev, std::cout, std::cerr);
    }
    if (*x) return cli::cmd_extreme(ex, std::cout, std::cerr);
    if (*c) {
      co.a1 = cli::parse_aug(a1, 0.0);
      co.a2 = cli::parse_aug(a2, 0.0);
      if (!perturb.empty()) co.perturb_dim = Vec3(perturb[0], perturb[1], perturb[2]);
      return cli::cmd_consistency(co, std::cout, std::cerr);
    }
    if (*gn) return cli::cmd_generate(gen, std::cout, std::cerr);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return cli::kInputError;
  }
  return cli::kInputError;
}
