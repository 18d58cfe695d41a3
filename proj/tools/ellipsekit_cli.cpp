// ellipsekit command-line front end.
//
//   ellipsekit generate --config scene.json --out data/ [--seed N] [--raster]
//   ellipsekit eval --gt gt.jsonl --det det.jsonl [--preset soe|sof|default] [--out report.csv]
//   ellipsekit reconstruct --cameras cams.json --det det.jsonl [--gt poses.json] [--out poses.json]
//   ellipsekit fit --mask labels.pgm [--label K]
//   ellipsekit selftest [--cases N]
//
// Exit codes: 0 success, 1 metric undefined, 2 input error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ellipsekit/codec.hpp"
#include "ellipsekit/errors.hpp"
#include "ellipsekit/io.hpp"
#include "ellipsekit/metrics.hpp"
#include "ellipsekit/mvee.hpp"
#include "ellipsekit/parallel.hpp"
#include "ellipsekit/quadric.hpp"
#include "ellipsekit/synth.hpp"

namespace fs = std::filesystem;
using namespace ellipsekit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUndefined = 1;
constexpr int kExitInput = 2;

struct Globals {
  int threads = 1;
  bool quiet = false;
  bool degrees = false;
};

std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw InvalidArgument("cannot read '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  return out;
}

std::string format_angle(double radians, bool degrees) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", degrees ? radians * 180.0 / kPi : radians);
  return buf;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> num_images;
  bool raster = false;
};

int run_generate(const GenerateArgs& args, const Globals& g) {
  SceneConfig cfg;
  if (!args.config.empty()) {
    std::ifstream in = open_input(args.config);
    std::stringstream text;
    text << in.rdbuf();
    cfg = io::parse_scene_config(text.str());
  }
  if (args.seed) cfg.seed = *args.seed;
  if (args.num_images) cfg.num_images = *args.num_images;
  cfg.raster = cfg.raster || args.raster;
  cfg.validate();

  const auto scenes = generate_dataset(cfg, g.threads);

  std::error_code ec;
  fs::create_directories(args.out, ec);
  if (ec) throw InvalidArgument("cannot create '" + args.out + "': " + ec.message());
  std::ofstream ann = open_output((fs::path(args.out) / "annotations.jsonl").string());
  std::size_t objects = 0;
  for (const auto& scene : scenes) {
    io::write_annotations(ann, scene.gt);
    objects += scene.gt.size();
    if (scene.raster) {
      std::ofstream pgm = open_output((fs::path(args.out) / (scene.image_id + ".pgm")).string(), true);
      io::write_pgm(pgm, *scene.raster);
    }
  }
  if (!g.quiet) {
    std::cout << "wrote " << scenes.size() << " scenes, " << objects << " objects to " << args.out
              << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string gt;
  std::string det;
  std::string preset = "default";
  bool angle_exempt_circular = false;
  std::string out;
  std::string svg;
};

// Precision/recall curves at every IoU threshold as a standalone SVG plot.
std::string pr_svg(const DetectionEvaluator& evaluator, const EvalConfig& cfg) {
  constexpr double kSize = 360.0;
  constexpr double kMargin = 40.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize + 2 * kMargin
     << "\" height=\"" << kSize + 2 * kMargin << "\">\n";
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize
     << "\" height=\"" << kSize << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kMargin + kSize / 2 << "\" y=\"" << 2 * kMargin + kSize - 8
     << "\" text-anchor=\"middle\" font-size=\"12\">recall</text>\n";
  os << "<text x=\"12\" y=\"" << kMargin + kSize / 2
     << "\" font-size=\"12\" transform=\"rotate(-90 12 " << kMargin + kSize / 2
     << ")\" text-anchor=\"middle\">precision</text>\n";
  for (std::size_t k = 0; k < cfg.iou_thresholds.size(); ++k) {
    MatchCriteria crit;
    crit.iou_threshold = cfg.iou_thresholds[k];
    const auto curve = evaluator.pr_curve(crit);
    const double hue = 240.0 * static_cast<double>(k) /
                       static_cast<double>(std::max<std::size_t>(1, cfg.iou_thresholds.size() - 1));
    os << "<polyline fill=\"none\" stroke=\"hsl(" << hue << ",70%,45%)\" points=\"";
    for (const auto& p : curve) {
      os << kMargin + p.recall * kSize << ',' << kMargin + (1.0 - p.precision) * kSize << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << kMargin + kSize + 4 << "\" y=\"" << kMargin + 14 * (k + 1)
       << "\" font-size=\"10\" fill=\"hsl(" << hue << ",70%,45%)\">IoU " << cfg.iou_thresholds[k]
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

int run_eval(const EvalArgs& args, const Globals& g) {
  std::ifstream gt_in = open_input(args.gt);
  std::ifstream det_in = open_input(args.det);
  const auto gts = io::read_annotations(gt_in);
  std::vector<DetectionRecord> dets;
  for (auto& line : io::read_detections(det_in)) dets.push_back(std::move(line.det));

  EvalConfig cfg = EvalConfig::preset(args.preset);
  cfg.circular_angle_exempt = args.angle_exempt_circular;
  cfg.threads = g.threads;
  const EvalReport report = evaluate(dets, gts, cfg);

  if (!args.out.empty()) {
    std::ofstream out = open_output(args.out);
    out << report_csv(report);
  }
  if (!args.svg.empty()) {
    const DetectionEvaluator evaluator(dets, gts, cfg.iou_resolution, g.threads);
    std::ofstream out = open_output(args.svg);
    out << pr_svg(evaluator, cfg);
  }
  if (!g.quiet) std::cout << report_table(report);
  return kExitOk;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs {
  std::string cameras;
  std::string det;
  std::string gt;
  std::string out;
};

int run_reconstruct(const ReconstructArgs& args, const Globals& g) {
  std::ifstream cam_in = open_input(args.cameras);
  const auto cameras = io::read_cameras(cam_in);
  std::ifstream det_in = open_input(args.det);
  const auto lines = io::read_detections(det_in);
  std::optional<std::map<std::string, EllipsoidPose>> gt;
  if (!args.gt.empty()) {
    std::ifstream gt_in = open_input(args.gt);
    gt = io::read_poses(gt_in);
  }

  std::map<std::string, std::vector<View>> views;
  for (const auto& line : lines) {
    if (!line.object_id) {
      throw InvalidArgument("detection for image '" + line.det.image_id + "' has no object_id");
    }
    const auto cam = cameras.find(line.det.image_id);
    if (cam == cameras.end()) {
      throw InvalidArgument("no camera for image '" + line.det.image_id + "'");
    }
    views[*line.object_id].push_back(View{cam->second, line.det.ellipse});
  }

  std::map<std::string, EllipsoidPose> poses;
  std::map<std::string, PoseErrors> errors;
  for (const auto& [id, obs] : views) {
    if (obs.size() < 3) {
      std::cerr << "warning: object '" << id << "' has " << obs.size()
                << " view(s), at least 3 needed; skipped\n";
      continue;
    }
    try {
      poses[id] = decompose_quadric(reconstruct(obs));
    } catch (const std::runtime_error& e) {
      std::cerr << "warning: object '" << id << "' skipped: " << e.what() << "\n";
      continue;
    }
    if (gt) {
      const auto ref = gt->find(id);
      if (ref != gt->end()) errors[id] = pose_errors(poses[id], ref->second);
    }
  }

  const std::string text = io::poses_json(poses, gt ? &errors : nullptr);
  if (!args.out.empty()) {
    std::ofstream out = open_output(args.out);
    out << text << "\n";
  } else if (!g.quiet) {
    std::cout << text << "\n";
  }
  if (!g.quiet && gt) {
    std::printf("%-16s %12s %12s %12s\n", "object", "rot_deg", "pos", "rel_size");
    for (const auto& [id, e] : errors) {
      std::printf("%-16s %12.6g %12.6g %12.6g\n", id.c_str(), e.rotation_deg, e.position,
                  e.relative_size);
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string mask;
  std::optional<int> label;
  double tol = kMveeDefaultTol;
  int max_iter = kMveeDefaultMaxIter;
};

int run_fit(const FitArgs& args, const Globals& g) {
  std::ifstream in = open_input(args.mask, true);
  const LabelMap map = io::read_pgm(in);
  const GridSpec grid{0.0, 0.0, 1.0, map.width, map.height};

  std::vector<int> labels;
  if (args.label) {
    labels.push_back(*args.label);
  } else {
    std::vector<bool> seen(256, false);
    for (auto v : map.labels) seen[v] = true;
    for (int k = 1; k < 255; ++k) {
      if (seen[static_cast<std::size_t>(k)]) labels.push_back(k);
    }
  }
  for (int label : labels) {
    Mask mask(map.width, map.height);
    for (int r = 0; r < map.height; ++r) {
      for (int c = 0; c < map.width; ++c) {
        if (map.labels[static_cast<std::size_t>(r) * map.width + c] == label) mask.set(c, r, true);
      }
    }
    try {
      const auto points = mask_to_points(mask, grid);
      const Ellipse e = mvee(points, args.tol, args.max_iter);
      if (!g.quiet) {
        std::cout << "{\"label\":" << label << ",\"x\":" << e.x() << ",\"y\":" << e.y()
                  << ",\"a\":" << e.a() << ",\"b\":" << e.b()
                  << ",\"theta\":" << format_angle(e.theta(), g.degrees) << "}\n";
      }
    } catch (const DegenerateInput& e) {
      std::cerr << "warning: label " << label << " skipped: " << e.what() << "\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- selftest

struct SelftestArgs {
  int cases = 100000;
  std::uint64_t seed = 1;
};

int run_selftest(const SelftestArgs& args, const Globals& g) {
  SceneRng rng(args.seed);
  double worst = 0.0;
  for (int i = 0; i < args.cases; ++i) {
    const SquareRegion q(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(1, 200));
    const double a = rng.uniform(1, 100);
    const Ellipse e(rng.uniform(-100, 100), rng.uniform(-100, 100), a, a * rng.uniform(0.05, 1.0),
                    rng.uniform(-kPi / 2, kPi / 2));
    const double s = rng.uniform(kMinDecodedScale, 1.0);
    const auto back = decode_ellipse(q, encode_ellipse(q, e, VisibilityScale(s)));
    const double dtheta = std::abs(wrap_half_turn((back.ellipse.theta() - e.theta()) / kPi)) * kPi;
    for (double err : {std::abs(back.ellipse.x() - e.x()), std::abs(back.ellipse.y() - e.y()),
                       std::abs(back.ellipse.a() - e.a()), std::abs(back.ellipse.b() - e.b()),
                       dtheta, std::abs(back.scale - s)}) {
      worst = std::max(worst, err);
    }
  }
  const bool ok = worst <= 1e-9;
  if (!g.quiet) {
    std::cout << "codec round trip: " << args.cases << " cases, max error " << worst
              << (ok ? " OK" : " FAILED") << "\n";
  }
  return ok ? kExitOk : kExitUndefined;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ellipse detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.threads = default_thread_count();
  app.add_option("--threads", g.threads, "Worker threads (default: ELLIPSEKIT_THREADS)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress stdout summaries");
  app.add_flag("--degrees", g.degrees, "Print angles in degrees");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic occlusion dataset");
  generate->add_option("--config", gen.config, "Scene config JSON");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--seed", gen.seed, "Dataset seed");
  generate->add_option("--num-images", gen.num_images, "Number of scenes");
  generate->add_flag("--raster", gen.raster, "Also write PGM label maps");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate detections against annotations");
  eval->add_option("--gt", ev.gt, "Annotation JSONL")->required();
  eval->add_option("--det", ev.det, "Detection JSONL")->required();
  eval->add_option("--preset", ev.preset, "Threshold grid")
      ->check(CLI::IsMember({"soe", "sof", "rof", "default"}));
  eval->add_flag("--angle-exempt-circular", ev.angle_exempt_circular,
                 "Skip the angle criterion for near-circular GT");
  eval->add_option("--out", ev.out, "CSV report path");
  eval->add_option("--svg", ev.svg, "Precision/recall plot path");

  ReconstructArgs rec;
  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Multi-view ellipsoid reconstruction");
  reconstruct_cmd->add_option("--cameras", rec.cameras, "Camera JSON")->required();
  reconstruct_cmd->add_option("--det", rec.det, "Detection JSONL with object_id")->required();
  reconstruct_cmd->add_option("--gt", rec.gt, "Ground-truth pose JSON");
  reconstruct_cmd->add_option("--out", rec.out, "Output pose JSON");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Minimum-volume ellipses of PGM label regions");
  fit_cmd->add_option("--mask", fit.mask, "Label map (P5)")->required();
  fit_cmd->add_option("--label", fit.label, "Single label to fit")->check(CLI::Range(1, 254));
  fit_cmd->add_option("--tol", fit.tol, "Containment tolerance")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fit.max_iter, "Iteration budget per region")
      ->check(CLI::PositiveNumber);

  SelftestArgs st;
  auto* selftest = app.add_subcommand("selftest", "Codec round-trip self-test");
  selftest->add_option("--cases", st.cases, "Random cases")->check(CLI::PositiveNumber);
  selftest->add_option("--seed", st.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*generate) return run_generate(gen, g);
    if (*eval) return run_eval(ev, g);
    if (*reconstruct_cmd) return run_reconstruct(rec, g);
    if (*fit_cmd) return run_fit(fit, g);
    if (*selftest) return run_selftest(st, g);
  } catch (const UndefinedMetric& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUndefined;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
