// Copyright 2026 The cfpose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cfpose command-line tool: simulate, estimate, benchmark, segment, register.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfpose/errors.hpp"
#include "cfpose/experiments.hpp"
#include "cfpose/ingest.hpp"
#include "cfpose/io.hpp"
#include "cfpose/robust.hpp"
#include "cfpose/simgen.hpp"
#include "cfpose/solver.hpp"

namespace fs = std::filesystem;
using namespace cfpose;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitEstimation = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitIo = 74;

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument(what + ": '" + item + "' is not a number");
    }
  }
  return out;
}

// "yaw,pitch,roll,tx,ty,tz" or a pose JSON file.
PoseParams parse_pose(const std::string& text, const std::string& what) {
  if (fs::exists(text)) return pose_from_json(read_json_file(text, true), text);
  const auto v = parse_list(text, what);
  if (v.size() != 6) throw InvalidArgument(what + " needs 6 comma-separated values");
  PoseParams p;
  p.angles = {v[0], v[1], v[2]};
  p.translation = Vec3(v[3], v[4], v[5]);
  return p;
}

Vec3 parse_vec3(const std::string& text, const std::string& what) {
  const auto v = parse_list(text, what);
  if (v.size() != 3) throw InvalidArgument(what + " needs 3 comma-separated values");
  return Vec3(v[0], v[1], v[2]);
}

CorrespondenceModel make_model(const std::string& name, const std::string& normal,
                               double offset) {
  const ModelKind kind = model_from_name(name);
  if (kind != ModelKind::kHomography2D2D) return CorrespondenceModel{kind};
  CorrespondenceModel m =
      CorrespondenceModel::homography(parse_vec3(normal, "--plane-normal"), offset);
  m.validate();
  return m;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string model;
  int n_points = 0;
  long long seed = -1;
  std::string out_dir;
  bool images = false;
  int width = 1280;
  int height = 1280;
};

int cmd_simulate(const SimulateArgs& a) {
  SimulateConfig cfg;
  if (!a.config.empty()) {
    cfg = simulate_config_from_json(read_json_file(a.config, true), a.config);
  }
  if (!a.model.empty()) {
    const SceneConfig defaults = default_scene_config(model_from_name(a.model));
    cfg.scene.model = defaults.model;
    cfg.scene.curve = defaults.curve;
    cfg.scene.theta_star = defaults.theta_star;
  }
  if (a.n_points > 0) cfg.scene.n_points = a.n_points;
  if (a.seed >= 0) cfg.scene.seed = static_cast<std::uint64_t>(a.seed);
  cfg.scene.validate();

  Scene scene = cfg.occlusion ? gen_occlusion_scene(cfg.scene, *cfg.occlusion)
                              : gen_scene(cfg.scene);
  apply_noise(scene, cfg.noise, derive_seed(cfg.scene.seed, 2));

  const fs::path dir = a.out_dir;
  ensure_dir(dir);
  const Json source{{"generator", "cfpose simulate"}, {"seed", cfg.scene.seed}};
  write_point_set(dir / "p.json", scene.p, source);
  write_point_set(dir / "q.json", scene.q, source);
  write_json_file(dir / "oracle.json", oracle_to_json(scene));
  write_json_file(dir / "scene_config.json", simulate_config_to_json(cfg));
  if (a.images) {
    CameraIntrinsics cam{cfg.scene.focal_length, Eigen::Vector2d(a.width / 2.0, a.height / 2.0)};
    for (const auto& [set, name] : {std::pair{&scene.p, "p.png"}, std::pair{&scene.q, "q.png"}}) {
      Raster canvas(a.width, a.height);
      std::fill(canvas.rgb.begin(), canvas.rgb.end(), std::uint8_t{235});
      rasterize_points(canvas, *set, cam, 220, 20, 20, 1);
      save_png(canvas, dir / name);
    }
  }
  std::cout << "wrote " << scene.p.size() << " P points and " << scene.q.size()
            << " Q points to " << dir.string() << "\n";
  return kExitOk;
}

// ---- estimate ------------------------------------------------------------

struct EstimateArgs {
  std::string p_path;
  std::string q_path;
  std::string model = "bearing";
  std::string plane_normal = "0,0,1";
  double plane_offset = SceneConfig{}.depth;
  std::string basis = "paper18";
  bool ransac = false;
  int ransac_hypotheses = 50;
  double ransac_fraction = 0.5;
  std::optional<double> ransac_threshold;
  double ransac_min_inliers = 0.1;
  int occlusion_k = 0;
  int occlusion_keep = -1;
  std::string theta0;
  int multistart = 1;
  long long seed = 1;
  std::string normalize = "auto";
  int max_iters = 200;
  std::string oracle;
  std::string out;
};

Json occlusion_json(const OcclusionDiagnostics& d) {
  auto clusters = [](const std::vector<GrayCluster>& cs) {
    Json out = Json::array();
    for (const auto& c : cs) out.push_back(Json{{"size", c.members.size()}, {"mean_gray", c.mean}});
    return out;
  };
  Json pairs = Json::array();
  for (const auto& p : d.pairing.pairs) {
    pairs.push_back(
        Json{{"p_cluster", p.p_cluster}, {"q_cluster", p.q_cluster}, {"distance", p.distance}});
  }
  return Json{{"p_kept", d.p_kept},         {"q_kept", d.q_kept},
              {"p_clusters", clusters(d.p_clusters)}, {"q_clusters", clusters(d.q_clusters)},
              {"kept_pairs", std::move(pairs)}};
}

int cmd_estimate(const EstimateArgs& a) {
  const CorrespondenceModel model = make_model(a.model, a.plane_normal, a.plane_offset);
  const PointSet p = read_point_set(a.p_path);
  const PointSet q = read_point_set(a.q_path);

  EstimateOptions opt;
  opt.basis = load_basis(a.basis);
  if (a.normalize == "on") {
    opt.problem.normalize = true;
  } else if (a.normalize == "off") {
    opt.problem.normalize = false;
  }
  opt.solver.max_iters = a.max_iters;
  opt.multistart = a.multistart;
  opt.seed = static_cast<std::uint64_t>(a.seed);
  if (a.ransac) {
    RansacConfig r;
    r.hypotheses = a.ransac_hypotheses;
    r.subset_fraction = a.ransac_fraction;
    r.inlier_threshold = a.ransac_threshold;
    r.min_inlier_fraction = a.ransac_min_inliers;
    r.seed = derive_seed(opt.seed, 3);
    r.validate();
    opt.ransac = r;
  }
  if (a.occlusion_k > 0) {
    opt.occlusion_clusters = a.occlusion_k;
    if (a.occlusion_keep >= 0) opt.occlusion_keep = static_cast<std::size_t>(a.occlusion_keep);
  }

  PoseParams theta0;
  if (!a.theta0.empty()) {
    theta0 = parse_pose(a.theta0, "--theta0");
  } else if (model.kind == ModelKind::kEpipolar2D2D) {
    theta0.translation = Vec3::UnitX();
  }

  std::optional<OracleFile> oracle;
  if (!a.oracle.empty()) oracle = oracle_from_json(read_json_file(a.oracle, false), a.oracle);

  const auto t0 = std::chrono::steady_clock::now();
  const EstimateOutcome out = estimate_pose(model, p, q, theta0, opt);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  Json report = Json::object();
  report["model"] = model_to_json(model);
  report["theta0"] = pose_to_json(theta0);
  report["theta_hat"] = pose_to_json(out.estimate.theta);
  report["objective"] = out.estimate.objective;
  report["iterations"] = out.estimate.iterations;
  report["reason"] = std::string(convergence_name(out.estimate.reason));
  report["converged"] = out.estimate.reason == Convergence::kGradient ||
                        out.estimate.reason == Convergence::kStep;
  report["runtime_ms"] = ms;
  report["p_size"] = p.size();
  report["q_size"] = q.size();
  report["chosen_start"] = out.chosen_start;
  if (out.occlusion) report["occlusion"] = occlusion_json(*out.occlusion);
  if (out.ransac) {
    report["ransac"] = Json{{"threshold", out.ransac->threshold},
                            {"p_inliers", out.ransac->p_inliers},
                            {"q_inliers", out.ransac->q_inliers},
                            {"best_hypothesis", out.ransac->best_hypothesis},
                            {"initial_theta", pose_to_json(out.ransac->initial_theta)}};
  }
  if (oracle) {
    const double err = pose_error(out.estimate.theta, oracle->theta_star, model.kind);
    report["theta_star"] = pose_to_json(oracle->theta_star);
    report["error"] = err;
    report["success"] = err <= kSuccessThreshold;
    report["rotation_error_deg"] = rotation_error_deg(out.estimate.theta, oracle->theta_star);
    report["direction_error_deg"] = direction_error_deg(out.estimate.theta, oracle->theta_star);
    if (out.ransac) {
      report["ransac"]["initial_error"] =
          pose_error(out.ransac->initial_theta, oracle->theta_star, model.kind);
    }
  }
  report["config"] = Json{{"p", a.p_path},
                          {"q", a.q_path},
                          {"basis", opt.basis.name()},
                          {"normalize", a.normalize},
                          {"ransac", a.ransac},
                          {"ransac_hypotheses", a.ransac_hypotheses},
                          {"ransac_fraction", a.ransac_fraction},
                          {"ransac_threshold", a.ransac_threshold ? Json(*a.ransac_threshold)
                                                                  : Json(nullptr)},
                          {"ransac_min_inliers", a.ransac_min_inliers},
                          {"occlusion_kmeans", a.occlusion_k},
                          {"occlusion_keep", a.occlusion_keep},
                          {"multistart", a.multistart},
                          {"seed", a.seed},
                          {"solver", solver_config_to_json(opt.solver)}};
  if (a.out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json_file(a.out, report);
    std::cout << "theta_hat " << report["theta_hat"].dump() << "\n";
  }
  return kExitOk;
}

// ---- benchmark -----------------------------------------------------------

struct BenchmarkArgs {
  std::string protocol;
  int trials = 0;
  long long seed = 1;
  std::string out_dir = ".";
  bool with_trials = false;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  std::string name = a.protocol;
  std::optional<int> trials;
  if (a.trials > 0) trials = a.trials;
  long long seed = a.seed;
  if (fs::exists(a.protocol)) {
    // {"protocol": "table1a", "trials": 100, "seed": 1}
    const Json cfg = read_json_file(a.protocol, true);
    if (!cfg.is_object() || !cfg.contains("protocol") || !cfg["protocol"].is_string()) {
      throw ConfigError(a.protocol + ": field 'protocol': expected a protocol name");
    }
    for (const auto& item : cfg.items()) {
      if (item.key() != "protocol" && item.key() != "trials" && item.key() != "seed") {
        throw ConfigError(a.protocol + ": unknown field '" + item.key() + "'");
      }
    }
    name = cfg["protocol"].get<std::string>();
    if (cfg.contains("trials")) {
      if (!cfg["trials"].is_number_integer()) {
        throw ConfigError(a.protocol + ": field 'trials': expected an integer");
      }
      if (!trials) trials = cfg["trials"].get<int>();
    }
    if (cfg.contains("seed")) {
      if (!cfg["seed"].is_number_unsigned()) {
        throw ConfigError(a.protocol + ": field 'seed': expected a nonnegative integer");
      }
      seed = cfg["seed"].get<long long>();
    }
  }
  const Protocol protocol = preset_protocol(name, trials);
  const BenchmarkSummary summary = run_protocol(protocol, static_cast<std::uint64_t>(seed));

  const fs::path dir = a.out_dir;
  ensure_dir(dir);
  Json json = benchmark_summary_to_json(summary, protocol, a.with_trials);
  if (protocol.name == "runtime") {
    std::vector<double> n, ms;
    for (const auto& c : summary.cells) {
      n.push_back(c.params.front().second);
      ms.push_back(c.mean_runtime_ms);
    }
    const LinearFit fit = fit_line(n, ms);
    json["linear_fit"] = Json{{"slope_ms_per_point", fit.slope},
                              {"intercept_ms", fit.intercept},
                              {"r_squared", fit.r_squared}};
    std::cout << "linear fit: R^2 = " << fit.r_squared << "\n";
  }
  write_text_file(dir / (protocol.name + ".csv"), benchmark_summary_csv(summary));
  write_json_file(dir / (protocol.name + ".json"), json);
  for (const auto& c : summary.cells) {
    std::printf("%-28s %4d/%-4d median error %.4g  mean runtime %.2f ms\n", c.label.c_str(),
                c.successes, c.trials, c.median_error, c.mean_runtime_ms);
    if (c.median_pre_ransac_error) {
      std::printf("%-28s median error before RANSAC %.4g\n", "", *c.median_pre_ransac_error);
    }
  }
  return kExitOk;
}

// ---- segment / register ---------------------------------------------------

struct HsvArgs {
  double h_lo = 340.0;
  double h_hi = 20.0;
  double s_min = 0.5;
  double v_min = 0.3;
  double focal = 800.0;
  std::string principal;

  HsvThreshold threshold() const {
    HsvThreshold t{h_lo, h_hi, s_min, v_min};
    t.validate();
    return t;
  }
  std::optional<Eigen::Vector2d> principal_point() const {
    if (principal.empty()) return std::nullopt;
    const auto v = parse_list(principal, "--principal");
    if (v.size() != 2) throw InvalidArgument("--principal needs cx,cy");
    return Eigen::Vector2d(v[0], v[1]);
  }

  void add_to(CLI::App* app) {
    app->add_option("--h-lo", h_lo, "Lower hue bound in degrees")->capture_default_str();
    app->add_option("--h-hi", h_hi, "Upper hue bound in degrees (wraps through 0)")
        ->capture_default_str();
    app->add_option("--s-min", s_min, "Minimum saturation")->capture_default_str();
    app->add_option("--v-min", v_min, "Minimum value")->capture_default_str();
    app->add_option("--focal", focal, "Focal length in pixels")->capture_default_str();
    app->add_option("--principal", principal, "Principal point cx,cy (default: center)");
  }
};

struct SegmentArgs {
  std::string image;
  std::string out;
  HsvArgs hsv;
};

int cmd_segment(const SegmentArgs& a) {
  const Raster img = load_image(a.image);
  const PointSet set = segment_hsv(img, a.hsv.threshold(), a.hsv.focal, a.hsv.principal_point());
  const Json source{{"image", a.image}, {"width", img.width}, {"height", img.height},
                    {"focal_length", a.hsv.focal}};
  if (a.out.empty()) {
    std::cout << point_set_to_json(set, source).dump() << "\n";
  } else {
    write_point_set(a.out, set, source);
    std::cout << "segmented " << set.size() << " points\n";
  }
  return kExitOk;
}

struct RegisterArgs {
  std::string p_image;
  std::string q_image;
  std::string theta;
  std::string plane_normal = "0,0,1";
  double plane_offset = SceneConfig{}.depth;
  std::string overlay;
  std::string out;
  HsvArgs hsv;
};

int cmd_register(const RegisterArgs& a) {
  const Raster p_img = load_image(a.p_image);
  const Raster q_img = load_image(a.q_image);
  const auto thr = a.hsv.threshold();
  const PointSet p = segment_hsv(p_img, thr, a.hsv.focal, a.hsv.principal_point());
  const PointSet q = segment_hsv(q_img, thr, a.hsv.focal, a.hsv.principal_point());
  const CorrespondenceModel model = make_model("homography", a.plane_normal, a.plane_offset);
  const PoseParams theta = parse_pose(a.theta, "--theta");
  const CameraIntrinsics cam{
      a.hsv.focal,
      a.hsv.principal_point().value_or(Eigen::Vector2d(q_img.width / 2.0, q_img.height / 2.0))};
  std::vector<Eigen::Vector2d> reprojected;
  const RegistrationReport r = register_sets(p, q, model, theta, cam, &reprojected);

  if (!a.overlay.empty()) {
    Raster overlay = q_img;
    for (auto& v : overlay.rgb) v = static_cast<std::uint8_t>(128 + v / 2);
    for (const auto& px : reprojected) {
      const long x = std::lround(px.x()), y = std::lround(px.y());
      if (x < 0 || y < 0 || x >= overlay.width || y >= overlay.height) continue;
      overlay.set(static_cast<int>(x), static_cast<int>(y), 20, 60, 230);
    }
    save_png(overlay, a.overlay);
  }
  const Json report{{"p_points", r.p_points}, {"q_points", r.q_points},
                    {"dropped", r.dropped},   {"mean_px", r.mean_px},
                    {"p95_px", r.p95_px},     {"max_px", r.max_px},
                    {"theta", pose_to_json(theta)}};
  if (a.out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json_file(a.out, report);
    std::printf("mean %.3f px, p95 %.3f px\n", r.mean_px, r.p95_px);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correspondence-free relative pose estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cfpose 0.1.0");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a synthetic scene");
  s->add_option("--config", sim.config, "Scene config JSON");
  s->add_option("--model", sim.model, "rigid3d | bearing | epipolar | homography");
  s->add_option("--n-points", sim.n_points, "Curve samples");
  s->add_option("--seed", sim.seed, "Scene seed");
  s->add_option("--out-dir", sim.out_dir, "Output directory")->required();
  s->add_flag("--images", sim.images, "Also rasterize p.png and q.png");
  s->add_option("--width", sim.width, "Image width")->capture_default_str();
  s->add_option("--height", sim.height, "Image height")->capture_default_str();

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate the pose between two point sets");
  e->add_option("p", est.p_path, "P point-set JSON")->required();
  e->add_option("q", est.q_path, "Q point-set JSON")->required();
  e->add_option("--model", est.model, "rigid3d | bearing | epipolar | homography")
      ->capture_default_str();
  e->add_option("--plane-normal", est.plane_normal, "Homography plane normal nx,ny,nz")
      ->capture_default_str();
  e->add_option("--plane-offset", est.plane_offset, "Homography plane offset d")
      ->capture_default_str();
  e->add_option("--basis", est.basis, "paper18 | identity | basis JSON file")
      ->capture_default_str();
  e->add_flag("--ransac", est.ransac, "Reject outliers with RANSAC");
  e->add_option("--ransac-hypotheses", est.ransac_hypotheses)->capture_default_str();
  e->add_option("--ransac-fraction", est.ransac_fraction)->capture_default_str();
  e->add_option("--ransac-threshold", est.ransac_threshold,
                "Fixed inlier distance (default: 3 * MAD)");
  e->add_option("--ransac-min-inliers", est.ransac_min_inliers,
                "Minimum inlier fraction per set")
      ->capture_default_str();
  e->add_option("--occlusion-kmeans", est.occlusion_k, "Gray clusters for occlusion pairing");
  e->add_option("--occlusion-keep", est.occlusion_keep, "Cluster pairs kept (default k-1)");
  e->add_option("--theta0", est.theta0, "Initial pose yaw,pitch,roll,tx,ty,tz or JSON file");
  e->add_option("--multistart", est.multistart, "Number of starts")->capture_default_str();
  e->add_option("--seed", est.seed, "Seed for RANSAC, k-means and extra starts")
      ->capture_default_str();
  e->add_option("--normalize", est.normalize, "auto | on | off")
      ->check(CLI::IsMember({"auto", "on", "off"}))
      ->capture_default_str();
  e->add_option("--max-iters", est.max_iters)->capture_default_str();
  e->add_option("--oracle", est.oracle, "Oracle JSON; adds error and success to the report")
      ;
  e->add_option("--out", est.out, "Report JSON (default: stdout)");

  BenchmarkArgs bench;
  auto* b = app.add_subcommand("benchmark", "Run a trial protocol");
  b->add_option("protocol", bench.protocol,
                "table1a | table1b | noiseless | runtime | outliers150 | occlusion | "
                "epipolar, or a JSON file {protocol, trials, seed}")
      ->required();
  b->add_option("--trials", bench.trials, "Trials per cell (default: preset)");
  b->add_option("--seed", bench.seed)->capture_default_str();
  b->add_option("--out-dir", bench.out_dir)->capture_default_str();
  b->add_flag("--with-trials", bench.with_trials, "Embed per-trial reports in the JSON");

  SegmentArgs seg;
  auto* g = app.add_subcommand("segment", "Extract a point set from an image by HSV threshold");
  g->add_option("image", seg.image)->required();
  g->add_option("--out", seg.out, "Point-set JSON (default: stdout)");
  seg.hsv.add_to(g);

  RegisterArgs reg;
  auto* r = app.add_subcommand("register", "Reproject P's pattern into Q with a homography pose");
  r->add_option("p_image", reg.p_image)->required();
  r->add_option("q_image", reg.q_image)->required();
  r->add_option("--theta", reg.theta, "Pose yaw,pitch,roll,tx,ty,tz or JSON file")->required();
  r->add_option("--plane-normal", reg.plane_normal)->capture_default_str();
  r->add_option("--plane-offset", reg.plane_offset)->capture_default_str();
  r->add_option("--overlay", reg.overlay, "Overlay PNG output");
  r->add_option("--out", reg.out, "Report JSON (default: stdout)");
  reg.hsv.add_to(r);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim);
    if (e->parsed()) return cmd_estimate(est);
    if (b->parsed()) return cmd_benchmark(bench);
    if (g->parsed()) return cmd_segment(seg);
    if (r->parsed()) return cmd_register(reg);
  } catch (const NoConsensus& ex) {
    std::cerr << "estimation failed: " << ex.what() << "\n";
    return kExitEstimation;
  } catch (const DegenerateDirection& ex) {
    std::cerr << "estimation failed: " << ex.what() << "\n";
    return kExitEstimation;
  } catch (const NonFinite& ex) {
    std::cerr << "estimation failed: " << ex.what() << "\n";
    return kExitEstimation;
  } catch (const ZeroSpread& ex) {
    std::cerr << "estimation failed: " << ex.what() << "\n";
    return kExitEstimation;
  } catch (const IoError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const InvalidArgument& ex) {
    std::cerr << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const Error& ex) {
    // CorruptFile, UnsupportedFormat, ConfigError, EmptySegmentation.
    std::cerr << "data error: " << ex.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
