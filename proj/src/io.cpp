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

#include "cfpose/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "cfpose/errors.hpp"

namespace cfpose {

namespace {

[[noreturn]] void fail(bool is_config, const std::string& msg) {
  if (is_config) throw ConfigError(msg);
  throw CorruptFile(msg);
}

// Typed access to the members of one JSON object. Every key read is
// recorded so finish() can reject the ones nobody asked for.
class Fields {
 public:
  Fields(const Json& value, std::string where, bool is_config)
      : value_(value), where_(std::move(where)), is_config_(is_config) {
    if (!value_.is_object()) fail(is_config_, where_ + ": expected a JSON object");
  }

  bool has(const std::string& key) const { return value_.contains(key); }

  const Json* raw(const std::string& key) {
    used_.insert(key);
    const auto it = value_.find(key);
    return it == value_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const Json* v = raw(key);
    return v ? as_number(*v, key) : fallback;
  }

  double required_number(const std::string& key) {
    const Json* v = raw(key);
    if (!v) fail(is_config_, where_ + ": missing field '" + key + "'");
    return as_number(*v, key);
  }

  long integer(const std::string& key, long fallback) {
    const Json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) error(key, "expected an integer");
    return v->get<long>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const Json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_string()) error(key, "expected a string");
    return v->get<std::string>();
  }

  Vec3 vec3(const std::string& key) {
    const Json* v = raw(key);
    if (!v) fail(is_config_, where_ + ": missing field '" + key + "'");
    return to_vec3(*v, key);
  }

  std::vector<double> numbers(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return {};
    if (!v->is_array()) error(key, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v->size());
    for (const auto& x : *v) out.push_back(as_number(x, key));
    return out;
  }

  Vec3 to_vec3(const Json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 3) error(key, "expected an array of 3 numbers");
    return Vec3(as_number(v[0], key), as_number(v[1], key), as_number(v[2], key));
  }

  [[noreturn]] void error(const std::string& key, const std::string& what) const {
    fail(is_config_, where_ + ": field '" + key + "': " + what);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : value_.items()) {
      if (!used_.count(item.key())) {
        fail(is_config_, where_ + ": unknown field '" + item.key() + "'");
      }
    }
  }

 private:
  double as_number(const Json& v, const std::string& key) const {
    if (!v.is_number()) error(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) error(key, "expected a finite number");
    return d;
  }

  const Json& value_;
  std::string where_;
  bool is_config_;
  std::set<std::string> used_;
};

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Json parse_json(std::string_view text, const std::string& name, bool is_config) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    // Translate the byte offset into line and column.
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string reason = e.what();
    if (const auto pos = reason.find("syntax error"); pos != std::string::npos) {
      reason = reason.substr(pos);
    }
    fail(is_config, name + ":" + std::to_string(line) + ":" + std::to_string(column) +
                        ": " + reason);
  }
}

Json read_json_file(const std::filesystem::path& path, bool is_config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return parse_json(buffer.str(), path.string(), is_config);
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

Json point_set_to_json(const PointSet& set, const Json& source) {
  Json pts = Json::array();
  for (const auto& p : set.points) {
    if (set.dim == 2) {
      pts.push_back(Json::array({p.x(), p.y()}));
    } else {
      pts.push_back(vec_json(p));
    }
  }
  Json out = Json::object();
  out["dim"] = set.dim;
  out["points"] = std::move(pts);
  if (set.gray) out["gray"] = *set.gray;
  if (!source.empty()) out["source"] = source;
  return out;
}

PointSet point_set_from_json(const Json& value, const std::string& name) {
  Fields f(value, name, false);
  PointSet set;
  const long dim = f.integer("dim", -1);
  if (dim != 2 && dim != 3) f.error("dim", "must be 2 or 3");
  set.dim = static_cast<int>(dim);
  const Json* pts = f.raw("points");
  if (!pts || !pts->is_array()) f.error("points", "expected an array of points");
  set.points.reserve(pts->size());
  for (std::size_t i = 0; i < pts->size(); ++i) {
    const Json& p = (*pts)[i];
    const std::string where = "points[" + std::to_string(i) + "]";
    if (!p.is_array() || !std::all_of(p.begin(), p.end(), [](const Json& x) {
          return x.is_number();
        })) {
      f.error(where, "expected an array of numbers");
    }
    if (set.dim == 2 && p.size() == 2) {
      set.points.emplace_back(p[0].get<double>(), p[1].get<double>(), 1.0);
    } else if (p.size() == 3) {
      set.points.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    } else {
      f.error(where, "wrong number of coordinates for dim " + std::to_string(dim));
    }
  }
  if (f.has("gray")) set.gray = f.numbers("gray");
  f.raw("source");
  f.finish();
  try {
    set.validate();
  } catch (const InvalidArgument& e) {
    throw CorruptFile(name + ": " + e.what());
  }
  return set;
}

void write_point_set(const std::filesystem::path& path, const PointSet& set,
                     const Json& source) {
  write_json_file(path, point_set_to_json(set, source));
}

PointSet read_point_set(const std::filesystem::path& path) {
  return point_set_from_json(read_json_file(path, false), path.string());
}

Json pose_to_json(const PoseParams& pose) {
  Json out = Json::object();
  out["yaw"] = pose.angles.yaw;
  out["pitch"] = pose.angles.pitch;
  out["roll"] = pose.angles.roll;
  out["translation"] = vec_json(pose.translation);
  return out;
}

PoseParams pose_from_json(const Json& value, const std::string& where) {
  Fields f(value, where, true);
  PoseParams p;
  p.angles.yaw = f.number("yaw", 0.0);
  p.angles.pitch = f.number("pitch", 0.0);
  p.angles.roll = f.number("roll", 0.0);
  p.translation = f.vec3("translation");
  f.finish();
  return p;
}

Json model_to_json(const CorrespondenceModel& model) {
  Json out = Json::object();
  out["kind"] = std::string(model_name(model.kind));
  if (model.kind == ModelKind::kHomography2D2D) {
    out["plane_normal"] = vec_json(model.plane_normal);
    out["plane_offset"] = model.plane_offset;
  }
  return out;
}

CorrespondenceModel model_from_json(const Json& value, const std::string& where) {
  Fields f(value, where, true);
  const std::string kind = f.string("kind", "");
  CorrespondenceModel m;
  try {
    m.kind = model_from_name(kind);
  } catch (const InvalidArgument& e) {
    f.error("kind", e.what());
  }
  if (m.kind == ModelKind::kHomography2D2D) {
    m.plane_normal = f.has("plane_normal") ? f.vec3("plane_normal") : Vec3::UnitZ();
    m.plane_offset = f.number("plane_offset", 1.0);
    try {
      m.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  f.finish();
  return m;
}

Json oracle_to_json(const Scene& scene) {
  Json corr = Json::array();
  for (auto c : scene.oracle.correspondence) {
    if (c == OraclePermutation::kNone) {
      corr.push_back(nullptr);
    } else {
      corr.push_back(c);
    }
  }
  Json out = Json::object();
  out["model"] = model_to_json(scene.model);
  out["theta_star"] = pose_to_json(scene.theta_star);
  out["correspondence"] = std::move(corr);
  out["q_outlier"] = scene.oracle.q_outlier;
  return out;
}

OracleFile oracle_from_json(const Json& value, const std::string& name) {
  Fields f(value, name, false);
  OracleFile out;
  const Json* model = f.raw("model");
  const Json* theta = f.raw("theta_star");
  if (!model || !theta) throw CorruptFile(name + ": oracle needs model and theta_star");
  try {
    out.model = model_from_json(*model, name + ".model");
    out.theta_star = pose_from_json(*theta, name + ".theta_star");
  } catch (const ConfigError& e) {
    throw CorruptFile(e.what());
  }
  if (const Json* corr = f.raw("correspondence")) {
    if (!corr->is_array()) f.error("correspondence", "expected an array");
    for (const auto& c : *corr) {
      if (c.is_null()) {
        out.oracle.correspondence.push_back(OraclePermutation::kNone);
      } else if (c.is_number_unsigned()) {
        out.oracle.correspondence.push_back(c.get<std::size_t>());
      } else {
        f.error("correspondence", "expected indices or null");
      }
    }
  }
  if (const Json* mask = f.raw("q_outlier")) {
    if (!mask->is_array()) f.error("q_outlier", "expected an array");
    for (const auto& b : *mask) {
      if (!b.is_boolean()) f.error("q_outlier", "expected booleans");
      out.oracle.q_outlier.push_back(b.get<bool>());
    }
  }
  f.finish();
  return out;
}

FeatureBasis basis_from_json(const Json& value, const std::string& name) {
  Fields f(value, name, true);
  const std::string basis_name = f.string("name", "custom");
  const Json* funcs = f.raw("functions");
  if (!funcs || !funcs->is_array() || funcs->empty()) {
    f.error("functions", "expected a nonempty array");
  }
  std::vector<FeatureFunction> out;
  for (std::size_t i = 0; i < funcs->size(); ++i) {
    const std::string where = name + ".functions[" + std::to_string(i) + "]";
    Fields ff((*funcs)[i], where, true);
    const std::string fname = ff.string("name", "f" + std::to_string(i + 1));
    const Json* terms = ff.raw("terms");
    if (!terms || !terms->is_object() || terms->empty()) {
      ff.error("terms", "expected a nonempty object of term coefficients");
    }
    TermSeries s;
    Fields tf(*terms, where + ".terms", true);
    for (const auto& item : terms->items()) {
      const auto term = term_from_name(item.key());
      if (!term) tf.error(item.key(), "unknown term");
      s.set(*term, tf.required_number(item.key()));
    }
    ff.finish();
    out.push_back(FeatureFunction::series(fname, s));
  }
  f.finish();
  FeatureBasis basis(std::move(out));
  basis.set_name(basis_name);
  return basis;
}

Json basis_to_json(const FeatureBasis& basis) {
  Json funcs = Json::array();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const FeatureFunction& fn = basis[i];
    if (!fn.is_series()) {
      throw InvalidArgument("basis function '" + fn.name() + "' has no closed form");
    }
    Json terms = Json::object();
    for (int t = 0; t < kTermCount; ++t) {
      const double c = fn.terms().coeff[t];
      if (c != 0.0) terms[std::string(term_name(static_cast<Term>(t)))] = c;
    }
    funcs.push_back(Json{{"name", fn.name()}, {"terms", std::move(terms)}});
  }
  return Json{{"name", basis.name()}, {"functions", std::move(funcs)}};
}

FeatureBasis load_basis(const std::string& name_or_path) {
  if (name_or_path == "paper18" || name_or_path == "identity") {
    return basis_by_name(name_or_path);
  }
  if (!std::filesystem::exists(name_or_path)) {
    throw ConfigError("unknown basis '" + name_or_path +
                      "' (expected paper18, identity or a basis file)");
  }
  return basis_from_json(read_json_file(name_or_path, true), name_or_path);
}

SimulateConfig simulate_config_from_json(const Json& value, const std::string& name) {
  Fields f(value, name, true);
  SimulateConfig c;
  ModelKind kind = ModelKind::kBearing3D2D;
  if (f.has("model")) {
    const std::string m = f.string("model", "");
    try {
      kind = model_from_name(m);
    } catch (const InvalidArgument& e) {
      f.error("model", e.what());
    }
  } else {
    f.raw("model");
  }
  c.scene = default_scene_config(kind);
  c.scene.n_points = static_cast<int>(f.integer("n_points", c.scene.n_points));
  const long seed = f.integer("seed", static_cast<long>(c.scene.seed));
  if (seed < 0) f.error("seed", "must be nonnegative");
  c.scene.seed = static_cast<std::uint64_t>(seed);
  c.scene.depth = f.number("depth", c.scene.depth);
  c.scene.focal_length = f.number("focal_length", c.scene.focal_length);
  c.scene.curve_scale = f.number("curve_scale", c.scene.curve_scale);
  if (f.has("curve")) {
    try {
      c.scene.curve = curve_from_name(f.string("curve", ""));
    } catch (const InvalidArgument& e) {
      f.error("curve", e.what());
    }
  } else {
    f.raw("curve");
  }
  if (const Json* theta = f.raw("theta_star")) {
    c.scene.theta_star = pose_from_json(*theta, f.path("theta_star"));
  }
  if (const Json* noise = f.raw("noise")) {
    Fields nf(*noise, f.path("noise"), true);
    c.noise.b_p = nf.number("b_p", c.noise.b_p);
    c.noise.b_i = nf.number("b_i", c.noise.b_i);
    if (const Json* bm = nf.raw("b_m"); bm && !bm->is_null()) {
      c.noise.b_m = nf.number("b_m", c.noise.b_m);
    }
    c.noise.outlier_count = static_cast<int>(nf.integer("outliers", 0));
    if (nf.has("outlier_box")) {
      const auto box = nf.numbers("outlier_box");
      if (box.size() != 4) nf.error("outlier_box", "expected [u0, v0, width, height]");
      c.noise.outlier_box = OutlierBox{box[0], box[1], box[2], box[3]};
    } else {
      nf.raw("outlier_box");
    }
    nf.finish();
  }
  if (const Json* occ = f.raw("occlusion")) {
    Fields of(*occ, f.path("occlusion"), true);
    OcclusionConfig o;
    o.gray_levels = static_cast<int>(of.integer("gray_levels", o.gray_levels));
    o.p_fraction = of.number("p_fraction", o.p_fraction);
    o.q_fraction = of.number("q_fraction", o.q_fraction);
    o.p_occluder_gray = of.number("p_occluder_gray", o.p_occluder_gray);
    o.q_occluder_gray = of.number("q_occluder_gray", o.q_occluder_gray);
    o.gray_noise = of.number("gray_noise", o.gray_noise);
    of.finish();
    c.occlusion = o;
  }
  f.finish();
  try {
    c.scene.validate();
    c.noise.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(name + ": " + e.what());
  }
  return c;
}

Json simulate_config_to_json(const SimulateConfig& c) {
  Json out = Json::object();
  out["model"] = std::string(model_name(c.scene.model));
  out["n_points"] = c.scene.n_points;
  out["seed"] = c.scene.seed;
  out["depth"] = c.scene.depth;
  out["focal_length"] = c.scene.focal_length;
  out["curve"] = std::string(curve_name(c.scene.curve));
  out["curve_scale"] = c.scene.curve_scale;
  out["theta_star"] = pose_to_json(c.scene.theta_star);
  Json noise = Json::object();
  noise["b_p"] = c.noise.b_p;
  noise["b_i"] = c.noise.b_i;
  noise["b_m"] = std::isfinite(c.noise.b_m) ? Json(c.noise.b_m) : Json(nullptr);
  noise["outliers"] = c.noise.outlier_count;
  const auto& box = c.noise.outlier_box;
  noise["outlier_box"] = Json::array({box.u0, box.v0, box.width, box.height});
  out["noise"] = std::move(noise);
  if (c.occlusion) {
    const auto& o = *c.occlusion;
    out["occlusion"] = Json{{"gray_levels", o.gray_levels},
                            {"p_fraction", o.p_fraction},
                            {"q_fraction", o.q_fraction},
                            {"p_occluder_gray", o.p_occluder_gray},
                            {"q_occluder_gray", o.q_occluder_gray},
                            {"gray_noise", o.gray_noise}};
  }
  return out;
}

Json solver_config_to_json(const SolverConfig& s) {
  static const char* modes[] = {"analytic", "forward_diff", "central_diff"};
  return Json{{"max_iters", s.max_iters},
              {"gradient_tolerance", s.gradient_tolerance},
              {"step_tolerance", s.step_tolerance},
              {"initial_damping", s.initial_damping},
              {"damping_increase", s.damping_increase},
              {"damping_decrease", s.damping_decrease},
              {"jacobian_mode", modes[static_cast<int>(s.jacobian_mode)]}};
}

Json trial_spec_to_json(const TrialSpec& spec) {
  SimulateConfig sim{spec.scene, spec.noise, spec.occlusion};
  Json out = simulate_config_to_json(sim);
  out.erase("seed");
  out["perturbation"] = spec.perturbation == Perturbation::kNormal ? "normal" : "uniform";
  out["basis"] = spec.basis;
  out["solver"] = solver_config_to_json(spec.solver);
  if (spec.ransac) {
    const auto& r = *spec.ransac;
    Json rj{{"subset_fraction", r.subset_fraction},
            {"subset_kind", r.subset_kind == SubsetKind::kHalfSpace ? "half_space" : "uniform"},
            {"hypotheses", r.hypotheses},
            {"threshold_floor", r.threshold_floor},
            {"refit_threshold_scale", r.refit_threshold_scale},
            {"min_inlier_fraction", r.min_inlier_fraction},
            {"refine_rounds", r.refine_rounds}};
    rj["inlier_threshold"] =
        r.inlier_threshold ? Json(*r.inlier_threshold) : Json("3*MAD");
    out["ransac"] = std::move(rj);
  }
  if (spec.occlusion_clusters) {
    out["occlusion_kmeans"] = *spec.occlusion_clusters;
    out["occlusion_keep"] = spec.occlusion_keep
                                ? Json(*spec.occlusion_keep)
                                : Json(*spec.occlusion_clusters - 1);
  }
  out["multistart"] = spec.multistart;
  return out;
}

namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json trial_report_to_json(const TrialReport& r) {
  Json out = Json::object();
  out["seed"] = r.seed;
  out["theta_star"] = pose_to_json(r.theta_star);
  out["theta0"] = pose_to_json(r.theta0);
  out["theta_hat"] = pose_to_json(r.theta_hat);
  out["error"] = finite_or_null(r.error);
  out["success"] = r.success;
  out["iterations"] = r.iterations;
  out["reason"] = r.reason;
  out["runtime_ms"] = r.runtime_ms;
  out["p_size"] = r.p_size;
  out["q_size"] = r.q_size;
  out["rotation_error_deg"] = r.rotation_error_deg;
  out["direction_error_deg"] = r.direction_error_deg;
  if (r.pre_ransac_error) out["pre_ransac_error"] = *r.pre_ransac_error;
  if (r.outliers_injected) out["outliers_injected"] = *r.outliers_injected;
  if (r.outliers_rejected) out["outliers_rejected"] = *r.outliers_rejected;
  if (r.failure) out["failure"] = *r.failure;
  return out;
}

Json benchmark_summary_to_json(const BenchmarkSummary& s, const Protocol& protocol,
                               bool include_trials) {
  Json cells = Json::array();
  for (std::size_t c = 0; c < s.cells.size(); ++c) {
    const CellResult& r = s.cells[c];
    Json cj = Json::object();
    cj["label"] = r.label;
    Json params = Json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    cj["params"] = std::move(params);
    cj["trials"] = r.trials;
    cj["successes"] = r.successes;
    cj["mean_error"] = finite_or_null(r.mean_error);
    cj["median_error"] = finite_or_null(r.median_error);
    cj["mean_runtime_ms"] = r.mean_runtime_ms;
    cj["mean_iterations"] = r.mean_iterations;
    if (r.median_pre_ransac_error) cj["median_pre_ransac_error"] = *r.median_pre_ransac_error;
    if (c < protocol.cells.size()) cj["config"] = trial_spec_to_json(protocol.cells[c].trial);
    if (include_trials) {
      Json trials = Json::array();
      for (const auto& rep : r.reports) trials.push_back(trial_report_to_json(rep));
      cj["reports"] = std::move(trials);
    }
    cells.push_back(std::move(cj));
  }
  Json out = Json::object();
  out["protocol"] = s.protocol;
  out["seed"] = s.seed;
  out["success_threshold"] = kSuccessThreshold;
  out["cells"] = std::move(cells);
  return out;
}

std::string benchmark_summary_csv(const BenchmarkSummary& s) {
  std::vector<std::string> keys;
  for (const auto& c : s.cells) {
    for (const auto& [k, v] : c.params) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  }
  std::ostringstream out;
  out << std::setprecision(10);
  out << "protocol,cell";
  for (const auto& k : keys) out << "," << k;
  out << ",trials,successes,mean_error,median_error,mean_runtime_ms,mean_iterations\n";
  for (const auto& c : s.cells) {
    out << s.protocol << ",\"" << c.label << "\"";
    for (const auto& k : keys) {
      out << ",";
      for (const auto& [pk, pv] : c.params) {
        if (pk == k) out << pv;
      }
    }
    out << "," << c.trials << "," << c.successes << "," << c.mean_error << ","
        << c.median_error << "," << c.mean_runtime_ms << "," << c.mean_iterations << "\n";
  }
  return out.str();
}

}  // namespace cfpose
