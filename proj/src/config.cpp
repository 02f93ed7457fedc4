#include "iekf/config.hpp"

#include <set>

#include "json.hpp"

#include "iekf/io.hpp"

#ifndef IEKF_VERSION
#define IEKF_VERSION "unknown"
#endif

namespace iekf {
namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

// Reads keys from one JSON object and rejects any key that was never asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  Section sub(const std::string& key) {
    static const json empty = json::object();
    return Section(has(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  void num(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) config_error(where(key), "expected a number");
    out = v.get<double>();
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) config_error(where(key), "expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) {
        out = static_cast<Int>(v.get<std::uint64_t>());
        return;
      }
      if (v.get<long long>() < 0) config_error(where(key), "expected a non-negative integer");
      out = static_cast<Int>(v.get<long long>());
    } else {
      out = static_cast<Int>(v.get<long long>());
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) config_error(where(key), "expected true or false");
    out = v.get<bool>();
  }

  void str(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) config_error(where(key), "expected a string");
    out = v.get<std::string>();
  }

  void vec3(const std::string& key, Vec3& out) {
    if (!has(key)) return;
    out = read_vec3(j_.at(key), where(key));
  }

  void mat3(const std::string& key, Mat3& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 3) config_error(where(key), "expected 3 rows");
    for (int i = 0; i < 3; ++i) {
      out.row(i) = read_vec3(v[i], where(key) + "[" + std::to_string(i) + "]").transpose();
    }
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) config_error(where(key), "unknown key");
    }
  }

 private:
  static Vec3 read_vec3(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) config_error(path, "expected 3 numbers");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) config_error(path, "expected 3 numbers");
      out(i) = v[i].get<double>();
    }
    return out;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

TrajectoryKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "lissajous") return TrajectoryKind::Lissajous;
  if (s == "line") return TrajectoryKind::Line;
  if (s == "static") return TrajectoryKind::Static;
  config_error(path, "unknown trajectory kind '" + s + "'");
}

AttitudePolicy parse_policy(const std::string& s, const std::string& path) {
  if (s == "yaw_follows_velocity") return AttitudePolicy::YawFollowsVelocity;
  if (s == "level") return AttitudePolicy::Level;
  config_error(path, "unknown attitude policy '" + s + "'");
}

ProjectionMode parse_projection(const std::string& s, const std::string& path) {
  if (s == "bearing") return ProjectionMode::Bearing;
  if (s == "pinhole") return ProjectionMode::Pinhole;
  config_error(path, "unknown projection '" + s + "'");
}

FilterVariant parse_variant(const std::string& s, const std::string& path) {
  try {
    return FilterVariant::parse(s);
  } catch (const Error& e) {
    config_error(path, e.what());
  }
}

void parse_scenario(Section sec, Scenario& s) {
  sec.integer("seed", s.seed);
  sec.num("pixel_noise", s.pixel_noise);
  {
    Section t = sec.sub("trajectory");
    auto& tr = s.trajectory;
    std::string name;
    t.str("kind", name);
    if (!name.empty()) tr.kind = parse_kind(name, t.where("kind"));
    name.clear();
    t.str("attitude", name);
    if (!name.empty()) tr.attitude = parse_policy(name, t.where("attitude"));
    t.num("duration", tr.duration);
    t.num("imu_rate", tr.imu_rate);
    t.num("cam_rate", tr.cam_rate);
    t.vec3("origin", tr.origin);
    t.vec3("velocity", tr.velocity);
    t.finish();
  }
  {
    Section l = sec.sub("landmarks");
    l.integer("count", s.landmark_spec.count);
    l.vec3("box_min", s.landmark_spec.box_min);
    l.vec3("box_max", s.landmark_spec.box_max);
    l.finish();
  }
  {
    Section n = sec.sub("imu_noise");
    n.num("sigma_gw", s.noise.sigma_gw);
    n.num("sigma_aw", s.noise.sigma_aw);
    n.num("sigma_gbw", s.noise.sigma_gbw);
    n.num("sigma_abw", s.noise.sigma_abw);
    n.vec3("gravity", s.noise.gravity);
    n.finish();
  }
  {
    Section c = sec.sub("camera");
    auto& cam = s.camera;
    c.mat3("K", cam.K);
    std::string mode;
    c.str("projection", mode);
    if (!mode.empty()) cam.mode = parse_projection(mode, c.where("projection"));
    c.integer("width", cam.width);
    c.integer("height", cam.height);
    c.num("sigma_px", cam.sigma_px);
    c.num("max_range", cam.max_range);
    Mat3 R = s.extrinsics.R_IC.matrix();
    c.mat3("R_IC", R);
    try {
      s.extrinsics.R_IC = Rotation(R);
    } catch (const Error&) {
      config_error(c.where("R_IC"), "not a proper rotation");
    }
    c.vec3("p_IC", s.extrinsics.p_IC);
    c.finish();
  }
  {
    Section i = sec.sub("init");
    i.num("sigma_theta", s.init.sigma_theta);
    i.num("sigma_p", s.init.sigma_p);
    i.num("sigma_v", s.init.sigma_v);
    i.num("sigma_bg", s.init.sigma_bg);
    i.num("sigma_ba", s.init.sigma_ba);
    i.finish();
  }
  {
    Section m = sec.sub("msckf");
    m.integer("max_clones", s.msckf.max_clones);
    m.integer("max_features", s.msckf.max_features);
    m.num("chi2_confidence", s.msckf.chi2_confidence);
    m.boolean("parallel", s.msckf.parallel);
    Section t = m.sub("triangulation");
    t.integer("max_iterations", s.msckf.triangulation.max_iterations);
    t.num("step_tolerance", s.msckf.triangulation.step_tolerance);
    t.num("min_baseline", s.msckf.triangulation.min_baseline);
    t.finish();
    m.finish();
  }
  sec.finish();
}

void parse_filters(Section sec, std::vector<FilterVariant>& out) {
  if (sec.has("variants")) {
    const json& v = sec.raw("variants");
    if (!v.is_array()) config_error(sec.where("variants"), "expected an array of labels");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string path = sec.where("variants") + "[" + std::to_string(i) + "]";
      if (!v[i].is_string()) config_error(path, "expected a label");
      out.push_back(parse_variant(v[i].get<std::string>(), path));
    }
  }
  if (sec.has("ij_ranges")) {
    const json& v = sec.raw("ij_ranges");
    if (!v.is_array()) config_error(sec.where("ij_ranges"), "expected an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string path = sec.where("ij_ranges") + "[" + std::to_string(i) + "]";
      if (!v[i].is_number()) config_error(path, "expected a number");
      out.push_back({FilterKind::IJ_IEKF, v[i].get<double>()});
    }
  }
  sec.finish();
}

ordered vec_json(const Vec3& v) { return ordered::array({v(0), v(1), v(2)}); }

ordered mat_json(const Mat3& m) {
  return ordered::array({vec_json(m.row(0)), vec_json(m.row(1)), vec_json(m.row(2))});
}

ordered to_ordered(const RunConfig& c) {
  const Scenario& s = c.scenario;
  ordered j;
  auto& sc = j["scenario"];
  sc["seed"] = s.seed;
  sc["pixel_noise"] = s.pixel_noise;
  sc["trajectory"] = {{"kind", trajectory_kind_name(s.trajectory.kind)},
                      {"attitude", attitude_policy_name(s.trajectory.attitude)},
                      {"duration", s.trajectory.duration},
                      {"imu_rate", s.trajectory.imu_rate},
                      {"cam_rate", s.trajectory.cam_rate},
                      {"origin", vec_json(s.trajectory.origin)},
                      {"velocity", vec_json(s.trajectory.velocity)}};
  sc["landmarks"] = {{"count", s.landmark_spec.count},
                     {"box_min", vec_json(s.landmark_spec.box_min)},
                     {"box_max", vec_json(s.landmark_spec.box_max)}};
  sc["imu_noise"] = {{"sigma_gw", s.noise.sigma_gw},   {"sigma_aw", s.noise.sigma_aw},
                     {"sigma_gbw", s.noise.sigma_gbw}, {"sigma_abw", s.noise.sigma_abw},
                     {"gravity", vec_json(s.noise.gravity)}};
  sc["camera"] = {{"K", mat_json(s.camera.K)},
                  {"projection", s.camera.mode == ProjectionMode::Bearing ? "bearing" : "pinhole"},
                  {"width", s.camera.width},
                  {"height", s.camera.height},
                  {"sigma_px", s.camera.sigma_px},
                  {"max_range", s.camera.max_range},
                  {"R_IC", mat_json(s.extrinsics.R_IC.matrix())},
                  {"p_IC", vec_json(s.extrinsics.p_IC)}};
  sc["init"] = {{"sigma_theta", s.init.sigma_theta}, {"sigma_p", s.init.sigma_p},
                {"sigma_v", s.init.sigma_v},         {"sigma_bg", s.init.sigma_bg},
                {"sigma_ba", s.init.sigma_ba}};
  sc["msckf"] = {{"max_clones", s.msckf.max_clones},
                 {"max_features", s.msckf.max_features},
                 {"chi2_confidence", s.msckf.chi2_confidence},
                 {"parallel", s.msckf.parallel},
                 {"triangulation",
                  {{"max_iterations", s.msckf.triangulation.max_iterations},
                   {"step_tolerance", s.msckf.triangulation.step_tolerance},
                   {"min_baseline", s.msckf.triangulation.min_baseline}}}};
  ordered labels = ordered::array();
  for (const auto& v : c.variants) labels.push_back(v.label());
  j["filters"] = {{"variants", labels}};
  j["execution"] = {{"runs", c.runs},
                    {"output_dir", c.output_dir},
                    {"threads", c.threads},
                    {"visual_updates", c.visual_updates},
                    {"exact_init", c.exact_init}};
  return j;
}

}  // namespace

void RunConfig::validate() const {
  const auto wrap = [](const std::string& path, const auto& fn) {
    try {
      fn();
    } catch (const Error& e) {
      config_error(path, e.what());
    }
  };
  const Scenario& s = scenario;
  wrap("scenario.trajectory", [&] { s.trajectory.validate(); });
  wrap("scenario.camera", [&] { s.camera.validate(); });
  wrap("scenario.imu_noise", [&] { s.noise.validate(true); });
  if (s.landmark_spec.count < 0) config_error("scenario.landmarks.count", "must be >= 0");
  if ((s.landmark_spec.box_max - s.landmark_spec.box_min).minCoeff() < 0.0) {
    config_error("scenario.landmarks", "box_max must not be below box_min");
  }
  const InitSpec& i = s.init;
  if (std::min({i.sigma_theta, i.sigma_p, i.sigma_v, i.sigma_bg, i.sigma_ba}) < 0.0) {
    config_error("scenario.init", "sigmas must be >= 0");
  }
  if (!(s.pixel_noise >= 0.0)) config_error("scenario.pixel_noise", "must be >= 0");
  if (!(s.camera.sigma_px > 0.0)) config_error("scenario.camera.sigma_px", "must be > 0");
  if (s.msckf.max_clones < 2) config_error("scenario.msckf.max_clones", "must be >= 2");
  if (s.msckf.max_features < 1) config_error("scenario.msckf.max_features", "must be >= 1");
  if (!(s.msckf.chi2_confidence > 0.0 && s.msckf.chi2_confidence < 1.0)) {
    config_error("scenario.msckf.chi2_confidence", "must be in (0, 1)");
  }
  if (s.msckf.triangulation.max_iterations < 1) {
    config_error("scenario.msckf.triangulation.max_iterations", "must be >= 1");
  }
  if (variants.empty()) config_error("filters.variants", "at least one variant is required");
  for (const auto& v : variants) wrap("filters", [&] { v.validate(); });
  if (runs < 1) config_error("execution.runs", "must be >= 1");
  if (threads < 0) config_error("execution.threads", "must be >= 0");
  if (output_dir.empty()) config_error("execution.output_dir", "must not be empty");
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, false);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed JSON: ") + e.what());
  }
  RunConfig c;
  Section root(j, "config");
  parse_scenario(root.sub("scenario"), c.scenario);
  parse_filters(root.sub("filters"), c.variants);
  {
    Section e = root.sub("execution");
    e.integer("runs", c.runs);
    e.str("output_dir", c.output_dir);
    e.integer("threads", c.threads);
    e.boolean("visual_updates", c.visual_updates);
    e.boolean("exact_init", c.exact_init);
    e.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, "cannot read config '" + path + "': " + e.what());
  }
  return parse_config(text);
}

std::string config_to_json(const RunConfig& c) { return to_ordered(c).dump(2) + "\n"; }

std::string meta_json(const RunConfig& c, const std::string& command) {
  ordered j;
  j["command"] = command;
  j["version"] = version_stamp();
  j["seed"] = c.scenario.seed;
  j["attitude_policy"] = attitude_policy_name(c.scenario.trajectory.attitude);
  j["config"] = to_ordered(c);
  return j.dump(2) + "\n";
}

const char* attitude_policy_name(AttitudePolicy p) {
  return p == AttitudePolicy::Level ? "level" : "yaw_follows_velocity";
}

const char* trajectory_kind_name(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::Line:
      return "line";
    case TrajectoryKind::Static:
      return "static";
    default:
      return "lissajous";
  }
}

const char* version_stamp() { return IEKF_VERSION; }

}  // namespace iekf
