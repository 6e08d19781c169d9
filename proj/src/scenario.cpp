#include "chairside/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace chairside::harness {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

/// Typed, path-aware accessor over one JSON object. finish() rejects any key
/// that was never asked for.
class Reader {
 public:
  Reader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return join_path(path_, key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    return it == doc_.end() || it->is_null() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback, double lo = -kInf, double hi = kInf) {
    const json* v = get(key);
    if (!v) return fallback;
    return as_number(*v, at(key), lo, hi);
  }

  int integer(const std::string& key, int fallback, int lo, int hi) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const auto n = v->get<std::int64_t>();
    if (n < lo || n > hi) {
      throw ConfigError(at(key), "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<int>(n);
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected a boolean");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, _] : doc_.items()) {
      if (!seen_.contains(key)) throw ConfigError(at(key), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& path, double lo, double hi) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    if (x < lo || x > hi) {
      std::ostringstream msg;
      msg << "must be in [" << lo << ", " << hi << "], got " << x;
      throw ConfigError(path, msg.str());
    }
    return x;
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

Vec2 parse_point(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected [x, y]");
  return {Reader::as_number(v[0], index_path(path, 0), -kInf, kInf),
          Reader::as_number(v[1], index_path(path, 1), -kInf, kInf)};
}

std::vector<Vec2> parse_polyline(const json& v, const std::string& path, std::size_t min_points) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of [x, y] points");
  if (v.size() < min_points) {
    throw ConfigError(path, "needs at least " + std::to_string(min_points) + " points");
  }
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_point(v[i], index_path(path, i)));
  return out;
}

Pose2 parse_pose(const json& v, const std::string& path) {
  Reader r(v, path);
  Pose2 p{r.number("x", 0.0), r.number("y", 0.0), normalize_deg(r.number("theta", 0.0))};
  r.finish();
  return p;
}

json point_json(Vec2 p) { return json::array({p.x, p.y}); }
json pose_json(const Pose2& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

json polyline_json(const std::vector<Vec2>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back(point_json(p));
  return out;
}

std::string read_text(const std::filesystem::path& path, const std::string& config_path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(config_path, "cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void parse_robot(const json& v, ScenarioConfig& c) {
  Reader r(v, "robot");
  if (const json* p = r.get("pose")) c.robot_pose = parse_pose(*p, r.at("pose"));
  if (const json* f = r.get("face_angle")) c.face_angle = normalize_deg(Reader::as_number(*f, r.at("face_angle"), -kInf, kInf));
  auto& rs = c.robot;
  rs.v_cap = r.number("v_cap", rs.v_cap, 0.0);
  rs.w_cap = r.number("w_cap", rs.w_cap, 0.0);
  rs.face_rate_cap = r.number("face_rate_cap", rs.face_rate_cap, 0.0);
  rs.radius = r.number("radius", rs.radius, 0.0);
  rs.lift = r.number("lift", rs.lift, sim::kLiftMin, sim::kLiftMax);
  rs.arm_extension = r.number("arm_extension", rs.arm_extension, sim::kExtensionMin, sim::kExtensionMax);
  rs.reach_offset = r.number("reach_offset", rs.reach_offset, 0.0);
  r.finish();
}

void parse_wheelchair(const json& v, WheelchairConfig& w) {
  Reader r(v, "wheelchair");
  if (const json* p = r.get("path")) w.path = parse_polyline(*p, r.at("path"), 2);
  w.speed = r.number("speed", w.speed, 0.0, 5.0);
  if (const json* sv = r.get("speed_variation")) {
    Reader s(*sv, r.at("speed_variation"));
    w.variation.amplitude = s.number("amplitude", w.variation.amplitude, 0.0, 1.0);
    w.variation.period = s.number("period", w.variation.period, 1e-3);
    w.variation.phase = s.number("phase", w.variation.phase);
    s.finish();
  }
  if (const json* fp = r.get("footprint")) {
    Reader f(*fp, r.at("footprint"));
    w.footprint.length = f.number("length", w.footprint.length, 1e-3);
    w.footprint.width = f.number("width", w.footprint.width, 1e-3);
    f.finish();
  }
  w.seated_height = r.number("seated_height", w.seated_height, 0.1);
  w.body_radius = r.number("body_radius", w.body_radius, 0.01);
  w.stop_distance = r.number("stop_distance", w.stop_distance, 0.0);
  w.turn_rate = r.number("turn_rate", w.turn_rate, 1e-3);
  r.finish();
}

void parse_camera(const json& v, ScenarioConfig& c) {
  Reader r(v, "camera");
  c.camera.hfov = r.number("hfov", c.camera.hfov, 1.0, 179.0);
  c.camera.image_width = r.integer("image_width", c.camera.image_width, 16, 10000);
  c.camera.image_height = r.integer("image_height", c.camera.image_height, 16, 10000);
  c.camera.mount_height = r.number("mount_height", c.camera.mount_height, 0.0);
  c.mast_occlusion = r.boolean("mast_occlusion", c.mast_occlusion);
  auto interval = [&](const std::string& key, perception::AngleInterval& out) {
    if (const json* s = r.get(key)) {
      const Vec2 p = parse_point(*s, r.at(key));
      if (p.y < p.x) throw ConfigError(r.at(key), "expected [lo, hi] with lo <= hi");
      out = {p.x, p.y};
    }
  };
  interval("occlusion_sector", c.mast.sector);
  interval("occlusion_face_range", c.mast.face_range);
  r.finish();
}

void parse_follow(const json& v, follow::FollowParams& f) {
  Reader r(v, "follow");
  f.target_distance = r.number("target_distance", f.target_distance, 0.0);
  f.dist_tol = r.number("dist_tol", f.dist_tol, 0.0);
  f.dev_tol_px = r.number("dev_tol_px", f.dev_tol_px, 0.0);
  f.k_v = r.number("k_v", f.k_v, 0.0);
  f.k_w = r.number("k_w", f.k_w, 0.0);
  f.k_along = r.number("k_along", f.k_along, 0.0);
  const std::string policy = r.string("lost_policy", f.lost_policy == follow::LostPolicy::Stop ? "stop" : "hold_last");
  if (policy == "stop") {
    f.lost_policy = follow::LostPolicy::Stop;
  } else if (policy == "hold_last") {
    f.lost_policy = follow::LostPolicy::HoldLast;
  } else {
    throw ConfigError(r.at("lost_policy"), "expected \"stop\" or \"hold_last\"");
  }
  f.face_nudge_rate = r.number("face_nudge_rate", f.face_nudge_rate, 0.0);
  f.hold_limit = r.number("hold_limit", f.hold_limit, 0.0);
  f.fail_staleness = r.integer("fail_staleness", f.fail_staleness, 1, 1000);
  r.finish();
}

void parse_switch(const json& v, ScenarioConfig& c) {
  Reader r(v, "switch");
  c.switch_geometry.midpoint_distance = r.number("midpoint_distance", c.switch_geometry.midpoint_distance, 0.0);
  c.switch_geometry.left_midpoint_orbit = r.number("left_midpoint_orbit", c.switch_geometry.left_midpoint_orbit);
  c.switch_geometry.right_midpoint_orbit = r.number("right_midpoint_orbit", c.switch_geometry.right_midpoint_orbit);
  c.executor.speed = r.number("speed", c.executor.speed, 1e-3);
  c.executor.abort_displacement = r.number("abort_displacement", c.executor.abort_displacement, 0.0);
  c.max_replans = r.integer("max_replans", c.max_replans, 0, 100);
  r.finish();
}

void parse_speech(const json& v, ScenarioConfig& c) {
  Reader r(v, "speech");
  auto& s = c.speech;
  if (const json* u = r.get("utterances")) {
    if (!u->is_array()) throw ConfigError(r.at("utterances"), "expected an array");
    for (std::size_t i = 0; i < u->size(); ++i) {
      Reader e((*u)[i], index_path(r.at("utterances"), i));
      SpokenUtterance utt{e.number("time", 0.0, 0.0), e.string("text", "")};
      if (utt.text.empty()) throw ConfigError(e.at("text"), "missing or empty");
      e.finish();
      s.utterances.push_back(std::move(utt));
    }
  }
  s.transcription_frames = r.integer("transcription_frames", s.transcription_frames, 0, 100000);
  s.corruption_rate = r.number("corruption_rate", s.corruption_rate, 0.0, 1.0);
  s.noise_rms = r.number("noise_rms", s.noise_rms, 0.0, 32767.0);
  s.voice_amplitude = r.number("voice_amplitude", s.voice_amplitude, 0.0, 32767.0);
  s.seconds_per_word = r.number("seconds_per_word", s.seconds_per_word, 0.03);
  if (const json* vad = r.get("vad")) {
    Reader vr(*vad, r.at("vad"));
    c.vad.energy_threshold = vr.number("energy_threshold", c.vad.energy_threshold, 0.0);
    c.vad.padding_window = vr.integer("padding_window", c.vad.padding_window, 1, 1000);
    c.vad.start_ratio = vr.number("start_ratio", c.vad.start_ratio, 0.0, 1.0);
    c.vad.end_ratio = vr.number("end_ratio", c.vad.end_ratio, 0.0, 1.0);
    c.vad.max_utterance = vr.number("max_utterance", c.vad.max_utterance, 0.03);
    vr.finish();
    try {
      c.vad.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(r.at("vad"), e.what());
    }
  }
  r.finish();
}

void parse_teleop(const json& v, ScenarioConfig& c, const std::filesystem::path& base_dir) {
  Reader r(v, "teleop");
  if (const json* s = r.get("script")) {
    std::string text;
    if (s->is_string()) {
      text = read_text(base_dir / s->get<std::string>(), r.at("script"));
    } else if (s->is_array()) {
      for (const auto& line : *s) text += line.dump() + "\n";
    } else {
      throw ConfigError(r.at("script"), "expected a file name or an array of pad states");
    }
    try {
      c.teleop_script = teleop::parse_pad_script(text);
    } catch (const std::runtime_error& e) {
      throw ConfigError(r.at("script"), e.what());
    }
  }
  if (const json* rates = r.get("rates")) {
    Reader rr(*rates, r.at("rates"));
    c.teleop_rates.lift_rate = rr.number("lift_rate", c.teleop_rates.lift_rate, 0.0);
    c.teleop_rates.extension_rate = rr.number("extension_rate", c.teleop_rates.extension_rate, 0.0);
    c.teleop_rates.pan_rate = rr.number("pan_rate", c.teleop_rates.pan_rate, 0.0);
    rr.finish();
  }
  r.finish();
}

RemoteStep parse_remote_step(const json& v, const std::string& path) {
  Reader r(v, path);
  RemoteStep step;
  step.delay = r.number("delay", 0.0, 0.0);
  const std::string kind = r.string("kind", "command");
  const auto parsed = remote::parse_kind(kind);
  if (!parsed || (*parsed != remote::MessageKind::Command && *parsed != remote::MessageKind::Control)) {
    throw ConfigError(r.at("kind"), "expected \"command\" or \"control\"");
  }
  step.kind = *parsed;
  if (const json* p = r.get("payload")) {
    if (!p->is_object()) throw ConfigError(r.at("payload"), "expected an object");
    step.payload = *p;
    if (step.kind == remote::MessageKind::Command) {
      try {
        remote::parse_operator_command(step.payload);
      } catch (const remote::ProtocolError& e) {
        throw ConfigError(join_path(r.at("payload"), e.field()), e.what());
      }
    }
  }
  r.finish();
  return step;
}

void parse_remote(const json& v, ScenarioConfig& c, const std::filesystem::path& base_dir) {
  Reader r(v, "remote");
  auto& rc = c.remote;
  if (const json* t = r.get("tokens")) {
    if (!t->is_array()) throw ConfigError(r.at("tokens"), "expected an array of strings");
    rc.tokens.clear();
    for (std::size_t i = 0; i < t->size(); ++i) {
      if (!(*t)[i].is_string()) throw ConfigError(index_path(r.at("tokens"), i), "expected a string");
      rc.tokens.push_back((*t)[i].get<std::string>());
    }
  }
  rc.token = r.string("token", rc.token);
  rc.start_immediately = r.boolean("start_immediately", rc.start_immediately);
  if (const json* s = r.get("script")) {
    if (s->is_string()) {
      try {
        rc.script = parse_remote_script(read_text(base_dir / s->get<std::string>(), r.at("script")));
      } catch (const ConfigError& e) {
        throw ConfigError(r.at("script") + ":" + e.path(), e.what());
      }
    } else if (s->is_array()) {
      for (std::size_t i = 0; i < s->size(); ++i) {
        rc.script.push_back(parse_remote_step((*s)[i], index_path(r.at("script"), i)));
      }
    } else {
      throw ConfigError(r.at("script"), "expected a file name or an array of steps");
    }
  }
  if (const json* caps = r.get("caps")) {
    Reader cr(*caps, r.at("caps"));
    rc.caps.base = cr.number("base", rc.caps.base, 0.0);
    rc.caps.arm_delta = cr.number("arm_delta", rc.caps.arm_delta, 0.0);
    rc.caps.wrist_delta = cr.number("wrist_delta", rc.caps.wrist_delta, 0.0);
    rc.caps.camera_delta = cr.number("camera_delta", rc.caps.camera_delta, 0.0);
    cr.finish();
  }
  r.finish();
}

}  // namespace

std::vector<RemoteStep> parse_remote_script(std::string_view text) {
  std::vector<RemoteStep> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError(where, e.what());
    }
    out.push_back(parse_remote_step(j, where));
  }
  return out;
}

ScenarioConfig parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
  ScenarioConfig c;
  Reader r(doc, "");
  c.name = r.string("name", c.name);
  if (const json* s = r.get("seed")) {
    if (!s->is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = s->get<std::uint64_t>();
  }
  c.duration = r.number("duration", c.duration, 0.0, 1e6);
  c.dt = r.number("dt", c.dt, 1e-4, 1.0);
  c.perception_period = r.integer("perception_period", c.perception_period, 1, 10000);
  c.broadcast_period = r.number("broadcast_period", c.broadcast_period, 1e-3);
  c.settle_time = r.number("settle_time", c.settle_time, 0.0);
  const std::string mode = r.string("mode", std::string(switching::to_string(c.mode)));
  const auto parsed = switching::parse_follow_mode(mode);
  if (!parsed) throw ConfigError("mode", "expected \"behind\", \"left\" or \"right\"");
  c.mode = *parsed;

  if (const json* v = r.get("robot")) parse_robot(*v, c);
  if (const json* v = r.get("wheelchair")) parse_wheelchair(*v, c.wheelchair);
  if (const json* v = r.get("persons")) {
    if (!v->is_array()) throw ConfigError("persons", "expected an array");
    for (std::size_t i = 0; i < v->size(); ++i) {
      Reader pr((*v)[i], index_path("persons", i));
      PersonConfig p;
      const json* path = pr.get("path");
      if (!path) throw ConfigError(pr.at("path"), "missing");
      p.path = parse_polyline(*path, pr.at("path"), 1);
      p.speed = pr.number("speed", p.speed, 0.0, 5.0);
      p.height = pr.number("height", p.height, 0.1);
      p.radius = pr.number("radius", p.radius, 0.01);
      pr.finish();
      c.persons.push_back(std::move(p));
    }
  }
  if (const json* v = r.get("chairs")) {
    if (!v->is_array()) throw ConfigError("chairs", "expected an array");
    std::set<int> ids;
    for (std::size_t i = 0; i < v->size(); ++i) {
      Reader cr((*v)[i], index_path("chairs", i));
      ChairConfig ch;
      ch.id = cr.integer("id", static_cast<int>(i) + 1, 0, 1000000);
      if (!ids.insert(ch.id).second) throw ConfigError(cr.at("id"), "duplicate chair id");
      if (const json* p = cr.get("pose")) ch.pose = parse_pose(*p, cr.at("pose"));
      ch.radius = cr.number("radius", ch.radius, 0.01);
      cr.finish();
      c.chairs.push_back(ch);
    }
  }
  if (const json* v = r.get("camera")) parse_camera(*v, c);
  if (const json* v = r.get("detector")) {
    Reader dr(*v, "detector");
    c.detector.pixel_sigma = dr.number("pixel_sigma", c.detector.pixel_sigma, 0.0);
    c.detector.miss_probability = dr.number("miss_probability", c.detector.miss_probability, 0.0, 1.0);
    dr.finish();
  }
  if (const json* v = r.get("follow")) parse_follow(*v, c.follow);
  c.follow.v_cap = c.robot.v_cap;
  c.follow.w_cap = c.robot.w_cap;
  if (const json* v = r.get("switch")) parse_switch(*v, c);
  if (const json* v = r.get("speech")) parse_speech(*v, c);
  if (const json* v = r.get("teleop")) parse_teleop(*v, c, base_dir);
  if (const json* v = r.get("remote")) parse_remote(*v, c, base_dir);
  r.finish();
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open scenario '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

json to_json(const ScenarioConfig& c) {
  const auto& w = c.wheelchair;
  json persons = json::array();
  for (const auto& p : c.persons) {
    persons.push_back({{"path", polyline_json(p.path)}, {"speed", p.speed}, {"height", p.height}, {"radius", p.radius}});
  }
  json chairs = json::array();
  for (const auto& ch : c.chairs) {
    chairs.push_back({{"id", ch.id}, {"pose", pose_json(ch.pose)}, {"radius", ch.radius}});
  }
  json utterances = json::array();
  for (const auto& u : c.speech.utterances) utterances.push_back({{"time", u.time}, {"text", u.text}});
  json pads = json::array();
  for (const auto& tp : c.teleop_script) {
    json buttons = json::array();
    for (const char* name : {"A", "B", "X", "Y", "LB", "RB"}) {
      if (tp.pad.buttons.contains(*teleop::parse_button(name))) buttons.push_back(name);
    }
    pads.push_back({{"t", tp.time},
                    {"lx", tp.pad.left_stick.x},
                    {"ly", tp.pad.left_stick.y},
                    {"rx", tp.pad.right_stick.x},
                    {"ry", tp.pad.right_stick.y},
                    {"buttons", buttons}});
  }
  json script = json::array();
  for (const auto& s : c.remote.script) {
    script.push_back({{"delay", s.delay}, {"kind", std::string(remote::to_string(s.kind))}, {"payload", s.payload}});
  }
  const auto& f = c.follow;
  json robot = {{"face_angle", c.face_angle ? json(*c.face_angle) : json(nullptr)},
                {"v_cap", c.robot.v_cap},
                {"w_cap", c.robot.w_cap},
                {"face_rate_cap", c.robot.face_rate_cap},
                {"radius", c.robot.radius},
                {"lift", c.robot.lift},
                {"arm_extension", c.robot.arm_extension},
                {"reach_offset", c.robot.reach_offset}};
  robot["pose"] = c.robot_pose ? pose_json(*c.robot_pose) : json(nullptr);
  return {
      {"name", c.name},
      {"seed", c.seed},
      {"duration", c.duration},
      {"dt", c.dt},
      {"perception_period", c.perception_period},
      {"broadcast_period", c.broadcast_period},
      {"settle_time", c.settle_time},
      {"mode", std::string(switching::to_string(c.mode))},
      {"robot", robot},
      {"wheelchair",
       {{"path", polyline_json(w.path)},
        {"speed", w.speed},
        {"speed_variation",
         {{"amplitude", w.variation.amplitude}, {"period", w.variation.period}, {"phase", w.variation.phase}}},
        {"footprint", {{"length", w.footprint.length}, {"width", w.footprint.width}}},
        {"seated_height", w.seated_height},
        {"body_radius", w.body_radius},
        {"stop_distance", w.stop_distance},
        {"turn_rate", w.turn_rate}}},
      {"persons", persons},
      {"chairs", chairs},
      {"camera",
       {{"hfov", c.camera.hfov},
        {"image_width", c.camera.image_width},
        {"image_height", c.camera.image_height},
        {"mount_height", c.camera.mount_height},
        {"mast_occlusion", c.mast_occlusion},
        {"occlusion_sector", point_json({c.mast.sector.lo, c.mast.sector.hi})},
        {"occlusion_face_range", point_json({c.mast.face_range.lo, c.mast.face_range.hi})}}},
      {"detector", {{"pixel_sigma", c.detector.pixel_sigma}, {"miss_probability", c.detector.miss_probability}}},
      {"follow",
       {{"target_distance", f.target_distance},
        {"dist_tol", f.dist_tol},
        {"dev_tol_px", f.dev_tol_px},
        {"k_v", f.k_v},
        {"k_w", f.k_w},
        {"k_along", f.k_along},
        {"lost_policy", f.lost_policy == follow::LostPolicy::Stop ? "stop" : "hold_last"},
        {"face_nudge_rate", f.face_nudge_rate},
        {"hold_limit", f.hold_limit},
        {"fail_staleness", f.fail_staleness}}},
      {"switch",
       {{"midpoint_distance", c.switch_geometry.midpoint_distance},
        {"left_midpoint_orbit", c.switch_geometry.left_midpoint_orbit},
        {"right_midpoint_orbit", c.switch_geometry.right_midpoint_orbit},
        {"speed", c.executor.speed},
        {"abort_displacement", c.executor.abort_displacement},
        {"max_replans", c.max_replans}}},
      {"speech",
       {{"utterances", utterances},
        {"transcription_frames", c.speech.transcription_frames},
        {"corruption_rate", c.speech.corruption_rate},
        {"noise_rms", c.speech.noise_rms},
        {"voice_amplitude", c.speech.voice_amplitude},
        {"seconds_per_word", c.speech.seconds_per_word},
        {"vad",
         {{"energy_threshold", c.vad.energy_threshold},
          {"padding_window", c.vad.padding_window},
          {"start_ratio", c.vad.start_ratio},
          {"end_ratio", c.vad.end_ratio},
          {"max_utterance", c.vad.max_utterance}}}}},
      {"teleop",
       {{"script", pads},
        {"rates",
         {{"lift_rate", c.teleop_rates.lift_rate},
          {"extension_rate", c.teleop_rates.extension_rate},
          {"pan_rate", c.teleop_rates.pan_rate}}}}},
      {"remote",
       {{"tokens", c.remote.tokens},
        {"token", c.remote.token},
        {"start_immediately", c.remote.start_immediately},
        {"script", script},
        {"caps",
         {{"base", c.remote.caps.base},
          {"arm_delta", c.remote.caps.arm_delta},
          {"wrist_delta", c.remote.caps.wrist_delta},
          {"camera_delta", c.remote.caps.camera_delta}}}}},
  };
}

sim::WorldState initial_world(const ScenarioConfig& c) {
  sim::WorldState world;
  world.dt = c.dt;
  world.rng_seed = c.seed;

  auto& wc = world.wheelchair;
  wc.path = c.wheelchair.path;
  wc.speed = c.wheelchair.speed;
  wc.variation = c.wheelchair.variation;
  wc.footprint = c.wheelchair.footprint;
  wc.seated_height = c.wheelchair.seated_height;
  wc.body_radius = c.wheelchair.body_radius;
  wc.stop_distance = c.wheelchair.stop_distance;
  wc.turn_rate = c.wheelchair.turn_rate;
  sim::place_on_path(wc);

  world.robot = c.robot;
  switching::SwitchGeometry geometry = c.switch_geometry;
  geometry.footprint = wc.footprint;
  world.robot.base = c.robot_pose ? *c.robot_pose : compose(wc.pose, switching::target_pose(c.mode, geometry));
  world.robot.face_angle = c.face_angle ? *c.face_angle : switching::switch_target(c.mode).face_angle;

  for (const auto& p : c.persons) {
    sim::PersonAgent agent;
    agent.path = p.path;
    agent.speed = p.speed;
    agent.standing_height = p.height;
    agent.radius = p.radius;
    sim::place_on_path(agent);
    world.persons.push_back(std::move(agent));
  }
  for (const auto& ch : c.chairs) world.chairs.push_back({ch.id, ch.pose, ch.radius});
  return world;
}

}  // namespace chairside::harness
