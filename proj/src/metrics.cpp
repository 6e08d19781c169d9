#include "chairside/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace chairside::harness {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json pose_json(const Pose2& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

json chairs_json(const std::vector<ChairRecord>& chairs) {
  json out = json::array();
  for (const auto& c : chairs) {
    out.push_back({{"id", c.id},
                   {"start", pose_json(c.start)},
                   {"end", pose_json(c.end)},
                   {"displacement", c.displacement},
                   {"corridor_gap", c.corridor_gap},
                   {"start_gap", c.start_gap}});
  }
  return out;
}

std::string scalar(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

bool RunMetrics::follow_success() const {
  return std::all_of(follow.begin(), follow.end(),
                     [&](const auto& kv) { return kv.second.success(fail_staleness); });
}

bool RunMetrics::follow_success(switching::FollowMode mode) const {
  const auto it = follow.find(std::string(switching::to_string(mode)));
  return it == follow.end() || it->second.success(fail_staleness);
}

double RunMetrics::time_in_frame_fraction() const {
  return perception_ticks == 0 ? 1.0 : static_cast<double>(in_frame_ticks) / static_cast<double>(perception_ticks);
}

json to_json(const RunMetrics& m) {
  json follow = json::object();
  for (const auto& [mode, s] : m.follow) {
    follow[mode] = {{"success", s.success(m.fail_staleness)},
                    {"perception_ticks", s.perception_ticks},
                    {"lost_ticks", s.lost_ticks},
                    {"max_stale_ticks", s.max_stale_ticks},
                    {"distance_samples", s.distance_samples},
                    {"distance_violations", s.distance_violations},
                    {"min_standoff", opt(s.min_standoff)},
                    {"max_standoff", opt(s.max_standoff)},
                    {"drift_warnings", s.drift_warnings},
                    {"max_lateral_drift", s.max_lateral_drift}};
  }
  json switches = json::array();
  for (const auto& s : m.switches) {
    switches.push_back({{"from", s.from},
                        {"to", s.to},
                        {"outcome", s.outcome},
                        {"replans", s.replans},
                        {"start_time", s.start_time},
                        {"end_time", opt(s.end_time)},
                        {"position_error", opt(s.position_error)},
                        {"heading_error", opt(s.heading_error)}});
  }
  json tasks = json::array();
  for (const auto& t : m.tasks) {
    std::optional<double> duration;
    if (t.end_time) duration = *t.end_time - t.start_time;
    tasks.push_back({{"kind", t.kind},
                     {"start_time", t.start_time},
                     {"end_time", opt(t.end_time)},
                     {"completion_time", opt(duration)},
                     {"chairs_at_end", chairs_json(t.chairs_at_end)}});
  }
  json fsm_log = json::array();
  for (const auto& r : m.fsm_log) {
    fsm_log.push_back({{"time", r.time}, {"event", r.event}, {"from", r.from}, {"to", r.to}, {"action", r.action}});
  }
  return {{"scenario", m.scenario},
          {"seed", m.seed},
          {"duration", m.duration},
          {"steps", m.steps},
          {"follow_success", m.follow_success()},
          {"follow", follow},
          {"time_in_frame_fraction", m.time_in_frame_fraction()},
          {"switches", switches},
          {"tasks", tasks},
          {"fsm_log", fsm_log},
          {"speech", m.speech},
          {"remote", {{"accepted", m.remote_accepted}, {"rejected", m.remote_rejected}, {"clamped", m.remote_clamped}}},
          {"alerts", m.alerts},
          {"chairs", chairs_json(m.chairs)},
          {"final_state", m.final_state}};
}

std::string to_csv(const RunMetrics& m) {
  std::vector<std::pair<std::string, json>> rows{
      {"scenario", m.scenario},
      {"seed", m.seed},
      {"duration", m.duration},
      {"steps", m.steps},
      {"follow_success", m.follow_success()},
      {"time_in_frame_fraction", m.time_in_frame_fraction()},
  };
  for (const auto& [mode, s] : m.follow) {
    const std::string p = "follow." + mode + ".";
    rows.emplace_back(p + "success", s.success(m.fail_staleness));
    rows.emplace_back(p + "perception_ticks", s.perception_ticks);
    rows.emplace_back(p + "lost_ticks", s.lost_ticks);
    rows.emplace_back(p + "max_stale_ticks", s.max_stale_ticks);
    rows.emplace_back(p + "distance_violations", s.distance_violations);
    rows.emplace_back(p + "min_standoff", opt(s.min_standoff));
    rows.emplace_back(p + "max_standoff", opt(s.max_standoff));
    rows.emplace_back(p + "drift_warnings", s.drift_warnings);
  }
  rows.emplace_back("switches", static_cast<std::int64_t>(m.switches.size()));
  rows.emplace_back("switches_complete", std::count_if(m.switches.begin(), m.switches.end(),
                                                       [](const auto& s) { return s.outcome == "complete"; }));
  for (std::size_t i = 0; i < m.tasks.size(); ++i) {
    const auto& t = m.tasks[i];
    const std::string p = "task." + std::to_string(i) + ".";
    rows.emplace_back(p + "kind", t.kind);
    rows.emplace_back(p + "completion_time", t.end_time ? json(*t.end_time - t.start_time) : json(nullptr));
  }
  rows.emplace_back("remote_accepted", m.remote_accepted);
  rows.emplace_back("remote_rejected", m.remote_rejected);
  rows.emplace_back("remote_clamped", m.remote_clamped);
  rows.emplace_back("final_state", m.final_state);

  std::ostringstream out;
  out << "metric,value\n";
  for (const auto& [key, value] : rows) out << key << ',' << (value.is_null() ? "" : scalar(value)) << '\n';
  return out.str();
}

double corridor_gap(const sim::WheelchairAgent& wheelchair, const sim::Chair& chair) {
  return distance_to_polyline(wheelchair.path, chair.pose.position()) - wheelchair.footprint.width / 2.0 -
         chair.radius;
}

MetricsRecorder::MetricsRecorder(const ScenarioConfig& config, const sim::WorldState& initial)
    : settle_time_(config.settle_time), initial_chairs_(initial.chairs) {
  metrics_.scenario = config.name;
  metrics_.seed = config.seed;
  metrics_.duration = config.duration;
  metrics_.fail_staleness = config.follow.fail_staleness;
  geometry_ = config.switch_geometry;
  geometry_.footprint = config.wheelchair.footprint;
}

std::vector<ChairRecord> MetricsRecorder::chair_records(const sim::WorldState& world) const {
  std::vector<ChairRecord> out;
  for (const auto& start : initial_chairs_) {
    const sim::Chair* now = world.find_chair(start.id);
    if (!now) continue;
    out.push_back({start.id, start.pose, now->pose, distance(start.pose.position(), now->pose.position()),
                   corridor_gap(world.wheelchair, *now), corridor_gap(world.wheelchair, start)});
  }
  return out;
}

void MetricsRecorder::transition(const FsmRecord& record, const fsm::PipelineState& next,
                                 const sim::WorldState& world) {
  metrics_.fsm_log.push_back(record);
  auto open_switch = [&]() -> SwitchOutcome* {
    if (metrics_.switches.empty() || metrics_.switches.back().end_time) return nullptr;
    return &metrics_.switches.back();
  };
  auto close_task = [&] {
    if (!metrics_.tasks.empty() && !metrics_.tasks.back().end_time) {
      metrics_.tasks.back().end_time = record.time;
      metrics_.tasks.back().chairs_at_end = chair_records(world);
    }
  };

  if (record.action == "start_switch") {
    const auto& s = std::get<fsm::Switching>(next);
    metrics_.switches.push_back({std::string(switching::to_string(s.from)), std::string(switching::to_string(s.to)),
                                 "unfinished", 0, record.time, std::nullopt, std::nullopt, std::nullopt});
  } else if (record.action == "replan") {
    if (auto* s = open_switch()) s->replans = std::get<fsm::Switching>(next).replans;
  } else if (record.action == "finish_switch" || record.action == "abandon_switch") {
    if (auto* s = open_switch()) {
      s->end_time = record.time;
      s->outcome = record.action == "finish_switch" ? "complete" : "abandoned";
      if (record.action == "finish_switch") {
        const auto mode = std::get<fsm::Following>(next).mode;
        const Pose2 target = switching::target_pose(mode, geometry_);
        const Pose2 actual = relative_pose(world.wheelchair.pose, world.robot.base);
        s->position_error = distance(target.position(), actual.position());
        s->heading_error = std::abs(wrap_deg(actual.theta - target.theta));
      }
    }
  } else if (record.action == "enter_teleop" || record.action == "enter_remote") {
    if (auto* s = open_switch()) {
      s->end_time = record.time;
      s->outcome = "cancelled";
    }
    close_task();
    metrics_.tasks.push_back({record.action == "enter_teleop" ? "teleop" : "remote", record.time, std::nullopt, {}});
  } else if (record.action == "resume_following") {
    close_task();
  }

  const bool following = std::holds_alternative<fsm::Following>(next);
  if (following && (!in_following_ || record.action != "none")) {
    segment_start_ = record.time;
    stale_run_ = 0;
  }
  in_following_ = following;
}

void MetricsRecorder::perceive(const perception::TrackingObservation& obs, const fsm::PipelineState& state) {
  const auto* f = std::get_if<fsm::Following>(&state);
  if (!f) return;
  auto& s = metrics_.follow[std::string(switching::to_string(f->mode))];
  ++s.perception_ticks;
  ++metrics_.perception_ticks;
  const bool on_target = obs.in_frame && obs.source_id == sim::kWheelchairId;
  if (obs.in_frame) ++metrics_.in_frame_ticks;
  if (on_target) {
    stale_run_ = 0;
  } else {
    ++s.lost_ticks;
    ++stale_run_;
    s.max_stale_ticks = std::max(s.max_stale_ticks, stale_run_);
  }
}

void MetricsRecorder::note(const json& note) {
  if (note.contains("speech")) {
    metrics_.speech.push_back(note["speech"]);
  } else if (note.contains("remote")) {
    const auto& r = note["remote"];
    if (r.value("accepted", false)) {
      ++metrics_.remote_accepted;
      if (r.value("clamped", false)) ++metrics_.remote_clamped;
    } else {
      ++metrics_.remote_rejected;
    }
  } else if (note.contains("alert")) {
    metrics_.alerts.push_back({{"time", note.value("time", 0.0)}, {"message", note["alert"]}});
  }
}

void MetricsRecorder::after_step(const sim::WorldState& world, const fsm::PipelineState& state) {
  metrics_.steps = world.step_count;
  const auto* f = std::get_if<fsm::Following>(&state);
  if (!f || world.time - segment_start_ < settle_time_ - 1e-9) return;
  auto& s = metrics_.follow[std::string(switching::to_string(f->mode))];
  const double target = switching::switch_target(f->mode).distance;
  const double standoff =
      rect_standoff(world.wheelchair.footprint, to_frame(world.wheelchair.pose, world.robot.base.position()));
  ++s.distance_samples;
  if (standoff < 0.5 * target || standoff > 2.0 * target) ++s.distance_violations;
  s.min_standoff = s.min_standoff ? std::min(*s.min_standoff, standoff) : standoff;
  s.max_standoff = s.max_standoff ? std::max(*s.max_standoff, standoff) : standoff;
  if (f->mode != switching::FollowMode::Behind) {
    const double lateral = relative_pose(world.wheelchair.pose, world.robot.base).y;
    const double drift = std::abs(lateral - switching::target_pose(f->mode, geometry_).y);
    s.max_lateral_drift = std::max(s.max_lateral_drift, drift);
    if (drift > kDriftLimit) ++s.drift_warnings;
  }
}

RunMetrics MetricsRecorder::finish(const sim::WorldState& world, const fsm::PipelineState& state) {
  RunMetrics out = metrics_;
  out.steps = world.step_count;
  out.chairs = chair_records(world);
  out.final_state = fsm::to_string(state);
  return out;
}

}  // namespace chairside::harness
