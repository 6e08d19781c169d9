#include "chairside/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fmt/format.h>
#include <sstream>
#include <thread>

namespace chairside::harness {

using nlohmann::json;
using switching::FollowMode;

namespace {

std::vector<Vec2> episode_path(const SweepOptions& options) {
  if (!options.turn) return {{0.0, 0.0}, {options.path_length, 0.0}};
  const double half = options.path_length / 2.0;
  const double d = half / std::sqrt(2.0);
  return {{0.0, 0.0}, {half, 0.0}, {half + d, d}};
}

double path_length(const std::vector<Vec2>& path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) total += distance(path[i - 1], path[i]);
  return total;
}

// Polyline shifted sideways by `offset` (positive = left), mitred at the joints.
std::vector<Vec2> offset_path(const std::vector<Vec2>& path, double offset) {
  auto normal = [](Vec2 a, Vec2 b) {
    const double len = distance(a, b);
    return Vec2{-(b.y - a.y) / len, (b.x - a.x) / len};
  };
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    Vec2 n = i == 0 ? normal(path[0], path[1]) : normal(path[i - 1], path[i]);
    if (i > 0 && i + 1 < path.size()) {
      const Vec2 n2 = normal(path[i], path[i + 1]);
      const Vec2 m{n.x + n2.x, n.y + n2.y};
      const double dot = (m.x * n.x + m.y * n.y);
      n = {m.x / dot, m.y / dot};
    }
    out.push_back({path[i].x + offset * n.x, path[i].y + offset * n.y});
  }
  return out;
}

std::string percent(double rate) { return fmt::format("{:g}", std::round(rate * 1000.0) / 10.0); }

}  // namespace

const SweepCell* SweepResult::cell(double speed, FollowMode mode) const {
  for (const auto& c : cells) {
    if (c.speed == speed && c.mode == mode) return &c;
  }
  return nullptr;
}

ScenarioConfig sweep_episode(const ScenarioConfig& base, const SweepOptions& options, double speed, FollowMode mode,
                             int seed_index) {
  ScenarioConfig c = base;
  const std::uint64_t seed = options.base_seed * 1000u + static_cast<std::uint64_t>(seed_index);
  auto rng = make_stream(seed, 7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  c.seed = seed;
  c.mode = mode;
  c.robot_pose.reset();
  c.face_angle.reset();
  c.wheelchair.path = episode_path(options);
  c.wheelchair.speed = speed;
  c.wheelchair.variation.amplitude = 0.25 * unit(rng);
  c.wheelchair.variation.period = 6.0 + 6.0 * unit(rng);
  c.wheelchair.variation.phase = 2.0 * kPi * unit(rng);

  const double length = path_length(c.wheelchair.path);
  c.persons.clear();
  for (int i = 0; i < options.distractors; ++i) {
    const double side = i % 2 == 0 ? 1.0 : -1.0;
    const double offset = side * (3.0 + 3.0 * unit(rng));
    PersonConfig p;
    p.speed = 0.3 + 0.7 * unit(rng);
    p.height = 1.55 + 0.35 * unit(rng);
    // Persons walk closed loops: out along the offset line and back.
    p.path = offset_path(c.wheelchair.path, offset);
    if (unit(rng) < 0.5) std::reverse(p.path.begin(), p.path.end());
    for (std::size_t k = p.path.size() - 1; k-- > 1;) p.path.push_back(p.path[k]);
    c.persons.push_back(std::move(p));
  }
  c.chairs.clear();
  c.speech.utterances.clear();
  c.teleop_script.clear();
  c.remote.script.clear();
  c.duration = speed > 0.0 ? length / speed : base.duration;
  c.name = fmt::format("sweep-{}-{:g}-{}", switching::to_string(mode), speed, seed_index);
  return c;
}

SweepResult sweep_following(const ScenarioConfig& base, const SweepOptions& options) {
  struct Task {
    double speed;
    FollowMode mode;
    int seed_index;
  };
  std::vector<Task> tasks;
  for (double speed : options.speeds) {
    for (auto mode : options.modes) {
      for (int i = 0; i < options.seeds; ++i) tasks.push_back({speed, mode, i});
    }
  }

  std::vector<EpisodeResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& t = tasks[i];
      const ScenarioConfig cfg = sweep_episode(base, options, t.speed, t.mode, t.seed_index);
      const RunMetrics m = run_scenario(cfg).metrics;
      EpisodeResult r{t.speed, t.mode, t.seed_index, cfg.seed, m.follow_success(t.mode), {}};
      if (const auto it = m.follow.find(std::string(switching::to_string(t.mode))); it != m.follow.end()) {
        r.stats = it->second;
      }
      results[i] = r;
    }
  };
  unsigned n = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(1, tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  auto key = [](const EpisodeResult& e) { return std::tuple(e.speed, static_cast<int>(e.mode), e.seed_index); };
  std::sort(results.begin(), results.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });

  SweepResult out;
  out.episodes = std::move(results);
  for (const auto& e : out.episodes) {
    if (out.cells.empty() || out.cells.back().speed != e.speed || out.cells.back().mode != e.mode) {
      out.cells.push_back({e.speed, e.mode, 0, 0});
    }
    ++out.cells.back().episodes;
    if (e.success) ++out.cells.back().successes;
  }
  return out;
}

std::string sweep_table_csv(const SweepResult& result, const SweepOptions& options) {
  std::ostringstream out;
  out << "speed";
  for (auto mode : options.modes) out << ',' << switching::to_string(mode);
  out << '\n';
  for (double speed : options.speeds) {
    out << fmt::format("{:g}", speed);
    for (auto mode : options.modes) {
      const SweepCell* c = result.cell(speed, mode);
      out << ',' << (c ? percent(c->rate()) : "");
    }
    out << '\n';
  }
  return out.str();
}

std::string sweep_episodes_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "speed,mode,seed_index,seed,success,perception_ticks,lost_ticks,max_stale_ticks,distance_violations\n";
  for (const auto& e : result.episodes) {
    out << fmt::format("{:g},{},{},{},{},{},{},{},{}\n", e.speed, switching::to_string(e.mode), e.seed_index, e.seed,
                       e.success ? 1 : 0, e.stats.perception_ticks, e.stats.lost_ticks, e.stats.max_stale_ticks,
                       e.stats.distance_violations);
  }
  return out.str();
}

CaseStudyReport evaluate_case_study(const RunMetrics& m, double clearance) {
  CaseStudyReport report;
  auto add = [&](std::string name, bool passed, std::optional<double> time, std::string detail) {
    report.phases.push_back({std::move(name), passed, time, std::move(detail)});
    return passed;
  };

  // Activation: the "help" keyword moves the pipeline into RemoteAssist.
  const FsmRecord* activation = nullptr;
  for (const auto& r : m.fsm_log) {
    if (r.event == "keyword:help" && r.action == "enter_remote") {
      activation = &r;
      break;
    }
  }
  const double activated_at = activation ? activation->time : m.duration;

  // Following: the run followed from behind, without losing the target,
  // up to the call for help, and a chair started out on the path.
  bool following_ok = m.steps > 0;
  std::string following_detail;
  if (m.follow.find("behind") == m.follow.end()) {
    following_ok = false;
    following_detail = "never followed from behind";
  }
  for (const auto& r : m.fsm_log) {
    if (r.time >= activated_at) break;
    if (r.from != "following(behind)" || r.action != "none") {
      following_ok = false;
      following_detail = "left following before activation (" + r.to + ")";
    }
  }
  for (const auto& a : m.alerts) {
    if (a.value("time", 0.0) < activated_at && a.value("message", "") == "target lost") {
      following_ok = false;
      following_detail = "target lost before activation";
    }
  }
  if (std::none_of(m.chairs.begin(), m.chairs.end(), [](const ChairRecord& c) { return c.blocked_path(); })) {
    following_ok = false;
    following_detail = "no chair blocks the path";
  }
  if (!add("following", following_ok, std::nullopt, following_detail)) {
    report.failed_phase = "following";
    return report;
  }

  if (!add("activation", activation != nullptr, activation ? std::optional(activation->time) : std::nullopt,
           activation ? "" : "no help request reached the pipeline")) {
    report.failed_phase = "activation";
    return report;
  }

  const TaskRecord* task = nullptr;
  for (const auto& t : m.tasks) {
    if (t.kind == "remote" && t.start_time == activation->time) task = &t;
  }
  bool moved = false;
  std::string move_detail = "remote session never ended";
  if (task && task->end_time) {
    move_detail = "no chair cleared the corridor by " + fmt::format("{:g}", clearance) + " m";
    for (const auto& c : task->chairs_at_end) {
      if (c.blocked_path() && c.corridor_gap >= clearance) {
        moved = true;
        move_detail = fmt::format("chair {} moved {:.3f} m, {:.3f} m clear of the corridor", c.id, c.displacement,
                                  c.corridor_gap);
      }
    }
  }
  if (!add("chair_move", moved, task && task->end_time ? task->end_time : std::nullopt, move_detail)) {
    report.failed_phase = "chair_move";
    return report;
  }

  const FsmRecord* release = nullptr;
  for (const auto& r : m.fsm_log) {
    if (r.time == *task->end_time && r.event == "remote_release" && r.to == "following(behind)") release = &r;
  }
  if (!add("release", release != nullptr, release ? std::optional(release->time) : std::nullopt,
           release ? "" : "remote session did not end with a release")) {
    report.failed_phase = "release";
    return report;
  }
  report.passed = true;
  report.completion_time = release->time - activation->time;
  return report;
}

json to_json(const CaseStudyReport& report) {
  json phases = json::array();
  for (const auto& p : report.phases) {
    phases.push_back({{"name", p.name},
                      {"passed", p.passed},
                      {"time", p.time ? json(*p.time) : json(nullptr)},
                      {"detail", p.detail}});
  }
  return {{"passed", report.passed},
          {"failed_phase", report.failed_phase.empty() ? json(nullptr) : json(report.failed_phase)},
          {"completion_time", report.completion_time ? json(*report.completion_time) : json(nullptr)},
          {"phases", phases}};
}

}  // namespace chairside::harness
