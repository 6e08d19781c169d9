// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures.

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "closed_loop.hpp"
#include "fixtures.hpp"
#include "fsm_expect.hpp"
#include "oracles.hpp"
#include "phrases.hpp"

#include "chairside/evaluation.hpp"
#include "chairside/remote_gateway.hpp"
#include "chairside/runner.hpp"

using namespace chairside;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kFsmBudget = 1.0;
constexpr double kSwitchBudget = 30.0;
constexpr double kSweepBudget = 120.0;
constexpr double kSwitchPosTol = 0.05;
constexpr double kSwitchAngleTol = 5.0;
constexpr double kPerturbXY = 0.3;
constexpr double kPerturbTheta = 20.0;
constexpr double kFootLength = 1.2;
constexpr double kFootWidth = 0.7;
constexpr double kRobotRadius = 0.17;
constexpr double kOracleSpacing = 0.001;
constexpr double kSettleLimit = 15.0;
constexpr double kHold = 30.0;
constexpr double kStartDeviationPx = 100.0;
constexpr double kStartDistanceError = 0.5;
constexpr int kSweepSeeds = 20;
constexpr int kVadSequences = 1000;
constexpr int kVadMaxLength = 200;
constexpr double kChairOffCorridor = 0.5;

struct Check {
  bool ok = true;
  std::vector<std::string> notes;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (notes.size() < 5) notes.push_back(what);
    }
  }
};

int failures = 0;

void criterion(const std::string& name, const std::function<void(Check&)>& body, double budget = 0.0) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget > 0.0) c.require(secs < budget, fmt::format("runtime {:.2f}s over {:g}s", secs, budget));
  std::string line = fmt::format("{} {} ({:.2f}s)", c.ok ? "PASS" : "FAIL", name, secs);
  for (const auto& n : c.notes) line += " | " + n;
  std::cout << line << std::endl;
  if (!c.ok) ++failures;
}

fs::path source(const std::string& rel) { return fs::path(CHAIRSIDE_SOURCE_DIR) / rel; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void fsm_suite(Check& c) {
  using namespace chairside::fsm;
  for (const auto& s : expect::all_states()) {
    for (const auto& e : expect::all_events()) {
      const auto t = transition(s, e);
      const auto want = expect::expected(s, e);
      c.require(to_string(t.next) == want.next && std::string(to_string(t.action)) == want.action,
                to_string(s) + " x " + to_string(e));
    }
  }
  const PipelineState start = Following{FollowMode::Behind};
  c.require(to_string(transition(start, Event::spoken(Keyword::GoLeft)).next) == "switching(behind->left)", "GoLeft");
  c.require(to_string(transition(start, Event::spoken(Keyword::GoRight)).next) == "switching(behind->right)",
            "GoRight");
  c.require(to_string(transition(Following{FollowMode::Right}, Event::spoken(Keyword::GoBack)).next) ==
                "switching(right->behind)",
            "GoBack");
  c.require(to_string(transition(start, Event::spoken(Keyword::RemoteControl)).next) == "teleop", "RemoteControl");
  c.require(to_string(transition(start, Event::spoken(Keyword::Help)).next) == "remote_assist", "Help");
  c.require(transition(Teleop{}, Event::teleop_exit()).next == PipelineState{Following{FollowMode::Behind}},
            "teleop X exit");
}

void switch_grid(Check& c) {
  using namespace chairside::switching;
  constexpr std::array modes{FollowMode::Behind, FollowMode::Left, FollowMode::Right};
  const std::array<double, 5> xy{-kPerturbXY, -kPerturbXY / 2, 0.0, kPerturbXY / 2, kPerturbXY};
  const std::array<double, 3> th{-kPerturbTheta, 0.0, kPerturbTheta};
  int runs = 0;
  for (auto from : modes) {
    for (auto to : modes) {
      if (from == to) continue;
      const Pose2 t = target_pose(from);
      for (double dx : xy) {
        for (double dy : xy) {
          for (double dt : th) {
            const Pose2 start{t.x + dx, t.y + dy, normalize_deg(t.theta + dt)};
            const auto r = loop::run_switch(from, to, start);
            const std::string at = fmt::format("{}->{} d=({:g},{:g},{:g})", to_string(from), to_string(to), dx, dy, dt);
            c.require(r.completed, at + " incomplete");
            c.require(r.position_error <= kSwitchPosTol, fmt::format("{} pos {:.4f}", at, r.position_error));
            c.require(r.base_error <= kSwitchAngleTol, fmt::format("{} base {:.3f}", at, r.base_error));
            c.require(r.face_error <= kSwitchAngleTol, fmt::format("{} face {:.3f}", at, r.face_error));
            c.require(!oracle::brute_force_collides(r.plan, kFootLength, kFootWidth, kRobotRadius, kOracleSpacing),
                      at + " collides");
            ++runs;
          }
        }
      }
    }
  }
  c.require(runs == 6 * 5 * 5 * 3, "grid size");
}

void convergence(Check& c) {
  const auto r = loop::run_convergence(kSettleLimit, kHold);
  c.require(std::abs(r.initial_deviation - kStartDeviationPx) < 1.0,
            fmt::format("initial deviation {:.2f}", r.initial_deviation));
  c.require(std::abs(r.initial_error - kStartDistanceError) < 1e-6, fmt::format("initial error {:.4f}", r.initial_error));
  c.require(r.settled_at.has_value(), "never settled for good");
  if (r.settled_at) c.require(*r.settled_at <= kSettleLimit, fmt::format("settled at {:.2f}", *r.settled_at));
  c.require(r.stayed, "left the deadband");
}

void sweep_trend(Check& c) {
  using switching::FollowMode;
  harness::SweepOptions o;
  o.seeds = kSweepSeeds;
  const auto r = harness::sweep_following(harness::ScenarioConfig{}, o);
  auto rate = [&](double speed, FollowMode m) {
    const auto* cell = r.cell(speed, m);
    if (!cell) throw std::runtime_error("missing cell");
    return cell->rate();
  };
  std::cout << harness::sweep_table_csv(r, o);
  for (double s : {0.1, 0.2, 0.3}) {
    c.require(rate(s, FollowMode::Behind) == 1.0, fmt::format("behind {:g}: {:.2f}", s, rate(s, FollowMode::Behind)));
  }
  c.require(rate(1.0, FollowMode::Left) == 0.0, "left at 1.0 not 0%");
  c.require(rate(1.0, FollowMode::Right) == 0.0, "right at 1.0 not 0%");
  for (std::size_t i = 0; i < o.speeds.size(); ++i) {
    const double s = o.speeds[i];
    c.require(rate(s, FollowMode::Left) >= rate(s, FollowMode::Right), fmt::format("left < right at {:g}", s));
    if (i > 0) {
      for (auto m : {FollowMode::Left, FollowMode::Right}) {
        c.require(rate(s, m) <= rate(o.speeds[i - 1], m),
                  fmt::format("{} increases at {:g}", switching::to_string(m), s));
      }
    }
  }
}

void vad_equivalence(Check& c) {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> len(0, kVadMaxLength);
  std::uniform_int_distribution<int> window(1, 12);
  std::uniform_int_distribution<int> maxf(5, 80);
  std::uniform_int_distribution<int> skip(0, 15);
  std::uniform_real_distribution<double> ratio(0.3, 1.0);
  std::uniform_real_distribution<double> density(0.05, 0.95);
  for (int trial = 0; trial < kVadSequences; ++trial) {
    std::vector<bool> labels(static_cast<std::size_t>(len(rng)));
    std::bernoulli_distribution voiced(density(rng));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = voiced(rng);
    speech::VadConfig cfg;
    cfg.padding_window = window(rng);
    cfg.start_ratio = ratio(rng);
    cfg.end_ratio = ratio(rng);
    cfg.max_utterance = maxf(rng) * speech::kFrameSeconds;
    const int sk = skip(rng);
    const auto mine = speech::collect_utterances(labels, cfg, sk);
    const auto ref =
        oracle::reference_collect(labels, cfg.padding_window, cfg.start_ratio, cfg.end_ratio, cfg.max_frames(), sk);
    bool same = mine.size() == ref.size();
    for (std::size_t i = 0; same && i < ref.size(); ++i) {
      same = mine[i].first == ref[i].first && mine[i].last == ref[i].last;
    }
    c.require(same, fmt::format("trial {}", trial));
  }
}

void keywords(Check& c) {
  for (const auto& [text, kw] : phrases::kKeywordPhrases) {
    const auto cmd = speech::detect_keywords(text);
    c.require(cmd && cmd->keyword == kw, fmt::format("'{}'", text));
  }
  c.require(std::size(phrases::kDistractors) == 20, "distractor count");
  for (const auto& text : phrases::kDistractors) {
    c.require(!speech::detect_keywords(text), fmt::format("distractor '{}'", text));
  }
}

void protocol(Check& c) {
  using namespace chairside::remote;
  for (const auto& [name, m] : fixtures::all()) {
    c.require(decode(encode(m)) == m, name + " round trip");
    const fs::path golden = source("tests/golden/" + name + ".ndjson");
    c.require(fs::exists(golden) && read_file(golden) == encode(m), name + " golden");
    c.require(encode(m) == encode(m), name + " unstable");
  }

  RemoteGateway gw({{"tok"}, 2.0});
  const ClientId id = gw.connect();
  gw.receive(id, encode({MessageKind::Control, 0, "", {{"type", "hello"}, {"token", "tok"}}}));
  const std::string session = decode(gw.take_outbox(id).at(0)).payload["session_id"];
  gw.receive(id, encode({MessageKind::Control, 1, session, {{"type", "claim"}}}));
  gw.take_outbox(id);
  gw.receive(id, encode({MessageKind::Command, 1, session, {{"tab", "base"}, {"action", "rotate"}, {"magnitude", 1}}}));
  const auto out = gw.take_outbox(id);
  c.require(out.size() == 1 && decode(out[0]).kind == MessageKind::Error &&
                decode(out[0]).payload["message"] == "out-of-order seq",
            "out-of-order seq accepted");
  c.require(gw.take_commands().empty(), "out-of-order command queued");

  sim::WorldState w = fixtures::state_world();
  const fsm::PipelineState following = fsm::Following{fsm::FollowMode::Behind};
  const auto before = state_payload(w, following, {}, {});
  const auto r = apply_operator_command({Tab::Base, "translate", 1.0, std::nullopt}, w, following);
  c.require(!r.accepted && !r.pulse, "command accepted during following");
  c.require(state_payload(w, following, {}, {}) == before, "world changed during following");

  // Same through the whole loop: a scripted operator that starts at once.
  harness::ScenarioConfig cfg;
  cfg.duration = 5.0;
  cfg.remote.start_immediately = true;
  cfg.remote.script = {{0.0, MessageKind::Control, {{"type", "claim"}}},
                       {0.2, MessageKind::Command, {{"tab", "base"}, {"action", "translate"}, {"magnitude", 1.0}}},
                       {0.2, MessageKind::Command, {{"tab", "arm_low"}, {"action", "lift"}, {"magnitude", 0.2}}}};
  const auto run = harness::run_scenario(cfg, true);
  c.require(run.metrics.remote_accepted == 0, "loop accepted a command while following");
  c.require(run.metrics.remote_rejected == 2, fmt::format("rejected {}", run.metrics.remote_rejected));
  for (const auto& s : run.trace) {
    c.require(s.source != harness::CommandSource::Remote, "remote drove during following");
  }
}

void case_study(Check& c) {
  const auto config = harness::load_scenario(source("scenarios/chair_case_study.json"));
  const auto a = harness::run_scenario(config, true);
  const auto b = harness::run_scenario(config, true);
  const auto report = harness::evaluate_case_study(a.metrics, kChairOffCorridor);
  c.require(report.passed, "failed at " + report.failed_phase);
  for (const auto& p : report.phases) c.require(p.passed, p.name + ": " + p.detail);
  c.require(harness::to_json(a.metrics).dump() == harness::to_json(b.metrics).dump(), "not deterministic");

  std::stringstream trace;
  harness::write_trace(trace, config, a.trace);
  const auto replayed = harness::replay(harness::read_trace(trace));
  c.require(harness::to_json(replayed).dump() == harness::to_json(a.metrics).dump(), "replay differs");
}

void determinism(Check& c) {
  int scenarios = 0;
  for (const auto& entry : fs::directory_iterator(source("scenarios"))) {
    if (entry.path().extension() != ".json") continue;
    const auto config = harness::load_scenario(entry.path());
    const auto a = harness::run_scenario(config);
    const auto b = harness::run_scenario(config);
    c.require(harness::to_json(a.metrics).dump(2) == harness::to_json(b.metrics).dump(2),
              entry.path().filename().string() + " json");
    c.require(harness::to_csv(a.metrics) == harness::to_csv(b.metrics), entry.path().filename().string() + " csv");
    ++scenarios;
  }
  c.require(scenarios > 0, "no scenarios");
  harness::SweepOptions o;
  const auto episode = harness::sweep_episode({}, o, 0.2, switching::FollowMode::Left, 7);
  c.require(harness::to_json(harness::run_scenario(episode).metrics).dump() ==
                harness::to_json(harness::run_scenario(episode).metrics).dump(),
            "sweep episode");
}

}  // namespace

int main() {
  criterion("fsm: exhaustive transition table, keyword mappings, teleop exit", fsm_suite, kFsmBudget);
  criterion("mode-switch: 6 pairs x 5x5x3 perturbations, 0.05 m / 5 deg, collision-free at 1 mm", switch_grid,
            kSwitchBudget);
  criterion("follow: behind converges within 15 s and holds 30 s", convergence);
  criterion("sweep: 20 seeds per cell, behind 100% <= 0.3, accompany 0% at 1.0, left >= right, non-increasing",
            sweep_trend, kSweepBudget);
  criterion("vad: 1000 random label sequences match the reference collector", vad_equivalence);
  criterion("keywords: phrase set maps, 20 distractors absent", keywords);
  criterion("protocol: round trip, goldens, out-of-order seq, interlock", protocol);
  criterion("case study: all phases pass, replay reproduces metrics", case_study);
  criterion("determinism: same seed gives byte-identical metrics", determinism);
  std::cout << (failures == 0 ? "ALL PASS" : fmt::format("{} FAILED", failures)) << std::endl;
  return failures;
}
