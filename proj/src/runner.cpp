#include "chairside/runner.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace chairside::harness {

using nlohmann::json;

namespace {

constexpr double kToneHz = 220.0;

std::int64_t steps_for(double seconds, double dt) { return static_cast<std::int64_t>(std::llround(seconds / dt)); }

std::optional<fsm::Event> parse_event(std::string_view text) {
  if (text == "switch_complete") return fsm::Event::switch_complete();
  if (text == "switch_aborted") return fsm::Event::switch_aborted(0.0);
  if (text == "teleop_exit") return fsm::Event::teleop_exit();
  if (text == "remote_release") return fsm::Event::remote_release();
  constexpr std::string_view prefix = "keyword:";
  if (text.starts_with(prefix)) {
    for (auto k : fsm::kAllKeywords) {
      if (fsm::to_string(k) == text.substr(prefix.size())) return fsm::Event::spoken(k);
    }
  }
  return std::nullopt;
}

std::string_view manipulation_name(sim::ManipulationKind kind) {
  switch (kind) {
    case sim::ManipulationKind::Lift:
      return "lift";
    case sim::ManipulationKind::Extend:
      return "extend";
    case sim::ManipulationKind::Wrist:
      return "wrist";
    case sim::ManipulationKind::Gripper:
      return "gripper";
  }
  return "lift";
}

json op_json(const WorldOp& op) {
  if (op.kind == WorldOp::Kind::Pan) return {{"kind", "pan"}, {"delta", op.pan_delta}};
  const auto& m = op.manipulation;
  if (m.kind == sim::ManipulationKind::Gripper) {
    return {{"kind", "gripper"}, {"state", m.gripper == sim::Gripper::Closed ? "closed" : "open"}};
  }
  return {{"kind", std::string(manipulation_name(m.kind))}, {"delta", m.delta}};
}

WorldOp op_from_json(const json& j) {
  WorldOp op;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "pan") {
    op.kind = WorldOp::Kind::Pan;
    op.pan_delta = j.at("delta").get<double>();
    return op;
  }
  if (kind == "gripper") {
    op.manipulation = {sim::ManipulationKind::Gripper, 0.0,
                       j.at("state").get<std::string>() == "closed" ? sim::Gripper::Closed : sim::Gripper::Open};
    return op;
  }
  for (auto k : {sim::ManipulationKind::Lift, sim::ManipulationKind::Extend, sim::ManipulationKind::Wrist}) {
    if (manipulation_name(k) == kind) {
      op.manipulation = {k, j.at("delta").get<double>()};
      return op;
    }
  }
  throw std::runtime_error("trace: unknown op kind '" + kind + "'");
}

void apply_op(sim::WorldState& world, const WorldOp& op) {
  if (op.kind == WorldOp::Kind::Pan) {
    world.robot.face_angle = normalize_deg(world.robot.face_angle + op.pan_delta);
  } else {
    world = sim::apply_manipulation(std::move(world), op.manipulation).world;
  }
}

switching::SwitchGeometry geometry_for(const ScenarioConfig& config) {
  auto g = config.switch_geometry;
  g.footprint = config.wheelchair.footprint;
  return g;
}

perception::Tracker make_tracker(const ScenarioConfig& config) {
  std::optional<perception::MastOcclusion> mast;
  if (config.mast_occlusion) mast = config.mast;
  return perception::Tracker(config.camera, mast, config.detector);
}

}  // namespace

std::string_view to_string(CommandSource source) {
  switch (source) {
    case CommandSource::None:
      return "none";
    case CommandSource::Follow:
      return "follow";
    case CommandSource::Switch:
      return "switch";
    case CommandSource::Teleop:
      return "teleop";
    case CommandSource::Remote:
      return "remote";
  }
  return "none";
}

std::optional<CommandSource> parse_command_source(std::string_view text) {
  for (auto s : {CommandSource::None, CommandSource::Follow, CommandSource::Switch, CommandSource::Teleop,
                 CommandSource::Remote}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

/// In-process operator that plays a remote script through the gateway,
/// exactly as a network client would.
struct Simulation::ScriptedOperator {
  remote::RemoteGateway& gateway;
  RemoteConfig config;
  remote::ClientId id;
  std::optional<double> started;
  std::size_t next = 0;
  double next_due = 0.0;
  std::int64_t seq = 0;
  std::string session;

  ScriptedOperator(remote::RemoteGateway& g, RemoteConfig c) : gateway(g), config(std::move(c)), id(g.connect()) {}

  void send(remote::MessageKind kind, const json& payload, Simulation& sim) {
    remote::Message m;
    m.kind = kind;
    m.seq = ++seq;
    m.session = session;
    m.payload = payload;
    gateway.receive(id, remote::encode(m));
    drain(sim);
  }

  void drain(Simulation& sim) {
    for (const auto& line : gateway.take_outbox(id)) {
      const auto m = remote::decode(line);
      if (m.kind == remote::MessageKind::State) continue;
      if (m.kind == remote::MessageKind::Ack && m.payload.value("type", "") == "hello") {
        session = m.payload.value("session_id", "");
      }
      if (m.kind == remote::MessageKind::Error) {
        std::ostringstream msg;
        msg << "t=" << sim.world_.time << " operator received error: " << m.payload.dump();
        sim.log(msg.str());
      }
    }
  }

  void update(double now, bool remote_active, Simulation& sim) {
    if (!started) {
      if (!remote_active && !config.start_immediately) return;
      started = now;
      send(remote::MessageKind::Control, {{"type", "hello"}, {"token", config.token}}, sim);
      if (!config.script.empty()) next_due = now + config.script.front().delay;
    }
    while (next < config.script.size() && next_due <= now + 1e-9) {
      const auto& step = config.script[next];
      send(step.kind, step.payload, sim);
      if (++next < config.script.size()) next_due += config.script[next].delay;
    }
    drain(sim);
  }
};

Simulation::Simulation(ScenarioConfig config, remote::RemoteGateway* gateway, bool record_trace)
    : config_(std::move(config)),
      world_(initial_world(config_)),
      state_(fsm::Following{config_.mode}),
      total_steps_(steps_for(config_.duration, config_.dt)),
      record_trace_(record_trace),
      tracker_(make_tracker(config_)),
      perception_rng_(make_stream(config_.seed, 1)),
      audio_rng_(make_stream(config_.seed, 2)),
      teleop_(config_.teleop_rates) {
  if (!config_.speech.utterances.empty()) {
    std::map<std::string, std::string> script;
    for (std::size_t i = 0; i < config_.speech.utterances.size(); ++i) {
      const auto& u = config_.speech.utterances[i];
      const auto words = std::max<std::size_t>(1, std::count(u.text.begin(), u.text.end(), ' ') + 1);
      utterance_spans_.emplace_back(u.time, u.time + static_cast<double>(words) * config_.speech.seconds_per_word);
      script["utt" + std::to_string(i)] = u.text;
    }
    auto transcriber = std::make_shared<speech::ScriptedTranscriber>(std::move(script), config_.speech.corruption_rate,
                                                                     make_stream(config_.seed, 3)());
    auto resolve = [spans = utterance_spans_](double start, double end) {
      std::string best = "unscheduled";
      double best_overlap = 0.0;
      for (std::size_t i = 0; i < spans.size(); ++i) {
        const double overlap = std::min(end, spans[i].second) - std::max(start, spans[i].first);
        if (overlap > best_overlap) {
          best_overlap = overlap;
          best = "utt" + std::to_string(i);
        }
      }
      return best;
    };
    speech_ = std::make_unique<speech::SpeechPipeline>(config_.vad, std::move(transcriber),
                                                       config_.speech.transcription_frames, resolve);
  }

  if (gateway) {
    gateway_ = gateway;
  } else if (!config_.remote.script.empty()) {
    remote::GatewayConfig gc;
    gc.tokens.insert(config_.remote.tokens.begin(), config_.remote.tokens.end());
    own_gateway_ = std::make_unique<remote::RemoteGateway>(std::move(gc));
    gateway_ = own_gateway_.get();
    operator_ = std::make_unique<ScriptedOperator>(*gateway_, config_.remote);
  }
  broadcast_every_ = std::max<std::int64_t>(1, steps_for(config_.broadcast_period, config_.dt));
  recorder_ = std::make_unique<MetricsRecorder>(config_, world_);

  log("scenario " + config_.name + " seed " + std::to_string(config_.seed));
  log("resolved config " + to_json(config_).dump());
  std::ostringstream vad;
  vad << "vad energy_threshold=" << config_.vad.energy_threshold << " padding_window=" << config_.vad.padding_window
      << " start_ratio=" << config_.vad.start_ratio << " end_ratio=" << config_.vad.end_ratio
      << " max_utterance=" << config_.vad.max_utterance << "s transcription_frames="
      << config_.speech.transcription_frames;
  log(vad.str());
}

Simulation::~Simulation() = default;

void Simulation::log(const std::string& line) { log_.push_back(line); }

void Simulation::note(TraceStep& record, json n) { record.notes.push_back(std::move(n)); }

void Simulation::enqueue(const fsm::Event& event) {
  std::lock_guard lock(queue_mutex_);
  queue_.push_back(event);
}

void Simulation::speech_stage(TraceStep& record) {
  if (!speech_) return;
  const std::size_t n = speech::AudioFrame::expected_length(16000);
  const double horizon = world_.time + config_.dt;
  std::normal_distribution<double> noise(0.0, config_.speech.noise_rms);
  while (static_cast<double>(audio_frames_) * speech::kFrameSeconds < horizon - 1e-12) {
    speech::AudioFrame frame;
    frame.start_time = static_cast<double>(audio_frames_) * speech::kFrameSeconds;
    frame.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = frame.start_time + static_cast<double>(i) / 16000.0;
      double s = noise(audio_rng_);
      for (const auto& [a, b] : utterance_spans_) {
        if (t >= a && t < b) s += config_.speech.voice_amplitude * std::sin(2.0 * kPi * kToneHz * t);
      }
      frame.samples[i] = static_cast<std::int16_t>(std::clamp(std::round(s), -32768.0, 32767.0));
    }
    ++audio_frames_;
    const auto result = speech_->push(frame);
    if (!result) continue;
    json entry = {{"id", result->utterance_id},
                  {"start", result->start_time},
                  {"end", result->end_time},
                  {"heard_at", world_.time},
                  {"text", result->text ? json(*result->text) : json(nullptr)},
                  {"keyword", result->command ? json(std::string(fsm::to_string(result->command->keyword)))
                                              : json(nullptr)}};
    note(record, {{"speech", entry}});
    log("t=" + std::to_string(world_.time) + " speech " + entry.dump());
    if (result->command) enqueue(speech::keyword_event(*result->command));
  }
}

void Simulation::teleop_stage() {
  teleop_actions_.reset();
  if (!std::holds_alternative<fsm::Teleop>(state_)) return;
  const double rel = world_.time - teleop_entered_;
  teleop::PadState pad;
  for (const auto& tp : config_.teleop_script) {
    if (tp.time > rel + 1e-9) break;
    pad = tp.pad;
  }
  teleop_actions_ = teleop_.sample(pad, world_.robot, config_.dt);
  if (teleop_actions_->exit) enqueue(fsm::Event::teleop_exit());
}

void Simulation::remote_stage() {
  if (!gateway_) return;
  if (operator_) operator_->update(world_.time, std::holds_alternative<fsm::RemoteAssist>(state_), *this);
  gateway_->tick(world_.time);
  for (const auto& e : gateway_->take_events()) enqueue(e);
  auto commands = gateway_->take_commands();
  inbound_.insert(inbound_.end(), commands.begin(), commands.end());
}

void Simulation::drain_events(TraceStep& record) {
  std::deque<fsm::Event> events;
  {
    std::lock_guard lock(queue_mutex_);
    events.swap(queue_);
  }
  for (const auto& event : events) {
    const auto t = fsm::transition(state_, event, config_.max_replans);
    FsmRecord r{world_.time, fsm::to_string(event), fsm::to_string(state_), fsm::to_string(t.next),
                std::string(fsm::to_string(t.action))};
    recorder_->transition(r, t.next, world_);
    record.transitions.push_back(r);
    if (t.action != fsm::Action::None) {
      log("t=" + std::to_string(world_.time) + " " + r.event + ": " + r.from + " -> " + r.to + " [" + r.action + "]");
    }
    const auto before = state_;
    state_ = t.next;
    apply_action(t.action, before, state_, record);
  }
}

void Simulation::apply_action(fsm::Action action, const fsm::PipelineState&, const fsm::PipelineState& after,
                              TraceStep& record) {
  switch (action) {
    case fsm::Action::StartSwitch:
    case fsm::Action::Replan: {
      const auto& s = std::get<fsm::Switching>(after);
      const Pose2 rel = relative_pose(world_.wheelchair.pose, world_.robot.base);
      auto plan = switching::plan_switch(rel, s.from, s.to, geometry_for(config_));
      executor_.emplace(std::move(plan), world_.wheelchair.pose, config_.executor);
      break;
    }
    case fsm::Action::AbandonSwitch:
      executor_.reset();
      note(record, {{"alert", "switch abandoned"}, {"time", world_.time}});
      break;
    case fsm::Action::FinishSwitch:
      executor_.reset();
      break;
    case fsm::Action::EnterTeleop:
      executor_.reset();
      pulse_.reset();
      teleop_.reset();
      teleop_entered_ = world_.time;
      break;
    case fsm::Action::EnterRemote:
      executor_.reset();
      pulse_.reset();
      note(record, {{"alert", "remote assistance requested"}, {"time", world_.time}});
      break;
    case fsm::Action::ResumeFollowing:
      pulse_.reset();
      lost_ = {};
      break;
    case fsm::Action::None:
      break;
  }
}

void Simulation::command_stage(TraceStep& record) {
  auto contribute = [&](CommandSource source) {
    if (record.source != CommandSource::None && record.source != source) {
      throw SingleWriterViolation("step " + std::to_string(world_.step_count) + ": " +
                                  std::string(to_string(record.source)) + " and " + std::string(to_string(source)) +
                                  " both commanded the robot");
    }
    record.source = source;
  };
  const double dt = config_.dt;
  sim::BaseCommand cmd;

  // Operator commands are answered in seq order whatever the state; only
  // RemoteAssist lets them through.
  for (const auto& pending : inbound_) {
    const auto outcome = remote::apply_operator_command(pending.command, world_, state_, config_.remote.caps);
    gateway_->complete(pending, outcome);
    note(record, {{"remote",
                   {{"seq", pending.seq},
                    {"tab", std::string(remote::to_string(pending.command.tab))},
                    {"action", pending.command.action},
                    {"accepted", outcome.accepted},
                    {"clamped", outcome.clamped},
                    {"error", outcome.error}}}});
    if (!outcome.accepted) continue;
    contribute(CommandSource::Remote);
    if (outcome.manipulation) record.ops.push_back({WorldOp::Kind::Manipulation, *outcome.manipulation, 0.0});
    if (outcome.pan_delta) record.ops.push_back({WorldOp::Kind::Pan, {}, *outcome.pan_delta});
    if (outcome.pulse) pulse_ = PendingPulse{outcome.pulse->command, steps_for(outcome.pulse->duration, dt)};
  }
  inbound_.clear();

  if (const auto* f = std::get_if<fsm::Following>(&state_)) {
    contribute(CommandSource::Follow);
    const auto& obs = tracker_.last();
    const auto& fp = config_.follow;
    if (obs.in_frame) {
      cmd = f->mode == switching::FollowMode::Behind
                ? follow::behind_control(obs, fp)
                : follow::accompany_control(
                      obs, f->mode == switching::FollowMode::Left ? follow::Side::Left : follow::Side::Right, fp);
      lost_.last_command = cmd;
      lost_.stale_seconds = 0.0;
    } else {
      lost_.stale_seconds += dt;
      cmd = follow::lost_target(lost_, fp);
    }
    lost_.staleness = obs.staleness;
    const double face_target = switching::switch_target(f->mode).face_angle;
    if (f->mode == switching::FollowMode::Behind) {
      if (cmd.face_rate == 0.0) {
        // Re-center the camera while turning the base the other way, so the
        // view direction holds still.
        const double r = follow::pan_toward(world_.robot.face_angle, face_target, world_.robot.face_rate_cap, dt);
        cmd.face_rate = r;
        cmd.w -= r;
      }
    } else {
      cmd.face_rate = follow::pan_toward(world_.robot.face_angle, face_target, world_.robot.face_rate_cap, dt);
    }
  } else if (std::holds_alternative<fsm::Switching>(state_)) {
    contribute(CommandSource::Switch);
    if (executor_) {
      const auto out = executor_->update(world_, dt);
      cmd = out.cmd;
      if (out.status == switching::ExecStatus::Complete) {
        enqueue(fsm::Event::switch_complete());
        executor_.reset();
      } else if (out.status == switching::ExecStatus::Aborted) {
        enqueue(fsm::Event::switch_aborted(out.displacement));
        executor_.reset();
      }
    }
  } else if (std::holds_alternative<fsm::Teleop>(state_)) {
    contribute(CommandSource::Teleop);
    if (teleop_actions_ && !teleop_actions_->exit) {
      cmd = teleop_actions_->base;
      for (const auto& m : teleop_actions_->manipulations) {
        record.ops.push_back({WorldOp::Kind::Manipulation, m, 0.0});
        world_ = sim::apply_manipulation(std::move(world_), m).world;
      }
    }
  } else {
    contribute(CommandSource::Remote);
    if (pulse_) {
      cmd = pulse_->command;
      if (--pulse_->steps_left <= 0) pulse_.reset();
    }
  }
  record.command = cmd;
}

void Simulation::step() {
  if (finished()) return;
  TraceStep record;
  record.step = world_.step_count;

  speech_stage(record);
  teleop_stage();
  remote_stage();
  drain_events(record);

  if (world_.step_count % config_.perception_period == 0) {
    const auto obs = tracker_.observe(world_, perception_rng_);
    recorder_->perceive(obs, state_);
    const bool lost = obs.staleness >= config_.follow.fail_staleness;
    if (lost && !lost_alerted_ && fsm::is_following(state_)) note(record, {{"alert", "target lost"}, {"time", world_.time}});
    lost_alerted_ = lost;
  }

  command_stage(record);
  world_ = sim::step(std::move(world_), record.command, config_.dt);
  record.robot = world_.robot.base;

  for (const auto& n : record.notes) recorder_->note(n);
  recorder_->after_step(world_, state_);

  if (gateway_ && world_.step_count % broadcast_every_ == 0 && gateway_->session_count() > 0) {
    std::vector<std::string> alerts;
    if (tracker_.last().staleness >= config_.follow.fail_staleness) alerts.emplace_back("target lost");
    if (std::holds_alternative<fsm::RemoteAssist>(state_)) alerts.emplace_back("remote assist active");
    gateway_->broadcast_state(remote::state_payload(world_, state_, tracker_.last(), alerts));
    if (operator_) operator_->drain(*this);
  }
  if (record_trace_) trace_.push_back(std::move(record));
}

RunResult Simulation::finish() {
  RunResult out;
  out.metrics = recorder_->finish(world_, state_);
  out.trace = std::move(trace_);
  out.log = std::move(log_);
  return out;
}

RunResult run_scenario(const ScenarioConfig& config, bool record_trace) {
  Simulation sim(config, nullptr, record_trace);
  while (!sim.finished()) sim.step();
  return sim.finish();
}

void write_trace(std::ostream& out, const ScenarioConfig& config, const std::vector<TraceStep>& steps) {
  out << json{{"type", "header"}, {"config", to_json(config)}}.dump() << '\n';
  for (const auto& s : steps) {
    json line = {{"step", s.step},
                 {"source", std::string(to_string(s.source))},
                 {"cmd", {s.command.v, s.command.w, s.command.face_rate}},
                 {"robot", {s.robot.x, s.robot.y, s.robot.theta}}};
    if (!s.transitions.empty()) {
      json fsm = json::array();
      for (const auto& r : s.transitions) {
        fsm.push_back({{"time", r.time}, {"event", r.event}, {"from", r.from}, {"to", r.to}, {"action", r.action}});
      }
      line["fsm"] = fsm;
    }
    if (!s.notes.empty()) line["notes"] = s.notes;
    if (!s.ops.empty()) {
      json ops = json::array();
      for (const auto& op : s.ops) ops.push_back(op_json(op));
      line["ops"] = ops;
    }
    out << line.dump() << '\n';
  }
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace: empty input");
  const json header = json::parse(line);
  if (header.value("type", "") != "header") throw std::runtime_error("trace: missing header line");
  trace.config = parse_scenario(header.at("config"));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TraceStep s;
    s.step = j.at("step").get<std::int64_t>();
    const auto source = parse_command_source(j.at("source").get<std::string>());
    if (!source) throw std::runtime_error("trace: unknown source at step " + std::to_string(s.step));
    s.source = *source;
    const auto& c = j.at("cmd");
    s.command = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
    const auto& r = j.at("robot");
    s.robot = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    if (j.contains("fsm")) {
      for (const auto& f : j["fsm"]) {
        s.transitions.push_back({f.at("time").get<double>(), f.at("event").get<std::string>(),
                                 f.at("from").get<std::string>(), f.at("to").get<std::string>(),
                                 f.at("action").get<std::string>()});
      }
    }
    if (j.contains("notes")) s.notes = j["notes"].get<std::vector<json>>();
    if (j.contains("ops")) {
      for (const auto& op : j["ops"]) s.ops.push_back(op_from_json(op));
    }
    trace.steps.push_back(std::move(s));
  }
  return trace;
}

RunMetrics replay(const Trace& trace) {
  const ScenarioConfig& config = trace.config;
  sim::WorldState world = initial_world(config);
  fsm::PipelineState state = fsm::Following{config.mode};
  auto tracker = make_tracker(config);
  auto rng = make_stream(config.seed, 1);
  MetricsRecorder recorder(config, world);

  for (const auto& s : trace.steps) {
    if (s.step != world.step_count) {
      throw std::runtime_error("trace: expected step " + std::to_string(world.step_count) + ", found " +
                               std::to_string(s.step));
    }
    for (const auto& r : s.transitions) {
      const auto event = parse_event(r.event);
      if (!event) throw std::runtime_error("trace: unknown event '" + r.event + "'");
      const auto t = fsm::transition(state, *event, config.max_replans);
      if (fsm::to_string(t.next) != r.to || fsm::to_string(t.action) != r.action) {
        throw std::runtime_error("trace: transition mismatch at step " + std::to_string(s.step));
      }
      recorder.transition(r, t.next, world);
      state = t.next;
    }
    if (world.step_count % config.perception_period == 0) recorder.perceive(tracker.observe(world, rng), state);
    for (const auto& op : s.ops) apply_op(world, op);
    world = sim::step(std::move(world), s.command, config.dt);
    if (!(world.robot.base.x == s.robot.x && world.robot.base.y == s.robot.y &&
          world.robot.base.theta == s.robot.theta)) {
      throw std::runtime_error("trace: robot pose diverged at step " + std::to_string(s.step));
    }
    for (const auto& n : s.notes) recorder.note(n);
    recorder.after_step(world, state);
  }
  return recorder.finish(world, state);
}

}  // namespace chairside::harness
