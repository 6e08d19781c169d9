#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "chairside/follow.hpp"
#include "chairside/fsm.hpp"
#include "chairside/metrics.hpp"
#include "chairside/mode_switch.hpp"
#include "chairside/perception.hpp"
#include "chairside/remote_gateway.hpp"
#include "chairside/scenario.hpp"
#include "chairside/speech.hpp"
#include "chairside/teleop.hpp"

namespace chairside::harness {

enum class CommandSource { None, Follow, Switch, Teleop, Remote };

std::string_view to_string(CommandSource source);
std::optional<CommandSource> parse_command_source(std::string_view text);

/// A direct world edit made by the active command source before the step.
struct WorldOp {
  enum class Kind { Manipulation, Pan };
  Kind kind = Kind::Manipulation;
  sim::ManipulationAction manipulation;
  double pan_delta = 0.0;  // degrees
};

/// Everything a step fed into the world, enough to replay it without the
/// controllers, speech or remote stacks.
struct TraceStep {
  std::int64_t step = 0;
  std::vector<FsmRecord> transitions;
  std::vector<nlohmann::json> notes;
  CommandSource source = CommandSource::None;
  std::vector<WorldOp> ops;
  sim::BaseCommand command;
  Pose2 robot;  // after the step
};

struct RunResult {
  RunMetrics metrics;
  std::vector<TraceStep> trace;
  std::vector<std::string> log;
};

/// Thrown when two command sources try to drive the robot in one step.
class SingleWriterViolation : public std::logic_error {
  using std::logic_error::logic_error;
};

/// Deterministic closed-loop episode. Per step: speech, teleop input, remote
/// inbound, FSM event drain, perception tick, the single active command
/// source, world step, metrics.
class Simulation {
 public:
  /// With an external gateway (live serving) the scripted operator in the
  /// config is not used.
  explicit Simulation(ScenarioConfig config, remote::RemoteGateway* gateway = nullptr, bool record_trace = false);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  std::int64_t total_steps() const { return total_steps_; }
  bool finished() const { return world_.step_count >= total_steps_; }
  void step();
  RunResult finish();

  /// Thread-safe producer entry for the FSM queue.
  void enqueue(const fsm::Event& event);

  const sim::WorldState& world() const { return world_; }
  const fsm::PipelineState& state() const { return state_; }
  const perception::TrackingObservation& observation() const { return tracker_.last(); }
  const ScenarioConfig& config() const { return config_; }

 private:
  struct ScriptedOperator;
  struct PendingPulse {
    sim::BaseCommand command;
    std::int64_t steps_left = 0;
  };

  void speech_stage(TraceStep& record);
  void teleop_stage();
  void remote_stage();
  void drain_events(TraceStep& record);
  void apply_action(fsm::Action action, const fsm::PipelineState& before, const fsm::PipelineState& after,
                    TraceStep& record);
  void command_stage(TraceStep& record);
  void note(TraceStep& record, nlohmann::json note);
  void log(const std::string& line);

  ScenarioConfig config_;
  sim::WorldState world_;
  fsm::PipelineState state_;
  std::int64_t total_steps_ = 0;
  bool record_trace_ = false;

  std::mutex queue_mutex_;
  std::deque<fsm::Event> queue_;

  perception::Tracker tracker_;
  std::mt19937_64 perception_rng_;
  follow::LostState lost_;
  bool lost_alerted_ = false;

  std::optional<switching::SwitchExecutor> executor_;

  std::unique_ptr<speech::SpeechPipeline> speech_;
  std::vector<std::pair<double, double>> utterance_spans_;
  std::mt19937_64 audio_rng_;
  std::int64_t audio_frames_ = 0;

  teleop::TeleopSession teleop_;
  double teleop_entered_ = 0.0;
  std::optional<teleop::TeleopSession::StepActions> teleop_actions_;

  std::unique_ptr<remote::RemoteGateway> own_gateway_;
  remote::RemoteGateway* gateway_ = nullptr;
  std::unique_ptr<ScriptedOperator> operator_;
  std::vector<remote::PendingCommand> inbound_;
  std::optional<PendingPulse> pulse_;
  std::int64_t broadcast_every_ = 2;

  std::vector<std::string> log_;
  std::vector<TraceStep> trace_;
  std::unique_ptr<MetricsRecorder> recorder_;
};

RunResult run_scenario(const ScenarioConfig& config, bool record_trace = false);

struct Trace {
  ScenarioConfig config;
  std::vector<TraceStep> steps;
};

/// JSON lines: a header carrying the resolved config, then one line per step.
void write_trace(std::ostream& out, const ScenarioConfig& config, const std::vector<TraceStep>& steps);
Trace read_trace(std::istream& in);

/// Re-runs the recorded inputs through the simulator and perception and
/// recomputes the metrics. Throws std::runtime_error if the robot pose ever
/// diverges from the recording.
RunMetrics replay(const Trace& trace);

/// Derived RNG stream for one purpose within a seeded run.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream);

}  // namespace chairside::harness
