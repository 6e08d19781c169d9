#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "chairside/fsm.hpp"
#include "chairside/perception.hpp"
#include "chairside/scenario.hpp"
#include "chairside/sim.hpp"

namespace chairside::harness {

inline constexpr double kDriftLimit = 0.3;

struct ModeFollowStats {
  std::int64_t perception_ticks = 0;
  std::int64_t lost_ticks = 0;  // target out of frame or a bystander picked
  int max_stale_ticks = 0;
  std::int64_t distance_samples = 0;
  std::int64_t distance_violations = 0;
  std::optional<double> min_standoff;
  std::optional<double> max_standoff;
  // Accompany modes: steps with lateral offset more than kDriftLimit off target.
  std::int64_t drift_warnings = 0;
  double max_lateral_drift = 0.0;

  bool success(int fail_staleness) const {
    return max_stale_ticks < fail_staleness && distance_violations == 0;
  }
};

struct FsmRecord {
  double time = 0.0;
  std::string event;
  std::string from;
  std::string to;
  std::string action;
};

struct SwitchOutcome {
  std::string from;
  std::string to;
  std::string outcome;  // complete | abandoned | cancelled | unfinished
  int replans = 0;
  double start_time = 0.0;
  std::optional<double> end_time;
  std::optional<double> position_error;
  std::optional<double> heading_error;
};

struct ChairRecord {
  int id = 0;
  Pose2 start;
  Pose2 end;
  double displacement = 0.0;
  double corridor_gap = 0.0;  // chair edge to wheelchair corridor edge; negative = overlap
  double start_gap = 0.0;

  bool blocked_path() const { return start_gap < 0.0; }
};

struct TaskRecord {
  std::string kind;  // teleop | remote
  double start_time = 0.0;
  std::optional<double> end_time;
  std::vector<ChairRecord> chairs_at_end;
};

struct RunMetrics {
  std::string scenario;
  std::uint64_t seed = 0;
  double duration = 0.0;
  std::int64_t steps = 0;
  int fail_staleness = 3;

  std::map<std::string, ModeFollowStats> follow;
  std::int64_t perception_ticks = 0;
  std::int64_t in_frame_ticks = 0;

  std::vector<SwitchOutcome> switches;
  std::vector<TaskRecord> tasks;
  std::vector<FsmRecord> fsm_log;
  std::vector<nlohmann::json> speech;
  std::int64_t remote_accepted = 0;
  std::int64_t remote_rejected = 0;
  std::int64_t remote_clamped = 0;
  std::vector<nlohmann::json> alerts;  // {time, message}
  std::vector<ChairRecord> chairs;
  std::string final_state;

  bool follow_success() const;
  bool follow_success(switching::FollowMode mode) const;
  double time_in_frame_fraction() const;
};

nlohmann::json to_json(const RunMetrics& metrics);
/// Two-column key,value CSV of the scalar metrics.
std::string to_csv(const RunMetrics& metrics);

double corridor_gap(const sim::WheelchairAgent& wheelchair, const sim::Chair& chair);

/// Accumulates RunMetrics from the per-step stream of a run or a replay.
class MetricsRecorder {
 public:
  MetricsRecorder(const ScenarioConfig& config, const sim::WorldState& initial);

  void transition(const FsmRecord& record, const fsm::PipelineState& next, const sim::WorldState& world);
  void perceive(const perception::TrackingObservation& observation, const fsm::PipelineState& state);
  /// Annotation produced by speech, remote-service or alerts.
  void note(const nlohmann::json& note);
  void after_step(const sim::WorldState& world, const fsm::PipelineState& state);
  RunMetrics finish(const sim::WorldState& world, const fsm::PipelineState& state);

 private:
  std::vector<ChairRecord> chair_records(const sim::WorldState& world) const;

  RunMetrics metrics_;
  switching::SwitchGeometry geometry_;
  double settle_time_;
  std::vector<sim::Chair> initial_chairs_;
  double segment_start_ = 0.0;
  int stale_run_ = 0;
  bool in_following_ = true;
};

}  // namespace chairside::harness
