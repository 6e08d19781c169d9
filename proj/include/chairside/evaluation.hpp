#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "chairside/metrics.hpp"
#include "chairside/runner.hpp"
#include "chairside/scenario.hpp"

namespace chairside::harness {

struct SweepOptions {
  std::vector<double> speeds{0.1, 0.2, 0.3, 1.0};
  std::vector<switching::FollowMode> modes{switching::FollowMode::Behind, switching::FollowMode::Right,
                                           switching::FollowMode::Left};
  int seeds = 20;
  std::uint64_t base_seed = 1;
  unsigned threads = 0;  // 0 = hardware concurrency
  bool turn = false;     // one gentle 45 degree turn instead of a straight path
  double path_length = 20.0;
  int distractors = 2;
};

struct EpisodeResult {
  double speed = 0.0;
  switching::FollowMode mode = switching::FollowMode::Behind;
  int seed_index = 0;
  std::uint64_t seed = 0;
  bool success = false;
  ModeFollowStats stats;
};

struct SweepCell {
  double speed = 0.0;
  switching::FollowMode mode = switching::FollowMode::Behind;
  int successes = 0;
  int episodes = 0;
  double rate() const { return episodes == 0 ? 0.0 : static_cast<double>(successes) / episodes; }
};

struct SweepResult {
  std::vector<EpisodeResult> episodes;  // sorted by (speed, mode, seed_index)
  std::vector<SweepCell> cells;         // sorted by (speed, mode)

  const SweepCell* cell(double speed, switching::FollowMode mode) const;
};

/// One sweep episode: the template with the given speed and mode, a seeded
/// speed variation and seeded bystanders. The seeded draws depend only on
/// (base_seed, seed_index), so every cell sees the same disturbances.
ScenarioConfig sweep_episode(const ScenarioConfig& base, const SweepOptions& options, double speed,
                             switching::FollowMode mode, int seed_index);

SweepResult sweep_following(const ScenarioConfig& base, const SweepOptions& options);

/// Rows are speeds, columns are the modes in option order, values are success
/// percentages.
std::string sweep_table_csv(const SweepResult& result, const SweepOptions& options);
std::string sweep_episodes_csv(const SweepResult& result);

struct PhaseResult {
  std::string name;
  bool passed = false;
  std::optional<double> time;
  std::string detail;
};

struct CaseStudyReport {
  std::vector<PhaseResult> phases;
  bool passed = false;
  std::string failed_phase;
  std::optional<double> completion_time;
};

/// Minimum edge-to-edge gap between a moved chair and the wheelchair corridor.
inline constexpr double kChairClearance = 0.5;

/// Checks the chair-moving sequence: following, "help" activation, chair
/// moved clear of the corridor under remote control, release back to
/// Following(behind).
CaseStudyReport evaluate_case_study(const RunMetrics& metrics, double clearance = kChairClearance);
nlohmann::json to_json(const CaseStudyReport& report);

}  // namespace chairside::harness
