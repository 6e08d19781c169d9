#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "chairside/follow.hpp"
#include "chairside/mode_switch.hpp"
#include "chairside/perception.hpp"
#include "chairside/protocol.hpp"
#include "chairside/sim.hpp"
#include "chairside/speech.hpp"
#include "chairside/teleop.hpp"

namespace chairside::harness {

/// Schema violation; path() is a JSON pointer-like location such as
/// "wheelchair.path[2]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct WheelchairConfig {
  std::vector<Vec2> path{{0.0, 0.0}, {20.0, 0.0}};
  double speed = 0.1;
  sim::SpeedVariation variation;
  Rect footprint{1.2, 0.7};
  double seated_height = 1.3;
  double body_radius = 0.22;
  double stop_distance = 0.5;
  double turn_rate = 30.0;
};

struct PersonConfig {
  std::vector<Vec2> path;
  double speed = 0.0;
  double height = 1.7;
  double radius = 0.2;
};

struct ChairConfig {
  int id = 1;
  Pose2 pose;
  double radius = 0.25;
};

struct SpokenUtterance {
  double time = 0.0;
  std::string text;
};

struct SpeechConfig {
  std::vector<SpokenUtterance> utterances;
  int transcription_frames = 20;
  double corruption_rate = 0.0;
  double noise_rms = 40.0;        // background, 16-bit units
  double voice_amplitude = 3000.0;
  double seconds_per_word = 0.35;
};

/// One line of a scripted remote operator. Delays are relative to the
/// previous line; the first is relative to the pipeline entering
/// RemoteAssist (or to the scenario start when start_immediately is set).
struct RemoteStep {
  double delay = 0.0;
  remote::MessageKind kind = remote::MessageKind::Command;
  nlohmann::json payload = nlohmann::json::object();
};

struct RemoteConfig {
  std::vector<std::string> tokens{"operator"};
  std::string token = "operator";
  bool start_immediately = false;
  std::vector<RemoteStep> script;
  remote::TabCaps caps;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  double duration = 60.0;
  double dt = 0.05;
  int perception_period = 8;
  double broadcast_period = 0.1;
  double settle_time = 5.0;
  switching::FollowMode mode = switching::FollowMode::Behind;

  std::optional<Pose2> robot_pose;  // default: the mode's target pose
  std::optional<double> face_angle;
  sim::RobotState robot;

  WheelchairConfig wheelchair;
  std::vector<PersonConfig> persons;
  std::vector<ChairConfig> chairs;

  perception::CameraModel camera;
  bool mast_occlusion = true;
  perception::MastOcclusion mast;
  perception::DetectorNoise detector;

  follow::FollowParams follow;
  switching::SwitchGeometry switch_geometry;
  switching::ExecutorParams executor;
  int max_replans = 3;

  speech::VadConfig vad;
  SpeechConfig speech;

  std::vector<teleop::TimedPad> teleop_script;
  teleop::TeleopRates teleop_rates;

  RemoteConfig remote;
};

/// Parses and validates a scenario document. Relative script paths resolve
/// against `base_dir`. Unknown keys are errors.
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Fully resolved configuration, every default explicit and scripts inlined.
nlohmann::json to_json(const ScenarioConfig& config);

/// Builds the initial world for a scenario.
sim::WorldState initial_world(const ScenarioConfig& config);

std::vector<RemoteStep> parse_remote_script(std::string_view text);

}  // namespace chairside::harness
