#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chairside/sim.hpp"

namespace chairside::teleop {

enum class Button { A, B, X, Y, LB, RB };

std::optional<Button> parse_button(std::string_view name);

struct Stick {
  double x = 0.0;
  double y = 0.0;
};

struct PadState {
  Stick left_stick;
  Stick right_stick;
  std::set<Button> buttons;
};

inline constexpr double kDeadZone = 0.1;

struct TeleopRates {
  double lift_rate = 0.1;       // m/s at full deflection
  double extension_rate = 0.1;  // m/s
  double pan_rate = 30.0;       // deg/s
};

/// Result of one pad sample. `exit` preempts everything else.
struct TeleopAction {
  bool exit = false;
  sim::BaseCommand base;
  double lift_delta_rate = 0.0;
  double extension_delta_rate = 0.0;
  bool gripper_toggle = false;  // A held; edge detection lives in TeleopSession
  friend bool operator==(const TeleopAction&, const TeleopAction&) = default;
};

/// Rescales so the output is 0 inside the dead zone and continuous outside.
double apply_dead_zone(double axis, double dead_zone = kDeadZone);

/// Left stick drives the base (y forward, x turn right), right stick moves the
/// arm (y lift, x extension), A toggles the gripper, LB/RB pan the camera,
/// X exits teleoperation.
TeleopAction map_input(const PadState& pad, const sim::RobotState& robot, const TeleopRates& rates = {});

struct TimedPad {
  double time = 0.0;
  PadState pad;
};

/// One JSON object per line: {"t":..,"lx":..,"ly":..,"rx":..,"ry":..,"buttons":[..]}.
/// Axis values are clamped into [-1, 1]; unknown buttons are ignored.
std::vector<TimedPad> parse_pad_script(std::string_view text);
std::vector<TimedPad> read_pad_script(const std::filesystem::path& path);

/// Samples the latest pad state each step and turns A presses into single
/// gripper toggles.
class TeleopSession {
 public:
  explicit TeleopSession(TeleopRates rates = {}) : rates_(rates) {}

  struct StepActions {
    bool exit = false;
    sim::BaseCommand base;
    std::vector<sim::ManipulationAction> manipulations;
  };

  StepActions sample(const PadState& pad, const sim::RobotState& robot, double dt);
  void reset() { a_was_down_ = false; }

 private:
  TeleopRates rates_;
  bool a_was_down_ = false;
};

}  // namespace chairside::teleop
