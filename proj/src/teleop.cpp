#include "chairside/teleop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace chairside::teleop {

std::optional<Button> parse_button(std::string_view name) {
  if (name == "A") return Button::A;
  if (name == "B") return Button::B;
  if (name == "X") return Button::X;
  if (name == "Y") return Button::Y;
  if (name == "LB") return Button::LB;
  if (name == "RB") return Button::RB;
  return std::nullopt;
}

double apply_dead_zone(double axis, double dead_zone) {
  const double a = std::clamp(axis, -1.0, 1.0);
  if (std::abs(a) <= dead_zone) return 0.0;
  const double scaled = (std::abs(a) - dead_zone) / (1.0 - dead_zone);
  return std::copysign(scaled, a);
}

TeleopAction map_input(const PadState& pad, const sim::RobotState& robot, const TeleopRates& rates) {
  TeleopAction action;
  if (pad.buttons.contains(Button::X)) {
    action.exit = true;
    return action;
  }
  action.base.v = apply_dead_zone(pad.left_stick.y) * robot.v_cap;
  action.base.w = -apply_dead_zone(pad.left_stick.x) * robot.w_cap;
  action.lift_delta_rate = apply_dead_zone(pad.right_stick.y) * rates.lift_rate;
  action.extension_delta_rate = apply_dead_zone(pad.right_stick.x) * rates.extension_rate;
  action.gripper_toggle = pad.buttons.contains(Button::A);
  if (pad.buttons.contains(Button::LB)) action.base.face_rate += rates.pan_rate;
  if (pad.buttons.contains(Button::RB)) action.base.face_rate -= rates.pan_rate;
  return action;
}

std::vector<TimedPad> parse_pad_script(std::string_view text) {
  std::vector<TimedPad> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("pad script line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("t") || !j["t"].is_number()) {
      throw std::runtime_error("pad script line " + std::to_string(line_no) + ": missing numeric 't'");
    }
    TimedPad tp;
    tp.time = j["t"].get<double>();
    auto axis = [&](const char* key) {
      return j.contains(key) && j[key].is_number() ? std::clamp(j[key].get<double>(), -1.0, 1.0) : 0.0;
    };
    tp.pad.left_stick = {axis("lx"), axis("ly")};
    tp.pad.right_stick = {axis("rx"), axis("ry")};
    if (j.contains("buttons") && j["buttons"].is_array()) {
      for (const auto& b : j["buttons"]) {
        if (!b.is_string()) continue;
        if (auto button = parse_button(b.get<std::string>())) tp.pad.buttons.insert(*button);
      }
    }
    out.push_back(std::move(tp));
  }
  std::stable_sort(out.begin(), out.end(), [](const TimedPad& a, const TimedPad& b) { return a.time < b.time; });
  return out;
}

std::vector<TimedPad> read_pad_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pad script " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_pad_script(buffer.str());
}

TeleopSession::StepActions TeleopSession::sample(const PadState& pad, const sim::RobotState& robot, double dt) {
  StepActions out;
  const TeleopAction action = map_input(pad, robot, rates_);
  if (action.exit) {
    out.exit = true;
    a_was_down_ = pad.buttons.contains(Button::A);
    return out;
  }
  out.base = action.base;
  if (action.lift_delta_rate != 0.0) {
    out.manipulations.push_back({sim::ManipulationKind::Lift, action.lift_delta_rate * dt});
  }
  if (action.extension_delta_rate != 0.0) {
    out.manipulations.push_back({sim::ManipulationKind::Extend, action.extension_delta_rate * dt});
  }
  if (action.gripper_toggle && !a_was_down_) {
    const auto target = robot.gripper == sim::Gripper::Open ? sim::Gripper::Closed : sim::Gripper::Open;
    out.manipulations.push_back({sim::ManipulationKind::Gripper, 0.0, target});
  }
  a_was_down_ = action.gripper_toggle;
  return out;
}

}  // namespace chairside::teleop
