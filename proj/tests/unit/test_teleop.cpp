#include <array>

#include "doctest.h"

#include "chairside/teleop.hpp"

using namespace chairside;
using namespace chairside::teleop;

namespace {

constexpr std::array kButtons{Button::A, Button::B, Button::X, Button::Y, Button::LB, Button::RB};

}  // namespace

TEST_SUITE("teleop") {
  TEST_CASE("X exits whatever else is pressed") {
    const sim::RobotState robot;
    for (unsigned mask = 0; mask < 64; ++mask) {
      PadState pad{{0.8, -0.9}, {0.5, 1.0}, {}};
      for (std::size_t b = 0; b < kButtons.size(); ++b) {
        if (mask & (1u << b)) pad.buttons.insert(kButtons[b]);
      }
      const auto a = map_input(pad, robot);
      CAPTURE(mask);
      if (pad.buttons.contains(Button::X)) {
        CHECK(a.exit);
        CHECK(a.base.is_zero());
        CHECK(a.lift_delta_rate == 0.0);
        CHECK(a.extension_delta_rate == 0.0);
        CHECK_FALSE(a.gripper_toggle);
      } else {
        CHECK_FALSE(a.exit);
      }
    }
  }

  TEST_CASE("neutral pad does nothing") {
    CHECK(map_input(PadState{}, sim::RobotState{}) == TeleopAction{});
  }

  TEST_CASE("dead zone") {
    PadState pad;
    pad.left_stick.y = 0.05;
    CHECK(map_input(pad, sim::RobotState{}).base.v == 0.0);
    CHECK(apply_dead_zone(0.1) == 0.0);
    CHECK(apply_dead_zone(-0.1) == 0.0);
    CHECK(apply_dead_zone(1.0) == doctest::Approx(1.0));
    CHECK(apply_dead_zone(-1.0) == doctest::Approx(-1.0));
  }

  TEST_CASE("axis mapping") {
    const sim::RobotState robot;
    PadState pad{{-1.0, 1.0}, {1.0, -1.0}, {Button::LB}};
    const auto a = map_input(pad, robot);
    CHECK(a.base.v == doctest::Approx(robot.v_cap));
    CHECK(a.base.w == doctest::Approx(robot.w_cap));  // stick left turns CCW
    CHECK(a.lift_delta_rate < 0.0);
    CHECK(a.extension_delta_rate > 0.0);
    CHECK(a.base.face_rate > 0.0);
  }

  TEST_CASE("magnitude is monotone outside the dead zone") {
    double prev = -1.0;
    for (double x = kDeadZone; x <= 1.0 + 1e-12; x += 0.01) {
      const double m = apply_dead_zone(x);
      CHECK(m > prev);
      CHECK(apply_dead_zone(-x) == doctest::Approx(-m));
      prev = m;
    }
  }

  TEST_CASE("A toggles the gripper once per press") {
    TeleopSession s;
    sim::RobotState robot;
    PadState a;
    a.buttons = {Button::A};
    auto out = s.sample(a, robot, 0.05);
    REQUIRE(out.manipulations.size() == 1);
    CHECK(out.manipulations[0].gripper == sim::Gripper::Closed);
    CHECK(s.sample(a, robot, 0.05).manipulations.empty());
    CHECK(s.sample(PadState{}, robot, 0.05).manipulations.empty());
    robot.gripper = sim::Gripper::Closed;
    out = s.sample(a, robot, 0.05);
    REQUIRE(out.manipulations.size() == 1);
    CHECK(out.manipulations[0].gripper == sim::Gripper::Open);
  }

  TEST_CASE("pad scripts") {
    const auto script = parse_pad_script(
        "{\"t\": 0.0, \"ly\": 0.5}\n"
        "\n"
        "{\"t\": 1.5, \"lx\": 3.0, \"buttons\": [\"A\", \"Z\"]}\n"
        "{\"t\": 2.0, \"buttons\": [\"X\"]}\n");
    REQUIRE(script.size() == 3);
    CHECK(script[0].pad.left_stick.y == 0.5);
    CHECK(script[1].time == 1.5);
    CHECK(script[1].pad.left_stick.x == 1.0);
    CHECK(script[1].pad.buttons == std::set<Button>{Button::A});
    CHECK(map_input(script[2].pad, sim::RobotState{}).exit);
    CHECK_THROWS(parse_pad_script("{\"t\": \"soon\"}\n"));
  }
}
