#pragma once

// One representative message per kind. The encoded forms are frozen under
// tests/golden/ and shared with the console as wire fixtures.

#include <string>
#include <utility>
#include <vector>

#include "chairside/fsm.hpp"
#include "chairside/protocol.hpp"
#include "chairside/sim.hpp"

namespace fixtures {

using namespace chairside;
using remote::Message;
using remote::MessageKind;

inline sim::WorldState state_world() {
  sim::WorldState w;
  w.time = 12.5;
  w.step_count = 250;
  w.robot.base = {1.25, -0.5, 90.0};
  w.robot.face_angle = 0.0;
  w.robot.lift = 0.75;
  w.robot.arm_extension = 0.2;
  w.wheelchair.pose = {1.25, 2.75, 90.0};
  sim::PersonAgent p;
  p.pose = {4.0, 6.5, 270.0};
  w.persons.push_back(p);
  w.chairs.push_back({1, {1.5, 4.0, 0.0}, 0.25});
  return w;
}

inline perception::TrackingObservation state_observation() {
  perception::TrackingObservation o;
  o.deviation_px = -12.5;
  o.distance = 1.25;
  o.in_frame = true;
  o.target_height_px = 300.0;
  return o;
}

inline std::vector<std::pair<std::string, Message>> all() {
  std::vector<std::pair<std::string, Message>> out;
  out.emplace_back("control_hello", Message{MessageKind::Control, 0, "", {{"type", "hello"}, {"token", "operator"}}});
  out.emplace_back("control_claim", Message{MessageKind::Control, 1, "s1", {{"type", "claim"}}});
  out.emplace_back("control_release", Message{MessageKind::Control, 4, "s1", {{"type", "release"}}});
  out.emplace_back("command", Message{MessageKind::Command, 2, "s1",
                                      remote::to_json(remote::OperatorCommand{
                                          remote::Tab::Base, "rotate", -1.0, remote::Click{0.05, 0.5}})});
  out.emplace_back("ack", Message{MessageKind::Ack, 3, "s1", {{"ack_seq", 2}, {"type", "command"}, {"clamped", false}}});
  out.emplace_back("error", Message{MessageKind::Error, 4, "s1",
                                    {{"ack_seq", 3}, {"message", "not in remote mode"}}});
  out.emplace_back("state", Message{MessageKind::State, 2, "s1",
                                    remote::state_payload(state_world(), fsm::RemoteAssist{}, state_observation(),
                                                          {"target lost"})});
  return out;
}

}  // namespace fixtures
