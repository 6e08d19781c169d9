#include "chairside/protocol.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace chairside::remote {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kEnvelopeFields{"kind", "payload", "protocol_version", "seq",
                                                          "session"};

bool action_allowed(Tab tab, std::string_view action) {
  switch (tab) {
    case Tab::Base:
      return action == "translate" || action == "rotate";
    case Tab::ArmLow:
    case Tab::ArmHigh:
      return action == "lift" || action == "extend";
    case Tab::Gripper:
      return action == "open" || action == "close" || action == "wrist";
    case Tab::Camera:
      return action == "pan";
  }
  return false;
}

double clamp_flagged(double value, double cap, bool& clamped) {
  const double out = std::clamp(value, -cap, cap);
  if (out != value) clamped = true;
  return out;
}

json pose_json(const Pose2& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

json pipeline_json(const fsm::PipelineState& state) {
  json j = {{"label", fsm::to_string(state)}};
  if (const auto* f = std::get_if<fsm::Following>(&state)) {
    j["state"] = "following";
    j["mode"] = std::string(switching::to_string(f->mode));
  } else if (const auto* s = std::get_if<fsm::Switching>(&state)) {
    j["state"] = "switching";
    j["from"] = std::string(switching::to_string(s->from));
    j["to"] = std::string(switching::to_string(s->to));
  } else if (std::holds_alternative<fsm::Teleop>(state)) {
    j["state"] = "teleop";
  } else {
    j["state"] = "remote_assist";
  }
  return j;
}

}  // namespace

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::State:
      return "state";
    case MessageKind::Command:
      return "command";
    case MessageKind::Control:
      return "control";
    case MessageKind::Ack:
      return "ack";
    case MessageKind::Error:
      return "error";
  }
  return "error";
}

std::optional<MessageKind> parse_kind(std::string_view text) {
  for (auto k : {MessageKind::State, MessageKind::Command, MessageKind::Control, MessageKind::Ack,
                 MessageKind::Error}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string encode(const Message& message) {
  // nlohmann::json objects are std::map-backed, so keys come out sorted.
  const json doc = {{"kind", std::string(to_string(message.kind))},
                    {"payload", message.payload},
                    {"protocol_version", message.protocol_version},
                    {"seq", message.seq},
                    {"session", message.session}};
  return doc.dump() + "\n";
}

Message decode(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError("json", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ProtocolError("json", "message must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (std::find(kEnvelopeFields.begin(), kEnvelopeFields.end(), key) == kEnvelopeFields.end()) {
      throw ProtocolError(key, "unknown field '" + key + "'");
    }
  }
  auto require = [&](const char* field) -> const json& {
    if (!doc.contains(field)) throw ProtocolError(field, std::string("missing field '") + field + "'");
    return doc.at(field);
  };

  Message m;
  const json& version = require("protocol_version");
  if (!version.is_number_integer() || version.get<int>() != kProtocolVersion) {
    throw ProtocolError("protocol_version", "unsupported protocol_version");
  }
  const json& kind = require("kind");
  if (!kind.is_string()) throw ProtocolError("kind", "'kind' must be a string");
  const auto parsed = parse_kind(kind.get<std::string>());
  if (!parsed) throw ProtocolError("kind", "unknown kind '" + kind.get<std::string>() + "'");
  m.kind = *parsed;
  const json& seq = require("seq");
  if (!seq.is_number_integer() || seq.get<std::int64_t>() < 0) {
    throw ProtocolError("seq", "'seq' must be a non-negative integer");
  }
  m.seq = seq.get<std::int64_t>();
  const json& session = require("session");
  if (!session.is_string()) throw ProtocolError("session", "'session' must be a string");
  m.session = session.get<std::string>();
  const json& payload = require("payload");
  if (!payload.is_object()) throw ProtocolError("payload", "'payload' must be an object");
  m.payload = payload;
  return m;
}

std::string_view to_string(Tab tab) {
  switch (tab) {
    case Tab::Base:
      return "base";
    case Tab::ArmLow:
      return "arm_low";
    case Tab::ArmHigh:
      return "arm_high";
    case Tab::Gripper:
      return "gripper";
    case Tab::Camera:
      return "camera";
  }
  return "base";
}

std::optional<Tab> parse_tab(std::string_view text) {
  for (auto t : {Tab::Base, Tab::ArmLow, Tab::ArmHigh, Tab::Gripper, Tab::Camera}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

OperatorCommand parse_operator_command(const json& payload) {
  if (!payload.is_object()) throw ProtocolError("payload", "command payload must be an object");
  OperatorCommand cmd;
  if (!payload.contains("tab") || !payload["tab"].is_string()) {
    throw ProtocolError("tab", "missing string field 'tab'");
  }
  const auto tab = parse_tab(payload["tab"].get<std::string>());
  if (!tab) throw ProtocolError("tab", "unknown tab '" + payload["tab"].get<std::string>() + "'");
  cmd.tab = *tab;
  if (!payload.contains("action") || !payload["action"].is_string()) {
    throw ProtocolError("action", "missing string field 'action'");
  }
  cmd.action = payload["action"].get<std::string>();
  if (!action_allowed(cmd.tab, cmd.action)) {
    throw ProtocolError("action", "unknown action '" + cmd.action + "' for tab '" +
                                      std::string(to_string(cmd.tab)) + "'");
  }
  if (payload.contains("magnitude")) {
    if (!payload["magnitude"].is_number() || !std::isfinite(payload["magnitude"].get<double>())) {
      throw ProtocolError("magnitude", "'magnitude' must be a finite number");
    }
    cmd.magnitude = payload["magnitude"].get<double>();
  } else if (cmd.action != "open" && cmd.action != "close") {
    throw ProtocolError("magnitude", "missing field 'magnitude'");
  }
  if (payload.contains("click")) {
    const json& c = payload["click"];
    if (!c.is_object() || !c.contains("u") || !c.contains("v") || !c["u"].is_number() ||
        !c["v"].is_number()) {
      throw ProtocolError("click", "'click' must be {\"u\": number, \"v\": number}");
    }
    cmd.click = Click{c["u"].get<double>(), c["v"].get<double>()};
  }
  return cmd;
}

json to_json(const OperatorCommand& command) {
  json j = {{"tab", std::string(to_string(command.tab))},
            {"action", command.action},
            {"magnitude", command.magnitude}};
  if (command.click) j["click"] = {{"u", command.click->u}, {"v", command.click->v}};
  return j;
}

CommandOutcome apply_operator_command(const OperatorCommand& command, sim::WorldState& world,
                                      const fsm::PipelineState& state, const TabCaps& caps) {
  CommandOutcome out;
  if (!std::holds_alternative<fsm::RemoteAssist>(state)) {
    out.error = "not in remote mode";
    return out;
  }
  if (!action_allowed(command.tab, command.action)) {
    out.error = "unknown action";
    return out;
  }

  auto manipulate = [&](sim::ManipulationAction action) {
    auto result = sim::apply_manipulation(world, action);
    world = std::move(result.world);
    out.manipulation = action;
    out.clamped = out.clamped || result.clamped;
    out.attached = result.attached;
    out.released = result.released;
  };

  switch (command.tab) {
    case Tab::Base: {
      const double m = clamp_flagged(command.magnitude, caps.base, out.clamped);
      sim::BaseCommand pulse;
      if (command.action == "translate") {
        pulse.v = m * world.robot.v_cap;
      } else {
        pulse.w = m * world.robot.w_cap;
      }
      out.pulse = BasePulse{pulse, kBasePulseSeconds};
      break;
    }
    case Tab::ArmLow:
    case Tab::ArmHigh: {
      const double d = clamp_flagged(command.magnitude, caps.arm_delta, out.clamped);
      manipulate({command.action == "lift" ? sim::ManipulationKind::Lift : sim::ManipulationKind::Extend, d});
      break;
    }
    case Tab::Gripper:
      if (command.action == "wrist") {
        manipulate({sim::ManipulationKind::Wrist, clamp_flagged(command.magnitude, caps.wrist_delta, out.clamped)});
      } else {
        manipulate({sim::ManipulationKind::Gripper, 0.0,
                    command.action == "close" ? sim::Gripper::Closed : sim::Gripper::Open});
      }
      break;
    case Tab::Camera: {
      const double d = clamp_flagged(command.magnitude, caps.camera_delta, out.clamped);
      world.robot.face_angle = normalize_deg(world.robot.face_angle + d);
      out.pan_delta = d;
      break;
    }
  }
  out.accepted = true;
  return out;
}

json state_payload(const sim::WorldState& world, const fsm::PipelineState& state,
                   const perception::TrackingObservation& observation,
                   const std::vector<std::string>& alerts) {
  const auto& r = world.robot;
  json robot = {{"base", pose_json(r.base)},
                {"face_angle", r.face_angle},
                {"lift", r.lift},
                {"arm_extension", r.arm_extension},
                {"wrist_angle", r.wrist_angle},
                {"gripper", r.gripper == sim::Gripper::Closed ? "closed" : "open"},
                {"grasped", r.grasped ? json(*r.grasped) : json(nullptr)}};
  json persons = json::array();
  for (const auto& p : world.persons) persons.push_back(pose_json(p.pose));
  json chairs = json::array();
  for (const auto& c : world.chairs) {
    chairs.push_back({{"id", c.id}, {"pose", pose_json(c.pose)}, {"radius", c.radius}});
  }
  return {{"type", "state"},
          {"time", world.time},
          {"robot", robot},
          {"wheelchair", pose_json(world.wheelchair.pose)},
          {"persons", persons},
          {"chairs", chairs},
          {"pipeline", pipeline_json(state)},
          {"observation",
           {{"deviation_px", observation.deviation_px},
            {"distance", observation.distance},
            {"in_frame", observation.in_frame},
            {"staleness", observation.staleness}}},
          {"alerts", alerts}};
}

}  // namespace chairside::remote
