#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "chairside/fsm.hpp"
#include "chairside/perception.hpp"
#include "chairside/sim.hpp"

namespace chairside::remote {

inline constexpr int kProtocolVersion = 1;

enum class MessageKind { State, Command, Control, Ack, Error };

std::string_view to_string(MessageKind kind);
std::optional<MessageKind> parse_kind(std::string_view text);

struct Message {
  MessageKind kind = MessageKind::State;
  std::int64_t seq = 0;
  std::string session;
  nlohmann::json payload = nlohmann::json::object();
  int protocol_version = kProtocolVersion;

  friend bool operator==(const Message&, const Message&) = default;
};

/// Decode failure; field() names the offending envelope or payload field.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Compact JSON with sorted keys followed by a single '\n'.
std::string encode(const Message& message);

/// Parses one complete document (a trailing newline is allowed).
Message decode(std::string_view line);

enum class Tab { Base, ArmLow, ArmHigh, Gripper, Camera };

std::string_view to_string(Tab tab);
std::optional<Tab> parse_tab(std::string_view text);

struct Click {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const Click&, const Click&) = default;
};

/// Typed operator action. Base magnitudes are fractions of the speed caps in
/// [-1, 1]; arm deltas are meters; wrist and camera deltas are degrees.
struct OperatorCommand {
  Tab tab = Tab::Base;
  std::string action;
  double magnitude = 0.0;
  std::optional<Click> click;
  friend bool operator==(const OperatorCommand&, const OperatorCommand&) = default;
};

struct TabCaps {
  double base = 1.0;
  double arm_delta = 0.2;      // m
  double wrist_delta = 45.0;   // deg
  double camera_delta = 45.0;  // deg
};

/// Validates the tab/action pair. Throws ProtocolError naming the field.
OperatorCommand parse_operator_command(const nlohmann::json& payload);
nlohmann::json to_json(const OperatorCommand& command);

inline constexpr double kBasePulseSeconds = 0.5;

struct BasePulse {
  sim::BaseCommand command;
  double duration = kBasePulseSeconds;
};

struct CommandOutcome {
  bool accepted = false;
  std::string error;  // set when !accepted
  bool clamped = false;
  std::optional<BasePulse> pulse;
  /// The exact world edit applied (after clamping), for replay.
  std::optional<sim::ManipulationAction> manipulation;
  std::optional<double> pan_delta;
  std::optional<int> attached;
  std::optional<int> released;
};

/// Applies a typed operator command. Only legal in RemoteAssist; otherwise the
/// world is left untouched and the outcome carries "not in remote mode".
CommandOutcome apply_operator_command(const OperatorCommand& command, sim::WorldState& world,
                                      const fsm::PipelineState& state, const TabCaps& caps = {});

/// Snapshot broadcast to operators.
nlohmann::json state_payload(const sim::WorldState& world, const fsm::PipelineState& state,
                             const perception::TrackingObservation& observation,
                             const std::vector<std::string>& alerts);

}  // namespace chairside::remote
