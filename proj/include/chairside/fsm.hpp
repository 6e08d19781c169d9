#pragma once

#include <array>
#include <string>
#include <string_view>
#include <variant>

#include "chairside/mode_switch.hpp"

namespace chairside::fsm {

using switching::FollowMode;

enum class Keyword { GoLeft, GoRight, GoBack, RemoteControl, Help };

inline constexpr std::array kAllKeywords{Keyword::GoLeft, Keyword::GoRight, Keyword::GoBack,
                                         Keyword::RemoteControl, Keyword::Help};

std::string_view to_string(Keyword keyword);

struct Following {
  FollowMode mode = FollowMode::Behind;
  friend bool operator==(const Following&, const Following&) = default;
};
struct Switching {
  FollowMode from = FollowMode::Behind;
  FollowMode to = FollowMode::Behind;
  int replans = 0;  // consecutive aborts so far
  friend bool operator==(const Switching&, const Switching&) = default;
};
struct Teleop {
  friend bool operator==(const Teleop&, const Teleop&) = default;
};
struct RemoteAssist {
  friend bool operator==(const RemoteAssist&, const RemoteAssist&) = default;
};

using PipelineState = std::variant<Following, Switching, Teleop, RemoteAssist>;

inline PipelineState initial_state() { return Following{FollowMode::Behind}; }

enum class EventKind { Keyword, SwitchComplete, SwitchAborted, TeleopExit, RemoteRelease };

struct Event {
  EventKind kind = EventKind::SwitchComplete;
  Keyword keyword = Keyword::GoBack;  // meaningful for EventKind::Keyword
  double displacement = 0.0;          // meaningful for EventKind::SwitchAborted

  static Event spoken(Keyword k) { return {EventKind::Keyword, k, 0.0}; }
  static Event switch_complete() { return {EventKind::SwitchComplete}; }
  static Event switch_aborted(double d) { return {EventKind::SwitchAborted, Keyword::GoBack, d}; }
  static Event teleop_exit() { return {EventKind::TeleopExit}; }
  static Event remote_release() { return {EventKind::RemoteRelease}; }
};

enum class Action {
  None,
  StartSwitch,      // plan and execute Switching.from -> Switching.to
  Replan,           // re-plan the active switch from the current pose
  AbandonSwitch,    // too many aborts: back to Following(from), warning raised
  FinishSwitch,     // switch executor done
  EnterTeleop,      // cancel any switch, halt, hand control to the local user
  EnterRemote,      // cancel any switch, halt, hand control to the caregiver
  ResumeFollowing,  // leave Teleop / RemoteAssist
};

struct Transition {
  PipelineState next;
  Action action = Action::None;
};

inline constexpr int kMaxReplans = 3;

/// Total over every (state, event) pair; unlisted pairs keep the state.
Transition transition(const PipelineState& state, const Event& event, int max_replans = kMaxReplans);

std::string to_string(const PipelineState& state);
std::string to_string(const Event& event);
std::string_view to_string(Action action);

bool is_following(const PipelineState& state);

}  // namespace chairside::fsm
