#include "chairside/fsm.hpp"

#include <optional>

namespace chairside::fsm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::optional<FollowMode> movement_target(Keyword k) {
  switch (k) {
    case Keyword::GoLeft:
      return FollowMode::Left;
    case Keyword::GoRight:
      return FollowMode::Right;
    case Keyword::GoBack:
      return FollowMode::Behind;
    default:
      return std::nullopt;
  }
}

// Shared by Following and Switching: escalation keywords preempt autonomy.
std::optional<Transition> escalate(const Event& event) {
  if (event.kind != EventKind::Keyword) return std::nullopt;
  if (event.keyword == Keyword::RemoteControl) return Transition{Teleop{}, Action::EnterTeleop};
  if (event.keyword == Keyword::Help) return Transition{RemoteAssist{}, Action::EnterRemote};
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Keyword keyword) {
  switch (keyword) {
    case Keyword::GoLeft:
      return "go_left";
    case Keyword::GoRight:
      return "go_right";
    case Keyword::GoBack:
      return "go_back";
    case Keyword::RemoteControl:
      return "remote_control";
    case Keyword::Help:
      return "help";
  }
  return "unknown";
}

Transition transition(const PipelineState& state, const Event& event, int max_replans) {
  return std::visit(
      Overloaded{
          [&](const Following& s) -> Transition {
            if (auto t = escalate(event)) return *t;
            if (event.kind == EventKind::Keyword) {
              if (auto target = movement_target(event.keyword); target && *target != s.mode) {
                return {Switching{s.mode, *target, 0}, Action::StartSwitch};
              }
            }
            return {s, Action::None};
          },
          [&](const Switching& s) -> Transition {
            if (auto t = escalate(event)) return *t;
            if (event.kind == EventKind::SwitchComplete) {
              return {Following{s.to}, Action::FinishSwitch};
            }
            if (event.kind == EventKind::SwitchAborted) {
              if (s.replans >= max_replans) return {Following{s.from}, Action::AbandonSwitch};
              return {Switching{s.from, s.to, s.replans + 1}, Action::Replan};
            }
            return {s, Action::None};
          },
          [&](const Teleop& s) -> Transition {
            if (event.kind == EventKind::TeleopExit) {
              return {Following{FollowMode::Behind}, Action::ResumeFollowing};
            }
            if (event.kind == EventKind::Keyword && event.keyword == Keyword::Help) {
              return {RemoteAssist{}, Action::EnterRemote};
            }
            return {s, Action::None};
          },
          [&](const RemoteAssist& s) -> Transition {
            if (event.kind == EventKind::RemoteRelease) {
              return {Following{FollowMode::Behind}, Action::ResumeFollowing};
            }
            return {s, Action::None};
          },
      },
      state);
}

std::string to_string(const PipelineState& state) {
  return std::visit(
      Overloaded{
          [](const Following& s) {
            return "following(" + std::string(switching::to_string(s.mode)) + ")";
          },
          [](const Switching& s) {
            return "switching(" + std::string(switching::to_string(s.from)) + "->" +
                   std::string(switching::to_string(s.to)) + ")";
          },
          [](const Teleop&) { return std::string("teleop"); },
          [](const RemoteAssist&) { return std::string("remote_assist"); },
      },
      state);
}

std::string to_string(const Event& event) {
  switch (event.kind) {
    case EventKind::Keyword:
      return "keyword:" + std::string(to_string(event.keyword));
    case EventKind::SwitchComplete:
      return "switch_complete";
    case EventKind::SwitchAborted:
      return "switch_aborted";
    case EventKind::TeleopExit:
      return "teleop_exit";
    case EventKind::RemoteRelease:
      return "remote_release";
  }
  return "unknown";
}

std::string_view to_string(Action action) {
  switch (action) {
    case Action::None:
      return "none";
    case Action::StartSwitch:
      return "start_switch";
    case Action::Replan:
      return "replan";
    case Action::AbandonSwitch:
      return "abandon_switch";
    case Action::FinishSwitch:
      return "finish_switch";
    case Action::EnterTeleop:
      return "enter_teleop";
    case Action::EnterRemote:
      return "enter_remote";
    case Action::ResumeFollowing:
      return "resume_following";
  }
  return "none";
}

bool is_following(const PipelineState& state) { return std::holds_alternative<Following>(state); }

}  // namespace chairside::fsm
