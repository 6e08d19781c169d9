#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "chairside/geometry.hpp"

namespace chairside::sim {

inline constexpr double kLiftMin = 0.0;
inline constexpr double kLiftMax = 1.1;
inline constexpr double kExtensionMin = 0.0;
inline constexpr double kExtensionMax = 0.5;
/// Arm tip must be this close to a chair's edge for a grasp to attach.
inline constexpr double kGraspReach = 0.1;

enum class Gripper { Open, Closed };

struct RobotState {
  Pose2 base;
  double face_angle = 0.0;  // camera pan, degrees CCW from base heading
  double lift = 0.5;
  double arm_extension = 0.0;
  double wrist_angle = 0.0;
  Gripper gripper = Gripper::Open;
  std::optional<int> grasped;  // chair id
  double v_cap = 0.3;           // m/s
  double w_cap = 60.0;          // deg/s
  double face_rate_cap = 90.0;  // deg/s
  double radius = 0.17;
  /// Distance from base center to the arm root along the base's right side.
  double reach_offset = 0.25;

  /// The arm reaches out of the right side of the base.
  Vec2 arm_tip() const;
};

/// Sinusoidal speed modulation of a scripted wheelchair: the instantaneous
/// speed is nominal * (1 + amplitude * sin(2 pi t / period + phase)).
struct SpeedVariation {
  double amplitude = 0.0;
  double period = 10.0;
  double phase = 0.0;  // radians
};

struct WheelchairAgent {
  Pose2 pose;
  double speed = 0.0;  // nominal, m/s
  std::vector<Vec2> path;
  double seated_height = 1.3;
  double radius = 0.35;
  Rect footprint{1.2, 0.7};
  /// Visual half-width of the seated user as seen by the camera.
  double body_radius = 0.22;
  SpeedVariation variation;
  double turn_rate = 30.0;     // deg/s
  double stop_distance = 0.5;  // halts for a chair this close ahead of the footprint
  std::size_t segment = 0;     // path vertex most recently passed
  bool blocked = false;

  double speed_at(double time) const;
};

struct PersonAgent {
  Pose2 pose;
  double speed = 0.0;
  double standing_height = 1.7;
  double radius = 0.2;
  std::vector<Vec2> path;  // walked as a closed loop
  std::size_t segment = 0;
};

struct Chair {
  int id = 0;
  Pose2 pose;
  double radius = 0.25;
};

/// Rigid grasp of a chair, stored in the arm-tip frame (tip position, base
/// heading).
struct Attachment {
  int chair_id = 0;
  Vec2 offset;
  double relative_theta = 0.0;
};

struct WorldState {
  std::int64_t step_count = 0;
  double dt = 0.05;
  double time = 0.0;  // always step_count * dt
  RobotState robot;
  WheelchairAgent wheelchair;
  std::vector<PersonAgent> persons;
  std::vector<Chair> chairs;
  std::optional<Attachment> attachment;
  std::uint64_t rng_seed = 0;

  const Chair* find_chair(int id) const;
};

inline constexpr int kWheelchairId = 0;
inline int person_id(std::size_t index) { return static_cast<int>(index) + 1; }

struct BaseCommand {
  double v = 0.0;          // m/s, forward positive
  double w = 0.0;          // deg/s, CCW positive
  double face_rate = 0.0;  // deg/s camera pan
  friend bool operator==(const BaseCommand&, const BaseCommand&) = default;
  bool is_zero() const { return v == 0.0 && w == 0.0 && face_rate == 0.0; }
};

BaseCommand saturate(const BaseCommand& cmd, const RobotState& robot);

/// Heads the wheelchair along its first path segment from path[0].
void place_on_path(WheelchairAgent& wheelchair);
void place_on_path(PersonAgent& person);

/// Advances the world one fixed step. The robot rotates by w*dt first and then
/// translates v*dt along the new heading. dt == 0 returns the input unchanged.
WorldState step(WorldState world, const BaseCommand& cmd, double dt);

enum class ManipulationKind { Lift, Extend, Wrist, Gripper };

struct ManipulationAction {
  ManipulationKind kind = ManipulationKind::Lift;
  double delta = 0.0;               // meters for lift/extend, degrees for wrist
  Gripper gripper = Gripper::Open;  // target state for Gripper actions
};

struct ManipulationResult {
  WorldState world;
  bool clamped = false;
  std::optional<int> attached;
  std::optional<int> released;
};

ManipulationResult apply_manipulation(WorldState world, const ManipulationAction& action);

/// Re-seats a grasped chair at its fixed offset from the arm tip.
void update_attachment(WorldState& world);

/// True if a chair sits in the wheelchair's travel corridor within
/// stop_distance ahead of its footprint.
bool chair_blocks_wheelchair(const WheelchairAgent& wheelchair, const Chair& chair);

}  // namespace chairside::sim
