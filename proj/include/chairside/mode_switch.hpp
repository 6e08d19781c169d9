#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "chairside/geometry.hpp"
#include "chairside/sim.hpp"

namespace chairside::switching {

enum class FollowMode { Behind, Left, Right };

std::string_view to_string(FollowMode mode);
std::optional<FollowMode> parse_follow_mode(std::string_view text);

/// Target geometry of a following mode. distance is the standoff from the
/// wheelchair footprint; orbit is measured CCW from the wheelchair heading;
/// base is robot heading minus wheelchair heading; face is the camera pan.
struct SwitchTarget {
  double distance = 0.0;
  double orbit_angle = 0.0;
  double base_angle = 0.0;
  double face_angle = 0.0;
  friend bool operator==(const SwitchTarget&, const SwitchTarget&) = default;
};

SwitchTarget switch_target(FollowMode mode);

struct SwitchGeometry {
  Rect footprint{1.2, 0.7};
  double midpoint_distance = 1.1;
  double left_midpoint_orbit = 135.0;
  double right_midpoint_orbit = 225.0;
};

/// Point on the ray at `orbit_deg` from the wheelchair center whose standoff
/// from the footprint equals `standoff`.
Vec2 orbit_point(const Rect& footprint, double standoff, double orbit_deg);

struct OrbitCoords {
  double distance = 0.0;  // standoff
  double orbit = 0.0;     // degrees in [0, 360)
};
OrbitCoords orbit_coords(const Rect& footprint, Vec2 local);

/// Robot pose (wheelchair frame) realizing a mode's target.
Pose2 target_pose(FollowMode mode, const SwitchGeometry& geometry = {});

struct Waypoint {
  Vec2 position;         // wheelchair frame at plan time
  double heading = 0.0;  // heading to hold while leaving this waypoint; final = target base angle
  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct SwitchPlan {
  FollowMode from = FollowMode::Behind;
  FollowMode to = FollowMode::Behind;
  std::vector<Waypoint> waypoints;
  double final_face_angle = 0.0;

  std::size_t segment_count() const { return waypoints.empty() ? 0 : waypoints.size() - 1; }
  bool empty() const { return waypoints.empty(); }
};

/// Two-segment trajectories through a rear-diagonal midpoint. Left<->Right is
/// composed through the Behind target. Throws std::invalid_argument for a
/// non-finite start pose.
SwitchPlan plan_switch(const Pose2& rel_pose, FollowMode from, FollowMode to,
                       const SwitchGeometry& geometry = {});

/// Samples every segment at <= 1 cm spacing against the footprint inflated by
/// the robot radius.
bool check_collision(const SwitchPlan& plan, const Rect& footprint, double robot_radius);

struct ExecutorParams {
  double speed = 0.2;
  double abort_displacement = 0.3;
  double waypoint_tolerance = 1e-3;
  double heading_tolerance = 0.5;  // deg, rotate-in-place until within
  double final_tolerance = 0.01;   // deg, base/face alignment
};

enum class ExecStatus { Running, Complete, Aborted };

struct ExecOutput {
  sim::BaseCommand cmd;
  ExecStatus status = ExecStatus::Running;
  double displacement = 0.0;
};

/// Rotate-to-face-then-drive tracking of a plan, re-expressed in the world
/// frame through the plan-time wheelchair snapshot.
class SwitchExecutor {
 public:
  SwitchExecutor(SwitchPlan plan, const Pose2& wheelchair_snapshot, ExecutorParams params = {});

  ExecOutput update(const sim::WorldState& world, double dt);

  const SwitchPlan& plan() const { return plan_; }
  const Pose2& snapshot() const { return snapshot_; }
  std::size_t next_waypoint() const { return next_; }

 private:
  SwitchPlan plan_;
  Pose2 snapshot_;
  ExecutorParams params_;
  std::size_t next_ = 1;
  bool aligning_ = false;
};

}  // namespace chairside::switching
