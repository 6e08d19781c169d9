#include "chairside/mode_switch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace chairside::switching {

namespace {

double heading_between(Vec2 a, Vec2 b, double fallback) {
  const Vec2 d = b - a;
  if (d.norm() < 1e-12) return fallback;
  return normalize_deg(rad2deg(std::atan2(d.y, d.x)));
}

FollowMode side_mode(FollowMode from, FollowMode to) {
  return from == FollowMode::Behind ? to : from;
}

// start -> midpoint -> target, with one side being Behind.
SwitchPlan elementary_plan(const Pose2& start, FollowMode from, FollowMode to,
                           const SwitchGeometry& g) {
  const FollowMode side = side_mode(from, to);
  const double mid_orbit =
      side == FollowMode::Left ? g.left_midpoint_orbit : g.right_midpoint_orbit;
  const std::vector<Vec2> points{start.position(),
                                 orbit_point(g.footprint, g.midpoint_distance, mid_orbit),
                                 target_pose(to, g).position()};
  SwitchPlan plan{from, to, {}, switch_target(to).face_angle};
  double previous = start.theta;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    previous = heading_between(points[i], points[i + 1], previous);
    plan.waypoints.push_back({points[i], previous});
  }
  plan.waypoints.push_back({points.back(), normalize_deg(switch_target(to).base_angle)});
  return plan;
}

double clamp_abs(double value, double cap) { return std::clamp(value, -cap, cap); }

}  // namespace

std::string_view to_string(FollowMode mode) {
  switch (mode) {
    case FollowMode::Behind:
      return "behind";
    case FollowMode::Left:
      return "left";
    case FollowMode::Right:
      return "right";
  }
  return "behind";
}

std::optional<FollowMode> parse_follow_mode(std::string_view text) {
  if (text == "behind") return FollowMode::Behind;
  if (text == "left") return FollowMode::Left;
  if (text == "right") return FollowMode::Right;
  return std::nullopt;
}

SwitchTarget switch_target(FollowMode mode) {
  switch (mode) {
    case FollowMode::Left:
      return {0.5, 90.0, 0.0, 270.0};
    case FollowMode::Behind:
      return {1.2, 180.0, 0.0, 0.0};
    case FollowMode::Right:
      return {0.5, 270.0, 0.0, 90.0};
  }
  return {};
}

Vec2 orbit_point(const Rect& footprint, double standoff, double orbit_deg) {
  const Vec2 u = unit_from_deg(orbit_deg);
  double lo = 0.0;
  double hi = std::max(footprint.length, footprint.width) + std::max(standoff, 0.0) + 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (rect_standoff(footprint, mid * u) < standoff) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi * u;
}

OrbitCoords orbit_coords(const Rect& footprint, Vec2 local) {
  return {rect_standoff(footprint, local), normalize_deg(rad2deg(std::atan2(local.y, local.x)))};
}

Pose2 target_pose(FollowMode mode, const SwitchGeometry& geometry) {
  const SwitchTarget t = switch_target(mode);
  const Vec2 p = orbit_point(geometry.footprint, t.distance, t.orbit_angle);
  return {p.x, p.y, normalize_deg(t.base_angle)};
}

SwitchPlan plan_switch(const Pose2& rel_pose, FollowMode from, FollowMode to,
                       const SwitchGeometry& geometry) {
  if (!std::isfinite(rel_pose.x) || !std::isfinite(rel_pose.y) ||
      !std::isfinite(rel_pose.theta)) {
    throw std::invalid_argument("plan_switch: non-finite start pose");
  }
  if (from == to) return {from, to, {}, switch_target(to).face_angle};
  if (from != FollowMode::Behind && to != FollowMode::Behind) {
    SwitchPlan first = elementary_plan(rel_pose, from, FollowMode::Behind, geometry);
    const SwitchPlan second =
        elementary_plan(target_pose(FollowMode::Behind, geometry), FollowMode::Behind, to, geometry);
    first.waypoints.pop_back();
    first.waypoints.insert(first.waypoints.end(), second.waypoints.begin(), second.waypoints.end());
    first.to = to;
    first.final_face_angle = second.final_face_angle;
    return first;
  }
  return elementary_plan(rel_pose, from, to, geometry);
}

bool check_collision(const SwitchPlan& plan, const Rect& footprint, double robot_radius) {
  constexpr double kSpacing = 0.01;
  for (std::size_t i = 0; i + 1 < plan.waypoints.size(); ++i) {
    const Vec2 a = plan.waypoints[i].position;
    const Vec2 b = plan.waypoints[i + 1].position;
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(distance(a, b) / kSpacing)));
    for (std::size_t k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n);
      if (rect_standoff(footprint, a + t * (b - a)) <= robot_radius) return true;
    }
  }
  return false;
}

SwitchExecutor::SwitchExecutor(SwitchPlan plan, const Pose2& wheelchair_snapshot,
                               ExecutorParams params)
    : plan_(std::move(plan)), snapshot_(wheelchair_snapshot), params_(params) {}

ExecOutput SwitchExecutor::update(const sim::WorldState& world, double dt) {
  const double displacement = distance(world.wheelchair.pose.position(), snapshot_.position());
  if (displacement > params_.abort_displacement) {
    return {{}, ExecStatus::Aborted, displacement};
  }
  if (plan_.empty() || dt <= 0.0) return {{}, ExecStatus::Complete, displacement};

  const sim::RobotState& robot = world.robot;
  while (!aligning_ && next_ < plan_.waypoints.size()) {
    const Vec2 target = from_frame(snapshot_, plan_.waypoints[next_].position);
    const Vec2 d = target - robot.base.position();
    const double dist = d.norm();
    if (dist <= params_.waypoint_tolerance) {
      ++next_;
      continue;
    }
    const double err = wrap_deg(rad2deg(std::atan2(d.y, d.x)) - robot.base.theta);
    const double w = clamp_abs(err / dt, robot.w_cap);
    if (std::abs(err) > params_.heading_tolerance) return {{0.0, w, 0.0}, ExecStatus::Running, displacement};
    return {{std::min(params_.speed, dist / dt), w, 0.0}, ExecStatus::Running, displacement};
  }
  aligning_ = true;

  const double base_err =
      wrap_deg(snapshot_.theta + plan_.waypoints.back().heading - robot.base.theta);
  const double face_err = wrap_deg(plan_.final_face_angle - robot.face_angle);
  if (std::abs(base_err) <= params_.final_tolerance && std::abs(face_err) <= params_.final_tolerance) {
    return {{}, ExecStatus::Complete, displacement};
  }
  return {{0.0, clamp_abs(base_err / dt, robot.w_cap), clamp_abs(face_err / dt, robot.face_rate_cap)},
          ExecStatus::Running,
          displacement};
}

}  // namespace chairside::switching
