#include "chairside/sim.hpp"

#include <algorithm>
#include <cmath>

namespace chairside::sim {

namespace {

double clamp_abs(double value, double cap) { return std::clamp(value, -cap, cap); }

// Moves `pos` along `path` starting after vertex `segment` by `travel` meters.
Vec2 advance_along(const std::vector<Vec2>& path, std::size_t& segment, Vec2 pos, double travel,
                   bool loop) {
  const std::size_t n = path.size();
  if (n < 2) return pos;
  int guard = 0;
  while (travel > 0.0 && guard++ < 1000) {
    std::size_t next = segment + 1;
    if (next >= n) {
      if (!loop) break;
      next = 0;
    }
    const Vec2 target = path[next];
    const double d = distance(pos, target);
    if (d <= travel) {
      pos = target;
      travel -= d;
      segment = next;
    } else {
      pos = pos + (travel / d) * (target - pos);
      travel = 0.0;
    }
  }
  return pos;
}

std::optional<double> segment_heading(const std::vector<Vec2>& path, std::size_t segment,
                                      Vec2 pos, bool loop) {
  const std::size_t n = path.size();
  if (n < 2) return std::nullopt;
  std::size_t next = segment + 1;
  if (next >= n) {
    if (!loop) return std::nullopt;
    next = 0;
  }
  const Vec2 d = path[next] - pos;
  if (d.norm() < 1e-12) return std::nullopt;
  return normalize_deg(rad2deg(std::atan2(d.y, d.x)));
}

double turn_toward(double current, double desired, double max_step) {
  const double err = wrap_deg(desired - current);
  return normalize_deg(current + std::clamp(err, -max_step, max_step));
}

void step_wheelchair(WorldState& world, double dt) {
  WheelchairAgent& wc = world.wheelchair;
  wc.blocked = std::any_of(world.chairs.begin(), world.chairs.end(),
                           [&](const Chair& c) { return chair_blocks_wheelchair(wc, c); });
  const double v = wc.blocked ? 0.0 : wc.speed_at(world.time);
  const Vec2 pos = advance_along(wc.path, wc.segment, wc.pose.position(), v * dt, false);
  wc.pose.x = pos.x;
  wc.pose.y = pos.y;
  if (auto h = segment_heading(wc.path, wc.segment, pos, false)) {
    wc.pose.theta = turn_toward(wc.pose.theta, *h, wc.turn_rate * dt);
  }
}

void step_person(PersonAgent& p, double dt) {
  const Vec2 pos = advance_along(p.path, p.segment, p.pose.position(), p.speed * dt, true);
  p.pose.x = pos.x;
  p.pose.y = pos.y;
  if (auto h = segment_heading(p.path, p.segment, pos, true)) p.pose.theta = *h;
}

}  // namespace

Vec2 RobotState::arm_tip() const {
  const Pose2 right_side{base.x, base.y, normalize_deg(base.theta - 90.0)};
  return from_frame(right_side, {reach_offset + arm_extension, 0.0});
}

double WheelchairAgent::speed_at(double time) const {
  double s = speed;
  if (variation.amplitude != 0.0 && variation.period > 0.0) {
    s *= 1.0 + variation.amplitude * std::sin(2.0 * kPi * time / variation.period + variation.phase);
  }
  return std::max(s, 0.0);
}

const Chair* WorldState::find_chair(int id) const {
  for (const auto& c : chairs) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

BaseCommand saturate(const BaseCommand& cmd, const RobotState& robot) {
  return {clamp_abs(cmd.v, robot.v_cap), clamp_abs(cmd.w, robot.w_cap),
          clamp_abs(cmd.face_rate, robot.face_rate_cap)};
}

void place_on_path(WheelchairAgent& wheelchair) {
  if (wheelchair.path.empty()) return;
  wheelchair.segment = 0;
  wheelchair.pose.x = wheelchair.path[0].x;
  wheelchair.pose.y = wheelchair.path[0].y;
  if (auto h = segment_heading(wheelchair.path, 0, wheelchair.path[0], false)) {
    wheelchair.pose.theta = *h;
  }
}

void place_on_path(PersonAgent& person) {
  if (person.path.empty()) return;
  person.segment = 0;
  person.pose.x = person.path[0].x;
  person.pose.y = person.path[0].y;
  if (auto h = segment_heading(person.path, 0, person.path[0], true)) person.pose.theta = *h;
}

bool chair_blocks_wheelchair(const WheelchairAgent& wheelchair, const Chair& chair) {
  const Vec2 local = to_frame(wheelchair.pose, chair.pose.position());
  const double front = wheelchair.footprint.length / 2.0;
  return local.x > 0.0 && local.x - chair.radius < front + wheelchair.stop_distance &&
         std::abs(local.y) < wheelchair.footprint.width / 2.0 + chair.radius;
}

void update_attachment(WorldState& world) {
  if (!world.attachment) return;
  const Attachment& a = *world.attachment;
  for (auto& chair : world.chairs) {
    if (chair.id != a.chair_id) continue;
    const Vec2 tip = world.robot.arm_tip();
    const Pose2 tip_frame{tip.x, tip.y, world.robot.base.theta};
    const Vec2 p = from_frame(tip_frame, a.offset);
    chair.pose = {p.x, p.y, normalize_deg(world.robot.base.theta + a.relative_theta)};
  }
}

WorldState step(WorldState world, const BaseCommand& cmd, double dt) {
  if (dt == 0.0) return world;
  const BaseCommand c = saturate(cmd, world.robot);

  RobotState& r = world.robot;
  r.base.theta = normalize_deg(r.base.theta + c.w * dt);
  const Vec2 h = r.base.heading();
  r.base.x += c.v * dt * h.x;
  r.base.y += c.v * dt * h.y;
  r.face_angle = normalize_deg(r.face_angle + c.face_rate * dt);
  update_attachment(world);

  step_wheelchair(world, dt);
  for (auto& p : world.persons) step_person(p, dt);

  world.step_count += 1;
  world.time = static_cast<double>(world.step_count) * dt;
  return world;
}

ManipulationResult apply_manipulation(WorldState world, const ManipulationAction& action) {
  ManipulationResult result;
  RobotState& r = world.robot;
  auto clamp_into = [&](double& value, double lo, double hi) {
    const double target = value + action.delta;
    value = std::clamp(target, lo, hi);
    result.clamped = value != target;
  };

  switch (action.kind) {
    case ManipulationKind::Lift:
      clamp_into(r.lift, kLiftMin, kLiftMax);
      break;
    case ManipulationKind::Extend:
      clamp_into(r.arm_extension, kExtensionMin, kExtensionMax);
      break;
    case ManipulationKind::Wrist:
      r.wrist_angle = normalize_deg(r.wrist_angle + action.delta);
      break;
    case ManipulationKind::Gripper:
      if (action.gripper == Gripper::Closed && r.gripper == Gripper::Open) {
        r.gripper = Gripper::Closed;
        const Vec2 tip = r.arm_tip();
        const Chair* best = nullptr;
        double best_gap = kGraspReach;
        for (const auto& chair : world.chairs) {
          const double gap = distance(tip, chair.pose.position()) - chair.radius;
          if (gap <= best_gap) {
            best_gap = gap;
            best = &chair;
          }
        }
        if (best != nullptr) {
          const Pose2 tip_frame{tip.x, tip.y, r.base.theta};
          world.attachment = Attachment{best->id, to_frame(tip_frame, best->pose.position()),
                                        wrap_deg(best->pose.theta - r.base.theta)};
          r.grasped = best->id;
          result.attached = best->id;
        }
      } else if (action.gripper == Gripper::Open && r.gripper == Gripper::Closed) {
        r.gripper = Gripper::Open;
        if (r.grasped) result.released = r.grasped;
        r.grasped.reset();
        world.attachment.reset();
      }
      break;
  }
  update_attachment(world);
  result.world = std::move(world);
  return result;
}

}  // namespace chairside::sim
