#pragma once

// Small closed-loop drivers shared by the unit and acceptance tests.

#include <cmath>
#include <optional>

#include "chairside/follow.hpp"
#include "chairside/mode_switch.hpp"
#include "chairside/perception.hpp"
#include "chairside/sim.hpp"

namespace loop {

using namespace chairside;

/// Stationary wheelchair at (1, 1) heading 30 degrees.
inline sim::WorldState parked_world() {
  sim::WorldState w;
  w.wheelchair.path = {{1.0, 1.0}, from_frame({1.0, 1.0, 30.0}, {10.0, 0.0})};
  w.wheelchair.speed = 0.0;
  sim::place_on_path(w.wheelchair);
  return w;
}

struct SwitchRun {
  switching::SwitchPlan plan;
  bool completed = false;
  double seconds = 0.0;
  double position_error = 0.0;
  double distance_error = 0.0;
  double orbit_error = 0.0;
  double base_error = 0.0;
  double face_error = 0.0;
};

/// Plans from `start` (wheelchair frame) and runs the executor on a parked
/// wheelchair until it reports completion or `limit` seconds pass.
inline SwitchRun run_switch(switching::FollowMode from, switching::FollowMode to, const Pose2& start,
                            double limit = 120.0) {
  const switching::SwitchGeometry g;
  sim::WorldState w = parked_world();
  w.robot.base = compose(w.wheelchair.pose, start);
  w.robot.face_angle = switching::switch_target(from).face_angle;

  SwitchRun out;
  out.plan = switching::plan_switch(start, from, to, g);
  switching::SwitchExecutor exec(out.plan, w.wheelchair.pose);
  const double dt = 0.05;
  while (w.time < limit) {
    const auto o = exec.update(w, dt);
    if (o.status == switching::ExecStatus::Complete) {
      out.completed = true;
      break;
    }
    if (o.status == switching::ExecStatus::Aborted) break;
    w = sim::step(w, o.cmd, dt);
  }
  out.seconds = w.time;

  const switching::SwitchTarget t = switching::switch_target(to);
  const Pose2 rel = relative_pose(w.wheelchair.pose, w.robot.base);
  const auto oc = switching::orbit_coords(g.footprint, rel.position());
  out.position_error = distance(rel.position(), switching::target_pose(to, g).position());
  out.distance_error = std::abs(oc.distance - t.distance);
  out.orbit_error = std::abs(wrap_deg(oc.orbit - t.orbit_angle));
  out.base_error = std::abs(wrap_deg(rel.theta - t.base_angle));
  out.face_error = std::abs(wrap_deg(w.robot.face_angle - t.face_angle));
  return out;
}

struct FollowTruth {
  double deviation_px = 0.0;
  double distance = 0.0;
};

/// Noise-free deviation and depth of the wheelchair user.
inline FollowTruth truth(const sim::WorldState& w, const perception::CameraModel& cam = {}) {
  const Pose2 cp = perception::camera_pose(w.robot);
  const double bearing = perception::image_bearing(cp, w.wheelchair.pose.position());
  return {bearing / cam.half_fov() * cam.image_width / 2.0,
          rect_standoff(w.wheelchair.footprint, to_frame(w.wheelchair.pose, cp.position()))};
}

struct ConvergenceRun {
  std::optional<double> settled_at;  // first time inside both deadbands for good
  bool stayed = false;
  double initial_deviation = 0.0;
  double initial_error = 0.0;
};

/// Behind-mode follow from a 0.5 m range error and a +100 px deviation.
/// Perception runs every `period` steps with the default detector noise.
inline ConvergenceRun run_convergence(double settle_limit = 15.0, double hold = 30.0, int period = 8,
                                      std::uint64_t seed = 1) {
  const follow::FollowParams fp;
  const perception::CameraModel cam;
  sim::WorldState w = parked_world();
  const Pose2 behind = switching::target_pose(switching::FollowMode::Behind);
  const double heading = 100.0 / 320.0 * cam.half_fov();
  w.robot.base = compose(w.wheelchair.pose, {behind.x - 0.5, behind.y, heading});

  ConvergenceRun out;
  const FollowTruth t0 = truth(w, cam);
  out.initial_deviation = t0.deviation_px;
  out.initial_error = t0.distance - fp.target_distance;

  perception::Tracker tracker(cam, std::nullopt, perception::DetectorNoise{});
  std::mt19937_64 rng(seed);
  sim::BaseCommand cmd;
  const double dt = 0.05;
  const double end = settle_limit + hold;
  std::optional<double> inside_since;
  for (long i = 0; w.time < end - 1e-9; ++i) {
    if (i % period == 0) {
      const auto obs = tracker.observe(w, rng);
      cmd = obs.in_frame ? follow::behind_control(obs, fp) : sim::BaseCommand{};
    }
    w = sim::step(w, cmd, dt);
    const FollowTruth t = truth(w, cam);
    const bool inside =
        std::abs(t.deviation_px) <= fp.dev_tol_px && std::abs(t.distance - fp.target_distance) <= fp.dist_tol;
    if (inside && !inside_since) inside_since = w.time;
    if (!inside) inside_since.reset();
  }
  if (inside_since && *inside_since <= settle_limit) {
    out.settled_at = inside_since;
    out.stayed = true;
  }
  return out;
}

}  // namespace loop
