#pragma once

#include "chairside/perception.hpp"
#include "chairside/sim.hpp"

namespace chairside::follow {

enum class LostPolicy { Stop, HoldLast };

enum class Side { Left, Right };

struct FollowParams {
  double target_distance = 1.2;
  double dist_tol = 0.15;
  double dev_tol_px = 30.0;
  double k_v = 0.8;       // (m/s) per m
  double k_w = 0.15;      // (deg/s) per px
  double k_along = 0.002; // (m/s) per px
  LostPolicy lost_policy = LostPolicy::Stop;
  double face_nudge_rate = 10.0;  // deg/s
  double hold_limit = 1.0;        // s, hold_last horizon
  int fail_staleness = 3;         // perception ticks
  double v_cap = 0.3;
  double w_cap = 60.0;
};

/// Range from the depth reading, rotation from image deviation. Positive
/// deviation (target right of center) turns the base clockwise. Large
/// deviations also pan the camera toward the target.
sim::BaseCommand behind_control(const perception::TrackingObservation& obs,
                                const FollowParams& params);

/// Along-track correction only; the base heading is held. In left mode the
/// camera looks out of the base's right side, so image-right is behind the
/// robot; in right mode image-right is ahead.
sim::BaseCommand accompany_control(const perception::TrackingObservation& obs, Side side,
                                   const FollowParams& params);

struct LostState {
  sim::BaseCommand last_command;
  double stale_seconds = 0.0;
  int staleness = 0;
};

sim::BaseCommand lost_target(const LostState& state, const FollowParams& params);

/// A follow attempt counts as failed once the target has been missing for
/// fail_staleness perception ticks.
inline bool follow_failed(int staleness, const FollowParams& params) {
  return staleness >= params.fail_staleness;
}

/// Camera pan rate that drives face_angle onto `target` without overshoot.
double pan_toward(double face_angle, double target, double rate_cap, double dt);

}  // namespace chairside::follow
