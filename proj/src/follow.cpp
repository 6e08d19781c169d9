#include "chairside/follow.hpp"

#include <algorithm>
#include <cmath>

namespace chairside::follow {

namespace {

double clamp_abs(double value, double cap) { return std::clamp(value, -cap, cap); }

}  // namespace

sim::BaseCommand behind_control(const perception::TrackingObservation& obs,
                                const FollowParams& params) {
  if (!obs.in_frame) return {};
  sim::BaseCommand cmd;
  const double range_error = obs.distance - params.target_distance;
  if (std::abs(range_error) > params.dist_tol) {
    cmd.v = clamp_abs(params.k_v * range_error, params.v_cap);
  }
  if (std::abs(obs.deviation_px) > params.dev_tol_px) {
    cmd.w = clamp_abs(-params.k_w * obs.deviation_px, params.w_cap);
  }
  if (std::abs(obs.deviation_px) > 2.0 * params.dev_tol_px) {
    cmd.face_rate = obs.deviation_px > 0.0 ? -params.face_nudge_rate : params.face_nudge_rate;
  }
  return cmd;
}

sim::BaseCommand accompany_control(const perception::TrackingObservation& obs, Side side,
                                   const FollowParams& params) {
  if (!obs.in_frame) return {};
  sim::BaseCommand cmd;
  if (std::abs(obs.deviation_px) > params.dev_tol_px) {
    const double sign = side == Side::Right ? 1.0 : -1.0;
    cmd.v = clamp_abs(sign * params.k_along * obs.deviation_px, params.v_cap);
  }
  return cmd;
}

sim::BaseCommand lost_target(const LostState& state, const FollowParams& params) {
  if (params.lost_policy == LostPolicy::HoldLast && state.stale_seconds <= params.hold_limit) {
    return state.last_command;
  }
  return {};
}

double pan_toward(double face_angle, double target, double rate_cap, double dt) {
  if (dt <= 0.0) return 0.0;
  const double err = wrap_deg(target - face_angle);
  return clamp_abs(err / dt, rate_cap);
}

}  // namespace chairside::follow
