#include <random>

#include "closed_loop.hpp"
#include "doctest.h"

#include "chairside/follow.hpp"

using namespace chairside;
using namespace chairside::follow;

namespace {

perception::TrackingObservation seen(double deviation, double distance) {
  perception::TrackingObservation o;
  o.deviation_px = deviation;
  o.distance = distance;
  o.in_frame = true;
  return o;
}

}  // namespace

TEST_SUITE("follow") {
  TEST_CASE("behind: deadband gives exactly zero") {
    const FollowParams p;
    CHECK(behind_control(seen(0.0, 1.2), p).is_zero());
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> dev(-p.dev_tol_px, p.dev_tol_px);
    std::uniform_real_distribution<double> dist(1.2 - p.dist_tol, 1.2 + p.dist_tol);
    for (int i = 0; i < 1000; ++i) CHECK(behind_control(seen(dev(rng), dist(rng)), p).is_zero());
  }

  TEST_CASE("behind: target right of center turns clockwise") {
    const auto cmd = behind_control(seen(80.0, 1.2), FollowParams{});
    CHECK(cmd.w < 0.0);
    CHECK(cmd.v == 0.0);
    CHECK(behind_control(seen(-80.0, 1.2), FollowParams{}).w > 0.0);
  }

  TEST_CASE("behind: far target drives forward, near target backs off") {
    CHECK(behind_control(seen(0.0, 2.0), FollowParams{}).v > 0.0);
    CHECK(behind_control(seen(0.0, 0.6), FollowParams{}).v < 0.0);
    CHECK(behind_control(seen(0.0, 1.5), FollowParams{}).v == doctest::Approx(0.8 * 0.3));
  }

  TEST_CASE("behind: large deviation pans the camera toward the target") {
    const FollowParams p;
    CHECK(behind_control(seen(2.0 * p.dev_tol_px + 1.0, 1.2), p).face_rate == -p.face_nudge_rate);
    CHECK(behind_control(seen(-2.0 * p.dev_tol_px - 1.0, 1.2), p).face_rate == p.face_nudge_rate);
    CHECK(behind_control(seen(2.0 * p.dev_tol_px, 1.2), p).face_rate == 0.0);
  }

  TEST_CASE("accompany: deadband and along-track signs") {
    const FollowParams p;
    CHECK(accompany_control(seen(0.0, 0.5), Side::Left, p).is_zero());
    CHECK(accompany_control(seen(0.0, 0.5), Side::Right, p).is_zero());
    // Left mode looks out of the base's right side: image right is behind.
    CHECK(accompany_control(seen(120.0, 0.5), Side::Left, p).v < 0.0);
    CHECK(accompany_control(seen(-120.0, 0.5), Side::Left, p).v > 0.0);
    CHECK(accompany_control(seen(120.0, 0.5), Side::Right, p).v > 0.0);
    CHECK(accompany_control(seen(-120.0, 0.5), Side::Right, p).v < 0.0);
    CHECK(accompany_control(seen(120.0, 0.5), Side::Left, p).w == 0.0);
  }

  TEST_CASE("accompany: user behind the robot in the image means backward") {
    // Left mode: robot beside the user with the camera panned to 270. The
    // user falling back along the travel direction is a backward request.
    sim::WorldState w = loop::parked_world();
    const Pose2 left = switching::target_pose(switching::FollowMode::Left);
    w.robot.base = compose(w.wheelchair.pose, {left.x + 0.3, left.y, 0.0});
    w.robot.face_angle = 270.0;
    const auto t = loop::truth(w);
    CHECK(accompany_control(seen(t.deviation_px, t.distance), Side::Left, FollowParams{}).v < 0.0);
    w.robot.base = compose(w.wheelchair.pose, {left.x - 0.3, left.y, 0.0});
    const auto t2 = loop::truth(w);
    CHECK(accompany_control(seen(t2.deviation_px, t2.distance), Side::Left, FollowParams{}).v > 0.0);
  }

  TEST_CASE("commands respect the caps") {
    const FollowParams p;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> dev(-320.0, 320.0);
    std::uniform_real_distribution<double> dist(0.01, 12.0);
    for (int i = 0; i < 2000; ++i) {
      const auto o = seen(dev(rng), dist(rng));
      for (const auto& c : {behind_control(o, p), accompany_control(o, Side::Left, p),
                            accompany_control(o, Side::Right, p)}) {
        CHECK(std::abs(c.v) <= p.v_cap);
        CHECK(std::abs(c.w) <= p.w_cap);
      }
    }
  }

  TEST_CASE("lost target policies") {
    FollowParams p;
    LostState s{{0.2, 0.0, 0.0}, 0.5, 1};
    CHECK(lost_target(s, p).is_zero());
    p.lost_policy = LostPolicy::HoldLast;
    CHECK(lost_target(s, p).v == 0.2);
    s.stale_seconds = 1.2;
    CHECK(lost_target(s, p).is_zero());
    CHECK_FALSE(follow_failed(2, p));
    CHECK(follow_failed(3, p));
    perception::TrackingObservation gone;
    CHECK(behind_control(gone, p).is_zero());
  }

  TEST_CASE("pan_toward reaches the target without overshoot") {
    double face = 10.0;
    for (int i = 0; i < 200; ++i) {
      const double r = pan_toward(face, 270.0, 90.0, 0.05);
      CHECK(std::abs(r) <= 90.0);
      face = normalize_deg(face + r * 0.05);
    }
    CHECK(face == doctest::Approx(270.0));
  }

  TEST_CASE("behind rotation reduces the deviation of a parked user") {
    const FollowParams p;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> heading(-28.0, 28.0);
    std::uniform_real_distribution<double> range(-0.6, 0.6);
    const Pose2 behind = switching::target_pose(switching::FollowMode::Behind);
    for (int i = 0; i < 500; ++i) {
      sim::WorldState w = loop::parked_world();
      w.robot.base = compose(w.wheelchair.pose, {behind.x + range(rng), behind.y, heading(rng)});
      const auto before = loop::truth(w);
      const auto cmd = behind_control(seen(before.deviation_px, before.distance), p);
      if (cmd.w == 0.0) continue;
      for (int k = 0; k < 8; ++k) w = sim::step(w, cmd, 0.05);
      CHECK(std::abs(loop::truth(w).deviation_px) < std::abs(before.deviation_px));
    }
  }

  TEST_CASE("convergence from 0.5 m and 100 px") {
    const auto r = loop::run_convergence();
    CHECK(r.initial_deviation == doctest::Approx(100.0).epsilon(0.02));
    CHECK(r.initial_error == doctest::Approx(0.5).epsilon(1e-6));
    REQUIRE(r.settled_at);
    CHECK(*r.settled_at <= 15.0);
    CHECK(r.stayed);
  }
}
