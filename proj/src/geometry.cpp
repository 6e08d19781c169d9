#include "chairside/geometry.hpp"

#include <algorithm>
#include <limits>

namespace chairside {

double normalize_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value rounds back up to exactly 360.
  if (r >= 360.0) r = 0.0;
  return r;
}

double wrap_deg(double deg) {
  double r = normalize_deg(deg);
  return r > 180.0 ? r - 360.0 : r;
}

Vec2 to_frame(const Pose2& frame, Vec2 world) {
  const double c = std::cos(deg2rad(frame.theta));
  const double s = std::sin(deg2rad(frame.theta));
  const Vec2 d = world - frame.position();
  return {c * d.x + s * d.y, -s * d.x + c * d.y};
}

Vec2 from_frame(const Pose2& frame, Vec2 local) {
  const double c = std::cos(deg2rad(frame.theta));
  const double s = std::sin(deg2rad(frame.theta));
  return {frame.x + c * local.x - s * local.y, frame.y + s * local.x + c * local.y};
}

Pose2 relative_pose(const Pose2& frame, const Pose2& pose) {
  const Vec2 p = to_frame(frame, pose.position());
  return {p.x, p.y, normalize_deg(pose.theta - frame.theta)};
}

Pose2 compose(const Pose2& frame, const Pose2& local) {
  const Vec2 p = from_frame(frame, local.position());
  return {p.x, p.y, normalize_deg(frame.theta + local.theta)};
}

double rect_standoff(const Rect& rect, Vec2 local) {
  const double dx = std::max(std::abs(local.x) - rect.length / 2.0, 0.0);
  const double dy = std::max(std::abs(local.y) - rect.width / 2.0, 0.0);
  return std::hypot(dx, dy);
}

double distance_to_polyline(std::span<const Vec2> polyline, Vec2 p) {
  if (polyline.empty()) return std::numeric_limits<double>::infinity();
  if (polyline.size() == 1) return distance(polyline.front(), p);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Vec2 a = polyline[i];
    const Vec2 ab = polyline[i + 1] - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, distance(a + t * ab, p));
  }
  return best;
}

}  // namespace chairside
