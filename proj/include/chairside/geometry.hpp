#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace chairside {

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Maps any angle in degrees onto [0, 360).
double normalize_deg(double deg);

/// Maps any angle in degrees onto (-180, 180].
double wrap_deg(double deg);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Unit vector at `deg` degrees CCW from +x.
inline Vec2 unit_from_deg(double deg) {
  return {std::cos(deg2rad(deg)), std::sin(deg2rad(deg))};
}

/// Planar pose. theta is degrees CCW, kept in [0, 360) by every mutator in
/// this library.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 heading() const { return unit_from_deg(theta); }
  friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// Expresses a world point in the frame of `frame`.
Vec2 to_frame(const Pose2& frame, Vec2 world);
/// Expresses a point given in the frame of `frame` in world coordinates.
Vec2 from_frame(const Pose2& frame, Vec2 local);

/// Pose of `pose` relative to `frame` (heading relative, normalized).
Pose2 relative_pose(const Pose2& frame, const Pose2& pose);
/// Inverse of relative_pose.
Pose2 compose(const Pose2& frame, const Pose2& local);

/// Axis-aligned rectangle centered on a body origin; length runs along the
/// body's heading (x), width across it (y).
struct Rect {
  double length = 1.2;
  double width = 0.7;
};

/// Euclidean distance from a body-frame point to the rectangle (0 inside).
double rect_standoff(const Rect& rect, Vec2 local);

/// Distance from `p` to a polyline; infinite for an empty polyline.
double distance_to_polyline(std::span<const Vec2> polyline, Vec2 p);

}  // namespace chairside
