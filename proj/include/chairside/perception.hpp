#pragma once

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "chairside/geometry.hpp"
#include "chairside/sim.hpp"

namespace chairside::perception {

/// Closed interval of image bearings in degrees.
struct AngleInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double deg) const { return deg >= lo && deg <= hi; }
};

/// Pinhole camera. Bearings in the camera frame are measured in image terms:
/// positive means right of the optical axis.
struct CameraModel {
  double hfov = 62.0;
  int image_width = 640;
  int image_height = 480;
  double mount_height = 0.8;
  std::optional<AngleInterval> occlusion_sector;

  double focal_px() const;
  double half_fov() const { return hfov / 2.0; }
};

/// The robot's own mast blocks part of the view when the camera is panned
/// toward the left side of the base (right-side following).
struct MastOcclusion {
  AngleInterval sector{18.0, 31.0};
  AngleInterval face_range{45.0, 135.0};
};

/// Camera with the mast occlusion applied for the given pan angle.
CameraModel effective_camera(const CameraModel& camera, const std::optional<MastOcclusion>& mast,
                             double face_angle);

enum class ObjectClass { Person, Other };

struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double area() const { return w * h; }
};

struct Detection {
  ObjectClass cls = ObjectClass::Person;
  BBox bbox;
  double depth = 0.0;
  int source_id = -1;  // oracle bookkeeping only
};

struct TrackingObservation {
  double deviation_px = 0.0;  // cx - image_width/2, positive = target right of center
  double distance = 0.0;
  bool in_frame = false;
  double target_height_px = 0.0;
  int staleness = 0;                 // consecutive perception ticks without a target
  std::optional<int> source_id;      // oracle bookkeeping only
};

struct Entity {
  Vec2 position;
  double height = 1.7;
  double radius = 0.2;
  int id = -1;
  ObjectClass cls = ObjectClass::Person;
};

Pose2 camera_pose(const sim::RobotState& robot);

/// Bearing of `point` from the camera, degrees, positive to the image right.
double image_bearing(const Pose2& camera_pose, Vec2 point);

/// Linear bearing-to-column mapping for cx; true pinhole focal length for box
/// sizes. Boxes are clipped to the image.
std::optional<Detection> project(const CameraModel& camera, const Pose2& camera_pose,
                                 const Entity& entity);

struct DetectorNoise {
  double pixel_sigma = 2.0;
  double miss_probability = 0.0;
};

/// Simulated detector over the wheelchair user and pedestrians, sorted by box
/// area, largest first. The wheelchair user's depth reading is the range to
/// the nearest point of the wheelchair footprint.
std::vector<Detection> detect(const sim::WorldState& world, const CameraModel& camera,
                              const Pose2& camera_pose, const DetectorNoise& noise,
                              std::mt19937_64& rng);

/// Picks the wheelchair user: the largest person box, unless the runner-up is
/// within 10% in area, in which case the shorter estimated real height wins.
std::optional<Detection> identify_target(std::span<const Detection> detections,
                                         const CameraModel& camera);

inline constexpr double kAreaTieWindow = 0.10;

/// detect + identify_target with staleness bookkeeping across ticks.
class Tracker {
 public:
  Tracker(CameraModel camera, std::optional<MastOcclusion> mast, DetectorNoise noise)
      : camera_(camera), mast_(mast), noise_(noise) {}

  TrackingObservation observe(const sim::WorldState& world, std::mt19937_64& rng);
  const TrackingObservation& last() const { return last_; }
  const CameraModel& camera() const { return camera_; }
  void reset() { last_ = {}; }

 private:
  CameraModel camera_;
  std::optional<MastOcclusion> mast_;
  DetectorNoise noise_;
  TrackingObservation last_;
};

}  // namespace chairside::perception
