#include "chairside/perception.hpp"

#include <algorithm>
#include <cmath>

namespace chairside::perception {

namespace {

struct RawBox {
  double cx;
  double top;
  double bottom;
  double w;
};

std::optional<RawBox> raw_projection(const CameraModel& camera, const Pose2& cam,
                                     const Entity& entity) {
  const double bearing = image_bearing(cam, entity.position);
  if (std::abs(bearing) > camera.half_fov()) return std::nullopt;
  if (camera.occlusion_sector && camera.occlusion_sector->contains(bearing)) return std::nullopt;
  const double range = distance(cam.position(), entity.position);
  if (!(range > 0.0)) return std::nullopt;

  const double f = camera.focal_px();
  const double half_w = camera.image_width / 2.0;
  const double half_h = camera.image_height / 2.0;
  return RawBox{half_w + bearing / camera.half_fov() * half_w,
                half_h - f * (entity.height - camera.mount_height) / range,
                half_h + f * camera.mount_height / range, f * 2.0 * entity.radius / range};
}

BBox clip_box(const CameraModel& camera, const RawBox& raw) {
  const double width = camera.image_width;
  const double height = camera.image_height;
  const double left = std::clamp(raw.cx - raw.w / 2.0, 0.0, width);
  const double right = std::clamp(raw.cx + raw.w / 2.0, 0.0, width);
  const double top = std::clamp(raw.top, 0.0, height);
  const double bottom = std::clamp(raw.bottom, 0.0, height);
  return {(left + right) / 2.0, (top + bottom) / 2.0, right - left, bottom - top};
}

}  // namespace

double CameraModel::focal_px() const {
  return image_width / (2.0 * std::tan(deg2rad(half_fov())));
}

CameraModel effective_camera(const CameraModel& camera, const std::optional<MastOcclusion>& mast,
                             double face_angle) {
  CameraModel out = camera;
  if (mast && mast->face_range.contains(normalize_deg(face_angle))) {
    out.occlusion_sector = mast->sector;
  }
  return out;
}

Pose2 camera_pose(const sim::RobotState& robot) {
  return {robot.base.x, robot.base.y, normalize_deg(robot.base.theta + robot.face_angle)};
}

double image_bearing(const Pose2& camera_pose, Vec2 point) {
  const Vec2 local = to_frame(camera_pose, point);
  // Camera frame is CCW-positive; the image's right-hand side is clockwise.
  return -rad2deg(std::atan2(local.y, local.x));
}

std::optional<Detection> project(const CameraModel& camera, const Pose2& camera_pose,
                                 const Entity& entity) {
  const auto raw = raw_projection(camera, camera_pose, entity);
  if (!raw) return std::nullopt;
  return Detection{entity.cls, clip_box(camera, *raw),
                   distance(camera_pose.position(), entity.position), entity.id};
}

std::vector<Detection> detect(const sim::WorldState& world, const CameraModel& camera,
                              const Pose2& cam, const DetectorNoise& noise,
                              std::mt19937_64& rng) {
  std::vector<Entity> entities;
  const auto& wc = world.wheelchair;
  entities.push_back({wc.pose.position(), wc.seated_height, wc.body_radius, sim::kWheelchairId,
                      ObjectClass::Person});
  for (std::size_t i = 0; i < world.persons.size(); ++i) {
    const auto& p = world.persons[i];
    entities.push_back(
        {p.pose.position(), p.standing_height, p.radius, sim::person_id(i), ObjectClass::Person});
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Detection> out;
  for (const auto& e : entities) {
    // Fixed number of draws per entity keeps the noise stream aligned across
    // runs that see different subsets of entities.
    const double miss_draw = unit(rng);
    const double nx = gauss(rng) * noise.pixel_sigma;
    const double ny = gauss(rng) * noise.pixel_sigma;
    auto raw = raw_projection(camera, cam, e);
    if (!raw || miss_draw < noise.miss_probability) continue;
    raw->cx += nx;
    raw->top += ny;
    raw->bottom += ny;
    double depth = distance(cam.position(), e.position);
    if (e.id == sim::kWheelchairId) {
      depth = std::max(rect_standoff(wc.footprint, to_frame(wc.pose, cam.position())), 0.01);
    }
    out.push_back({e.cls, clip_box(camera, *raw), depth, e.id});
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return a.bbox.area() > b.bbox.area();
  });
  return out;
}

std::optional<Detection> identify_target(std::span<const Detection> detections,
                                         const CameraModel& camera) {
  std::vector<Detection> people;
  for (const auto& d : detections) {
    if (d.cls == ObjectClass::Person) people.push_back(d);
  }
  if (people.empty()) return std::nullopt;
  std::stable_sort(people.begin(), people.end(), [](const Detection& a, const Detection& b) {
    return a.bbox.area() > b.bbox.area();
  });
  if (people.size() == 1) return people.front();

  const Detection& first = people[0];
  const Detection& second = people[1];
  const double top_area = first.bbox.area();
  if (top_area > 0.0 && (top_area - second.bbox.area()) / top_area < kAreaTieWindow) {
    const double f = camera.focal_px();
    const double h_first = first.bbox.h * first.depth / f;
    const double h_second = second.bbox.h * second.depth / f;
    return h_second < h_first ? second : first;
  }
  return first;
}

TrackingObservation Tracker::observe(const sim::WorldState& world, std::mt19937_64& rng) {
  const CameraModel cam = effective_camera(camera_, mast_, world.robot.face_angle);
  const auto detections = detect(world, cam, camera_pose(world.robot), noise_, rng);
  if (const auto target = identify_target(detections, cam)) {
    last_ = {target->bbox.cx - cam.image_width / 2.0, target->depth, true, target->bbox.h, 0,
             target->source_id};
  } else {
    last_.in_frame = false;
    last_.staleness += 1;
  }
  return last_;
}

}  // namespace chairside::perception
