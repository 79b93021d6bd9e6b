#include "bevmod/geometry.hpp"

#include <cmath>

#include "bevmod/error.hpp"
#include "bevmod/text.hpp"

namespace bevmod {
namespace {

void check_latitude(double lat) {
  if (!(std::abs(lat) < 90.0)) {
    throw Error(ErrorCode::kPoleSingularity, "latitude " + text::format_double(lat));
  }
}

}  // namespace

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

MercatorDatum MercatorDatum::from_latitude(double lat_deg) {
  check_latitude(lat_deg);
  return MercatorDatum{lat_deg, std::cos(lat_deg * kPi / 180.0), kEarthRadius};
}

RigidTransform oxts_to_pose(const OxtsRecord& rec, const MercatorDatum& datum) {
  check_latitude(rec.lat);
  const double er = datum.earth_radius;
  const Eigen::Vector3d t(datum.scale * er * rec.lon * kPi / 180.0,
                          datum.scale * er * std::log(std::tan((90.0 + rec.lat) * kPi / 360.0)),
                          rec.alt);
  return RigidTransform::from_parts(euler_zyx(rec.yaw, rec.pitch, rec.roll), t);
}

std::vector<RigidTransform> velo_world_poses(std::span<const OxtsRecord> records,
                                             const RigidTransform& imu_to_velo) {
  std::vector<RigidTransform> poses;
  if (records.empty()) return poses;
  const auto datum = MercatorDatum::from_latitude(records.front().lat);
  const auto origin_inv = oxts_to_pose(records.front(), datum).inverse();
  const auto velo_to_imu = imu_to_velo.inverse();
  poses.reserve(records.size());
  for (const auto& rec : records) {
    poses.push_back(origin_inv * oxts_to_pose(rec, datum) * velo_to_imu);
  }
  return poses;
}

TrackedBox box_to_cam(const TrackedBox& box, const CalibrationSet& calib) {
  if (box.frame == BoxFrame::kCamera) return box;
  TrackedBox out = box;
  out.center = calib.rect_rotation * calib.velo_to_cam.apply(box.center);
  out.yaw = wrap_angle(-box.yaw - kPi / 2.0);
  out.frame = BoxFrame::kCamera;
  return out;
}

std::array<Eigen::Vector3d, 8> box_corners(const TrackedBox& box) {
  const double hl = box.dims.length / 2.0;
  const double hw = box.dims.width / 2.0;
  const double hh = box.dims.height / 2.0;
  // Counter-clockwise footprint in the local (length, width) plane.
  const std::array<Eigen::Vector2d, 4> local = {Eigen::Vector2d(hl, hw), Eigen::Vector2d(-hl, hw),
                                                Eigen::Vector2d(-hl, -hw), Eigen::Vector2d(hl, -hw)};
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  std::array<Eigen::Vector3d, 8> corners;
  for (std::size_t i = 0; i < 4; ++i) {
    const double a = local[i].x(), b = local[i].y();
    if (box.frame == BoxFrame::kVelodyne) {
      const Eigen::Vector3d ground(c * a - s * b, s * a + c * b, 0.0);
      corners[i] = box.center + ground + Eigen::Vector3d(0, 0, -hh);
      corners[i + 4] = box.center + ground + Eigen::Vector3d(0, 0, hh);
    } else {
      // Rotation about +y maps (x, z) = (a, b) to (c·a + s·b, −s·a + c·b); y points down.
      const Eigen::Vector3d ground(c * a + s * b, 0.0, -s * a + c * b);
      corners[i] = box.center + ground + Eigen::Vector3d(0, hh, 0);
      corners[i + 4] = box.center + ground + Eigen::Vector3d(0, -hh, 0);
    }
  }
  return corners;
}

}  // namespace bevmod
