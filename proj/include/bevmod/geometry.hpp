#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bevmod/ingest.hpp"
#include "bevmod/rigid_transform.hpp"

namespace bevmod {

inline constexpr double kPi = 3.14159265358979323846;

// Wraps to (-π, π].
double wrap_angle(double angle);

/// Spherical Mercator projection anchored at a sequence's first GPS fix.
struct MercatorDatum {
  static constexpr double kEarthRadius = 6378137.0;

  double reference_lat = 0.0;  // degrees
  double scale = 1.0;          // cos(reference_lat)
  double earth_radius = kEarthRadius;

  // Throws PoleSingularity for |lat| >= 90.
  static MercatorDatum from_latitude(double lat_deg);
};

// imu→world pose for one GPS/IMU record: Mercator x/y, altitude z, and
// Rz(yaw)·Ry(pitch)·Rx(roll). Throws PoleSingularity for |lat| >= 90.
RigidTransform oxts_to_pose(const OxtsRecord& rec, const MercatorDatum& datum);

// velo→world poses for a whole sequence, expressed relative to the first
// frame's IMU pose. Empty input gives an empty result.
std::vector<RigidTransform> velo_world_poses(std::span<const OxtsRecord> records,
                                             const RigidTransform& imu_to_velo);

// Velodyne-frame box to the rectified camera frame: the center goes
// through rect_rotation·velo_to_cam, the heading through the fixed
// axis permutation rotation_y = −yaw − π/2.
TrackedBox box_to_cam(const TrackedBox& box, const CalibrationSet& calib);

// Corner order: bottom face then top face, each counter-clockwise seen
// from above (positive area in (x, y) for Velodyne, in (x, z) for Camera).
// At yaw 0 the length runs along the frame's x axis.
std::array<Eigen::Vector3d, 8> box_corners(const TrackedBox& box);

}  // namespace bevmod
