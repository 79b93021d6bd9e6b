#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bevmod/rigid_transform.hpp"

namespace bevmod {

using Matrix34d = Eigen::Matrix<double, 3, 4>;

enum class ObjectClass : std::uint8_t { kCar, kTruck, kVan, kPedestrian, kCyclist };

inline constexpr std::array<ObjectClass, 5> kAllObjectClasses = {
    ObjectClass::kCar, ObjectClass::kTruck, ObjectClass::kVan, ObjectClass::kPedestrian,
    ObjectClass::kCyclist};

std::string_view to_string(ObjectClass cls);
std::optional<ObjectClass> parse_object_class(std::string_view name);

// Coordinate frame a box is expressed in. Velodyne: x forward, y left,
// z up, yaw about +z. Camera (rectified): x right, y down, z forward,
// yaw about +y (KITTI rotation_y).
enum class BoxFrame : std::uint8_t { kVelodyne, kCamera };

struct BoxDims {
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
};

// `center` is the geometric center of the cuboid.
struct TrackedBox {
  int track_id = 0;
  ObjectClass object_class = ObjectClass::kCar;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  BoxDims dims;
  double yaw = 0.0;
  int frame_index = 0;
  BoxFrame frame = BoxFrame::kVelodyne;
};

struct CameraCalibration {
  Matrix34d projection = Matrix34d::Zero();            // P_rect_02
  Eigen::Matrix3d rect_rotation = Eigen::Matrix3d::Identity();  // R_rect_00
};

struct CalibrationSet {
  Matrix34d cam_projection = Matrix34d::Zero();
  Eigen::Matrix3d rect_rotation = Eigen::Matrix3d::Identity();
  RigidTransform velo_to_cam;
  RigidTransform imu_to_velo;
};

struct OxtsRecord {
  double lat = 0.0;    // degrees
  double lon = 0.0;    // degrees
  double alt = 0.0;    // meters
  double roll = 0.0;   // radians
  double pitch = 0.0;  // radians
  double yaw = 0.0;    // radians
  double timestamp = 0.0;  // seconds
};

struct TrackletDiagnostic {
  int line_number = 0;
  std::string message;
};

struct TrackletParseResult {
  std::vector<TrackedBox> boxes;  // sorted by (track_id, frame_index)
  std::vector<TrackletDiagnostic> diagnostics;
};

// calib_cam_to_cam.txt: requires `P_rect_02` (12 values) and `R_rect_00`
// (9 values); every other key is ignored.
CameraCalibration parse_cam_calib(std::istream& in);
void write_cam_calib(std::ostream& out, const CameraCalibration& calib);

// calib_velo_to_cam.txt / calib_imu_to_velo.txt. Rotations within 1e-3 of
// orthonormal are projected onto SO(3); anything worse is BadRotation.
RigidTransform parse_extrinsic(std::istream& in, std::string_view key_r = "R",
                               std::string_view key_t = "T");
void write_extrinsic(std::ostream& out, const RigidTransform& transform);

// Fields 1-6 of a KITTI-raw GPS/IMU line; the rest are ignored.
OxtsRecord parse_oxts_line(std::string_view line, double timestamp = 0.0);
// `YYYY-MM-DD HH:MM:SS[.fraction]`, interpreted as UTC, in seconds since
// the Unix epoch.
double parse_timestamp(std::string_view text);
// One timestamp per non-blank line, as seconds after the first line. Whole
// seconds are subtracted exactly, so sub-microsecond spacing survives.
std::vector<double> parse_timestamps(std::istream& in);

// Line schema: `frame track_id class cx cy cz l w h yaw`, `#` comments.
// Boxes are tagged BoxFrame::kVelodyne.
TrackletParseResult parse_tracklets(std::istream& in);
void write_tracklets(std::ostream& out, std::span<const TrackedBox> boxes);

// Reads calib_cam_to_cam.txt, calib_velo_to_cam.txt and calib_imu_to_velo.txt
// from `dir`; a missing file is an IoError naming it.
CalibrationSet load_calibration(const std::filesystem::path& dir);

// One `oxts/data/NNNNNNNNNN.txt` per entry of `oxts/timestamps.txt`.
std::vector<OxtsRecord> load_oxts_sequence(const std::filesystem::path& sequence_dir);

}  // namespace bevmod
