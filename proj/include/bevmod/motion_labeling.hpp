#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bevmod/ingest.hpp"
#include "bevmod/rigid_transform.hpp"

namespace bevmod {

enum class Verdict : std::uint8_t { kStatic, kMoving };

std::string_view to_string(Verdict verdict);

struct MotionLabel {
  int track_id = 0;
  int frame_index = 0;
  Verdict verdict = Verdict::kStatic;
  double relative_speed = 0.0;  // m/s, horizontal world plane
  ObjectClass object_class = ObjectClass::kCar;

  bool operator==(const MotionLabel&) const = default;
};

struct LabelingConfig {
  double speed_threshold = 0.5;  // m/s; Moving iff speed > threshold
  int min_track_length = 2;      // frames; shorter tracks are all Static
  double max_range = 50.0;       // m; labels beyond this horizontal distance are dropped

  // Throws BadConfig on non-positive threshold or range, or min length < 1.
  void validate() const;
};

struct SpeedVerdict {
  Verdict verdict = Verdict::kStatic;
  double speed = 0.0;
};

// Frame-t1 sensor coordinates expressed in frame-t sensor coordinates:
// invert(pose_t) ∘ pose_t1.
RigidTransform ego_motion(const RigidTransform& pose_t, const RigidTransform& pose_t1);

// World position of each box center; `poses[f]` is the sensor→world pose
// of frame f. A box whose frame has no pose is MissingPose.
std::vector<Eigen::Vector3d> object_world_track(std::span<const TrackedBox> boxes,
                                                std::span<const RigidTransform> poses);

// Forward-difference horizontal speed per frame; the last frame reuses
// the preceding difference.
std::vector<SpeedVerdict> classify_track(std::span<const Eigen::Vector3d> world_positions,
                                         std::span<const double> timestamps,
                                         const LabelingConfig& cfg);

// Labels every (track, frame) box. `poses` and `timestamps` are indexed by
// frame. Output is sorted by (track_id, frame_index). Tracks are processed
// on up to `jobs` threads.
std::vector<MotionLabel> label_sequence(std::span<const TrackedBox> boxes,
                                        std::span<const RigidTransform> poses,
                                        std::span<const double> timestamps,
                                        const LabelingConfig& cfg, int jobs = 1);

// Labels whose speed is within ±20% of the threshold.
std::vector<MotionLabel> review_candidates(std::span<const MotionLabel> labels,
                                           const LabelingConfig& cfg);

// `frame track_id class verdict speed_mps` per line, speed with 6 decimals.
void write_labels(std::ostream& out, std::span<const MotionLabel> labels);
// Inverse of write_labels; `#` comments and blank lines are skipped.
std::vector<MotionLabel> parse_labels(std::istream& in);

}  // namespace bevmod
