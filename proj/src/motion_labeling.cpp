#include "bevmod/motion_labeling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>

#include "bevmod/error.hpp"
#include "bevmod/parallel.hpp"
#include "bevmod/text.hpp"

namespace bevmod {

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::kMoving ? "Moving" : "Static";
}

void LabelingConfig::validate() const {
  if (!(speed_threshold > 0.0) || !std::isfinite(speed_threshold)) {
    throw Error(ErrorCode::kBadConfig, "speed threshold must be positive");
  }
  if (!(max_range > 0.0) || !std::isfinite(max_range)) {
    throw Error(ErrorCode::kBadConfig, "max range must be positive");
  }
  if (min_track_length < 1) throw Error(ErrorCode::kBadConfig, "min track length must be >= 1");
}

RigidTransform ego_motion(const RigidTransform& pose_t, const RigidTransform& pose_t1) {
  return pose_t.inverse() * pose_t1;
}

std::vector<Eigen::Vector3d> object_world_track(std::span<const TrackedBox> boxes,
                                                std::span<const RigidTransform> poses) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(boxes.size());
  for (const auto& box : boxes) {
    if (box.frame_index < 0 || static_cast<std::size_t>(box.frame_index) >= poses.size()) {
      throw Error(ErrorCode::kMissingPose, "no pose for frame " + std::to_string(box.frame_index) +
                                               " (track " + std::to_string(box.track_id) + ")");
    }
    out.push_back(poses[static_cast<std::size_t>(box.frame_index)].apply(box.center));
  }
  return out;
}

std::vector<SpeedVerdict> classify_track(std::span<const Eigen::Vector3d> world_positions,
                                         std::span<const double> timestamps,
                                         const LabelingConfig& cfg) {
  cfg.validate();
  const std::size_t n = world_positions.size();
  if (timestamps.size() != n) {
    throw Error(ErrorCode::kBadTimestamps, "timestamp count does not match position count");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw Error(ErrorCode::kBadTimestamps, "timestamps not strictly increasing at index " +
                                                 std::to_string(i));
    }
  }
  std::vector<SpeedVerdict> out(n);
  if (n < 2) return out;
  const bool long_enough = n >= static_cast<std::size_t>(cfg.min_track_length);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i + 1 < n ? i : i - 1;
    // Horizontal plane only: world z is GPS altitude.
    const double distance = (world_positions[a + 1] - world_positions[a]).head<2>().norm();
    out[i].speed = distance / (timestamps[a + 1] - timestamps[a]);
    if (long_enough && out[i].speed > cfg.speed_threshold) out[i].verdict = Verdict::kMoving;
  }
  return out;
}

std::vector<MotionLabel> label_sequence(std::span<const TrackedBox> boxes,
                                        std::span<const RigidTransform> poses,
                                        std::span<const double> timestamps,
                                        const LabelingConfig& cfg, int jobs) {
  cfg.validate();
  std::map<int, std::vector<TrackedBox>> tracks;
  for (const auto& box : boxes) tracks[box.track_id].push_back(box);
  std::vector<std::vector<TrackedBox>*> order;
  for (auto& [id, track] : tracks) {
    std::sort(track.begin(), track.end(),
              [](const TrackedBox& a, const TrackedBox& b) { return a.frame_index < b.frame_index; });
    order.push_back(&track);
  }

  std::vector<std::vector<MotionLabel>> per_track(order.size());
  parallel_for(order.size(), jobs, [&](std::size_t k) {
    const auto& track = *order[k];
    const auto world = object_world_track(track, poses);
    std::vector<double> stamps;
    stamps.reserve(track.size());
    for (const auto& box : track) {
      if (static_cast<std::size_t>(box.frame_index) >= timestamps.size()) {
        throw Error(ErrorCode::kBadTimestamps,
                    "no timestamp for frame " + std::to_string(box.frame_index));
      }
      stamps.push_back(timestamps[static_cast<std::size_t>(box.frame_index)]);
    }
    const auto verdicts = classify_track(world, stamps, cfg);
    for (std::size_t i = 0; i < track.size(); ++i) {
      if (track[i].center.head<2>().norm() > cfg.max_range) continue;
      per_track[k].push_back(MotionLabel{track[i].track_id, track[i].frame_index, verdicts[i].verdict,
                                         verdicts[i].speed, track[i].object_class});
    }
  });

  std::vector<MotionLabel> labels;
  for (auto& chunk : per_track) labels.insert(labels.end(), chunk.begin(), chunk.end());
  return labels;
}

std::vector<MotionLabel> review_candidates(std::span<const MotionLabel> labels,
                                           const LabelingConfig& cfg) {
  std::vector<MotionLabel> out;
  const double band = 0.2 * cfg.speed_threshold;
  for (const auto& label : labels)
    if (std::abs(label.relative_speed - cfg.speed_threshold) <= band) out.push_back(label);
  return out;
}

void write_labels(std::ostream& out, std::span<const MotionLabel> labels) {
  for (const auto& l : labels) {
    out << l.frame_index << ' ' << l.track_id << ' ' << to_string(l.object_class) << ' '
        << to_string(l.verdict) << ' ' << text::format_fixed(l.relative_speed, 6) << '\n';
  }
}

std::vector<MotionLabel> parse_labels(std::istream& in) {
  std::vector<MotionLabel> labels;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto tokens = text::split_ws(body);
    const auto fail = [&](const std::string& why) {
      return Error(ErrorCode::kMalformedLine, "label line " + std::to_string(line_number) + ": " + why);
    };
    if (tokens.size() != 5) throw fail("expected 5 fields");
    const auto frame = text::parse_int(tokens[0]);
    const auto track = text::parse_int(tokens[1]);
    const auto cls = parse_object_class(tokens[2]);
    const auto speed = text::parse_double(tokens[4]);
    if (!frame || !track || *frame < 0 || *track < 0 || *frame > INT32_MAX || *track > INT32_MAX) {
      throw fail("bad frame or track id");
    }
    if (!cls) throw fail("unknown class '" + std::string(tokens[2]) + "'");
    if (!speed || !std::isfinite(*speed) || *speed < 0.0) throw fail("bad speed");
    Verdict verdict;
    if (tokens[3] == "Moving") {
      verdict = Verdict::kMoving;
    } else if (tokens[3] == "Static") {
      verdict = Verdict::kStatic;
    } else {
      throw fail("bad verdict '" + std::string(tokens[3]) + "'");
    }
    labels.push_back(MotionLabel{static_cast<int>(*track), static_cast<int>(*frame), verdict, *speed, *cls});
  }
  return labels;
}

}  // namespace bevmod
