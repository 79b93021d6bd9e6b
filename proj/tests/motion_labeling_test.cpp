#include <sstream>

#include <gtest/gtest.h>

#include "bevmod/error.hpp"
#include "bevmod/motion_labeling.hpp"
#include "support/generators.hpp"

namespace bevmod {
namespace {

using testing::Gen;

// Ego drives along world x at `speed`; frame k at k·dt.
struct Scenario {
  std::vector<RigidTransform> poses;
  std::vector<double> stamps;
  std::vector<TrackedBox> boxes;
};

Scenario driving(int frames, double ego_speed, double dt) {
  Scenario s;
  for (int k = 0; k < frames; ++k) {
    s.poses.push_back(RigidTransform::from_parts(rot_z(0.02 * k), {ego_speed * dt * k, 0.3 * k * dt, 0.0}));
    s.stamps.push_back(dt * k);
  }
  return s;
}

// Annotation-frame boxes for an object whose world position is `world(k)`.
template <typename F>
void add_track(Scenario& s, int track_id, F world) {
  for (int k = 0; k < static_cast<int>(s.poses.size()); ++k) {
    TrackedBox b;
    b.track_id = track_id;
    b.frame_index = k;
    b.dims = {4, 2, 1.5};
    b.center = s.poses[static_cast<std::size_t>(k)].inverse().apply(world(k));
    s.boxes.push_back(b);
  }
}

std::string serialize(const std::vector<MotionLabel>& labels) {
  std::ostringstream out;
  write_labels(out, labels);
  return out.str();
}

TEST(EgoMotion, IdentityAndForwardStep) {
  Gen g(20);
  const auto p = g.transform();
  EXPECT_LT((ego_motion(p, p).rotation() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LT(ego_motion(p, p).translation().norm(), 1e-9);
  const auto a = RigidTransform::from_translation({5, 2, 0});
  const auto b = RigidTransform::from_translation({6, 2, 0});
  EXPECT_LT((ego_motion(a, b).translation() - Eigen::Vector3d(1, 0, 0)).norm(), 1e-12);
}

TEST(EgoMotion, LandmarkSeenFromBothFrames) {
  Gen g(21);
  for (int i = 0; i < 200; ++i) {
    const auto pt = g.transform(), pt1 = g.transform();
    const Eigen::Vector3d landmark_world = g.vec3(100);
    const Eigen::Vector3d in_t1 = pt1.inverse().apply(landmark_world);
    const Eigen::Vector3d in_t = pt.inverse().apply(landmark_world);
    EXPECT_LT((ego_motion(pt, pt1).apply(in_t1) - in_t).norm(), 1e-9);
  }
}

TEST(WorldTrack, StaticObjectUnderMovingEgo) {
  auto s = driving(10, 10.0, 0.1);
  const Eigen::Vector3d w(30, -4, 0.5);
  add_track(s, 1, [&](int) { return w; });
  EXPECT_NE(s.boxes[0].center, s.boxes[5].center);
  for (const auto& p : object_world_track(s.boxes, s.poses)) EXPECT_LT((p - w).norm(), 1e-9);
}

TEST(WorldTrack, IdentityPosesAndMissingPose) {
  std::vector<TrackedBox> boxes(2);
  boxes[0].center = {1, 2, 3};
  boxes[1].center = {4, 5, 6};
  boxes[1].frame_index = 1;
  const std::vector<RigidTransform> poses(2);
  const auto w = object_world_track(boxes, poses);
  EXPECT_EQ(w[0], boxes[0].center);
  EXPECT_EQ(w[1], boxes[1].center);
  boxes[1].frame_index = 2;
  try {
    object_world_track(boxes, poses);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingPose);
  }
}

TEST(ClassifyTrack, ConstantPositionIsStatic) {
  const std::vector<Eigen::Vector3d> pos(4, Eigen::Vector3d(3, 4, 5));
  const std::vector<double> t = {0, 0.1, 0.2, 0.3};
  for (const auto& v : classify_track(pos, t, {})) {
    EXPECT_EQ(v.verdict, Verdict::kStatic);
    EXPECT_EQ(v.speed, 0.0);
  }
}

TEST(ClassifyTrack, TwoMetersPerSecondIsMoving) {
  std::vector<Eigen::Vector3d> pos;
  std::vector<double> t;
  for (int k = 0; k < 5; ++k) {
    pos.emplace_back(0.2 * k, 0, 0);
    t.push_back(0.1 * k);
  }
  for (const auto& v : classify_track(pos, t, {})) {
    EXPECT_EQ(v.verdict, Verdict::kMoving);
    EXPECT_NEAR(v.speed, 2.0, 1e-12);
  }
}

TEST(ClassifyTrack, ThresholdIsStrict) {
  const std::vector<Eigen::Vector3d> pos = {{0, 0, 0}, {0.5, 0, 0}, {1.0, 0, 0}};
  const std::vector<double> t = {0, 1, 2};
  for (const auto& v : classify_track(pos, t, {})) {
    EXPECT_EQ(v.speed, 0.5);
    EXPECT_EQ(v.verdict, Verdict::kStatic);
  }
}

TEST(ClassifyTrack, LastFrameReusesPrecedingDifference) {
  const std::vector<Eigen::Vector3d> pos = {{0, 0, 0}, {1, 0, 0}, {1, 3, 0}};
  const std::vector<double> t = {0, 1, 2};
  const auto v = classify_track(pos, t, {});
  EXPECT_EQ(v[0].speed, 1.0);
  EXPECT_EQ(v[1].speed, 3.0);
  EXPECT_EQ(v[2].speed, 3.0);
}

TEST(ClassifyTrack, VerticalMotionIgnored) {
  const std::vector<Eigen::Vector3d> pos = {{0, 0, 0}, {0, 0, 5}, {0, 0, 10}};
  const std::vector<double> t = {0, 1, 2};
  for (const auto& v : classify_track(pos, t, {})) EXPECT_EQ(v.verdict, Verdict::kStatic);
}

TEST(ClassifyTrack, ShortTracksAreStatic) {
  const std::vector<Eigen::Vector3d> pos = {{0, 0, 0}, {10, 0, 0}};
  const std::vector<double> t = {0, 1};
  LabelingConfig cfg;
  cfg.min_track_length = 3;
  for (const auto& v : classify_track(pos, t, cfg)) {
    EXPECT_EQ(v.verdict, Verdict::kStatic);
    EXPECT_EQ(v.speed, 10.0);
  }
  const std::vector<Eigen::Vector3d> one = {{0, 0, 0}};
  const std::vector<double> t1 = {0};
  EXPECT_EQ(classify_track(one, t1, {})[0].verdict, Verdict::kStatic);
}

TEST(ClassifyTrack, NonIncreasingTimestamps) {
  const std::vector<Eigen::Vector3d> pos(3, Eigen::Vector3d::Zero());
  const std::vector<double> t = {0, 1, 1};
  try {
    classify_track(pos, t, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadTimestamps);
  }
}

TEST(LabelingConfig, Validation) {
  LabelingConfig cfg;
  cfg.speed_threshold = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.max_range = -1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(LabelSequence, OneStaticOneMoving) {
  auto s = driving(6, 10.0, 0.1);
  add_track(s, 3, [](int) { return Eigen::Vector3d(20, 3, 0); });
  add_track(s, 4, [](int k) { return Eigen::Vector3d(25 + 0.2 * k, -3, 0); });
  const auto labels = label_sequence(s.boxes, s.poses, s.stamps, {});
  ASSERT_EQ(labels.size(), 12u);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    EXPECT_EQ(labels[i].track_id, i < 6 ? 3 : 4);
    EXPECT_EQ(labels[i].frame_index, static_cast<int>(i % 6));
    EXPECT_EQ(labels[i].verdict, i < 6 ? Verdict::kStatic : Verdict::kMoving);
  }
  EXPECT_NEAR(labels[7].relative_speed, 2.0, 1e-9);
}

TEST(LabelSequence, EmptyTrackSet) {
  const auto s = driving(3, 10, 0.1);
  EXPECT_TRUE(label_sequence({}, s.poses, s.stamps, {}).empty());
}

TEST(LabelSequence, ParkedCarsUnderFastEgo) {
  auto s = driving(20, 10.0, 0.1);
  Gen g(22);
  for (int id = 0; id < 8; ++id) {
    const Eigen::Vector3d w(g.uniform(5, 40), g.uniform(-10, 10), 0);
    add_track(s, id, [&](int) { return w; });
  }
  for (const auto& l : label_sequence(s.boxes, s.poses, s.stamps, {})) {
    EXPECT_EQ(l.verdict, Verdict::kStatic);
    EXPECT_LT(l.relative_speed, 1e-6);
  }
}

TEST(LabelSequence, FarLabelsDropped) {
  auto s = driving(3, 0.0, 0.1);
  add_track(s, 1, [](int) { return Eigen::Vector3d(49, 0, 0); });
  add_track(s, 2, [](int) { return Eigen::Vector3d(51, 0, 0); });
  const auto labels = label_sequence(s.boxes, s.poses, s.stamps, {});
  for (const auto& l : labels) EXPECT_EQ(l.track_id, 1);
}

TEST(LabelSequence, EgoInvariance) {
  Gen g(23);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = driving(8, g.uniform(0, 20), 0.1);
    for (int id = 0; id < 5; ++id) {
      const Eigen::Vector3d start(g.uniform(5, 30), g.uniform(-10, 10), 0);
      const Eigen::Vector3d vel(g.uniform(-3, 3), g.uniform(-3, 3), 0);
      add_track(s, id, [&](int k) { return Eigen::Vector3d(start + vel * (0.1 * k)); });
    }
    const auto base = label_sequence(s.boxes, s.poses, s.stamps, {});
    const auto G = g.upright_transform(1000.0);
    std::vector<RigidTransform> moved;
    for (const auto& p : s.poses) moved.push_back(G * p);
    const auto again = label_sequence(s.boxes, moved, s.stamps, {});
    ASSERT_EQ(base.size(), again.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      EXPECT_NEAR(base[i].relative_speed, again[i].relative_speed, 1e-9);
      if (std::abs(base[i].relative_speed - 0.5) > 1e-6) {
        EXPECT_EQ(base[i].verdict, again[i].verdict);
      }
    }
  }
}

TEST(LabelSequence, RaisingThresholdNeverAddsMoving) {
  Gen g(24);
  auto s = driving(6, 10, 0.1);
  for (int id = 0; id < 20; ++id) {
    const Eigen::Vector3d start(g.uniform(5, 30), g.uniform(-10, 10), 0);
    const Eigen::Vector3d vel(g.uniform(-1.5, 1.5), g.uniform(-1.5, 1.5), 0);
    add_track(s, id, [&](int k) { return Eigen::Vector3d(start + vel * (0.1 * k)); });
  }
  std::vector<MotionLabel> prev;
  for (double thr : {0.1, 0.2, 0.5, 0.8, 1.0, 1.5, 3.0}) {
    LabelingConfig cfg;
    cfg.speed_threshold = thr;
    const auto labels = label_sequence(s.boxes, s.poses, s.stamps, cfg);
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (prev[i].verdict == Verdict::kStatic) {
        EXPECT_EQ(labels[i].verdict, Verdict::kStatic);
      }
    }
    prev = labels;
  }
}

TEST(LabelSequence, DeterministicAcrossWorkerCounts) {
  Gen g(25);
  auto s = driving(10, 8, 0.1);
  for (int id = 0; id < 30; ++id) {
    const Eigen::Vector3d start(g.uniform(5, 45), g.uniform(-20, 20), 0);
    const Eigen::Vector3d vel(g.uniform(-2, 2), g.uniform(-2, 2), 0);
    add_track(s, id, [&](int k) { return Eigen::Vector3d(start + vel * (0.1 * k)); });
  }
  const auto one = serialize(label_sequence(s.boxes, s.poses, s.stamps, {}, 1));
  EXPECT_EQ(one, serialize(label_sequence(s.boxes, s.poses, s.stamps, {}, 4)));
  EXPECT_EQ(one, serialize(label_sequence(s.boxes, s.poses, s.stamps, {}, 1)));
}

TEST(Labels, WriteParseRoundTrip) {
  const std::vector<MotionLabel> labels = {{1, 0, Verdict::kMoving, 2.5, ObjectClass::kCyclist},
                                           {2, 3, Verdict::kStatic, 0.125, ObjectClass::kVan}};
  const auto text = serialize(labels);
  EXPECT_EQ(text, "0 1 Cyclist Moving 2.500000\n3 2 Van Static 0.125000\n");
  std::istringstream in(text);
  EXPECT_EQ(parse_labels(in), labels);
}

TEST(Labels, MalformedLines) {
  for (const char* bad : {"0 1 Car Moving\n", "0 1 Car Maybe 1.0\n", "0 1 Tram Static 1.0\n", "a 1 Car Static 1\n",
                          "0 1 Car Static -1\n"}) {
    std::istringstream in(bad);
    EXPECT_THROW(parse_labels(in), Error) << bad;
  }
}

TEST(Review, BandAroundThreshold) {
  const std::vector<MotionLabel> labels = {{1, 0, Verdict::kStatic, 0.39, ObjectClass::kCar},
                                           {2, 0, Verdict::kStatic, 0.41, ObjectClass::kCar},
                                           {3, 0, Verdict::kMoving, 0.59, ObjectClass::kCar},
                                           {4, 0, Verdict::kMoving, 0.61, ObjectClass::kCar}};
  const auto r = review_candidates(labels, {});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].track_id, 2);
  EXPECT_EQ(r[1].track_id, 3);
}

}  // namespace
}  // namespace bevmod
