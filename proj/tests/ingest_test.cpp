#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bevmod/error.hpp"
#include "bevmod/geometry.hpp"
#include "bevmod/ingest.hpp"
#include "bevmod/text.hpp"
#include "support/generators.hpp"

namespace bevmod {
namespace {

using testing::Gen;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIoError;
}

CameraCalibration parse_cam(const std::string& s) {
  std::istringstream in(s);
  return parse_cam_calib(in);
}

RigidTransform parse_ext(const std::string& s) {
  std::istringstream in(s);
  return parse_extrinsic(in);
}

TEST(Text, ParseDoubleIsStrict) {
  EXPECT_EQ(text::parse_double("1.5e3"), 1500.0);
  EXPECT_EQ(text::parse_double("+2"), 2.0);
  EXPECT_EQ(text::parse_double("-0.25"), -0.25);
  EXPECT_FALSE(text::parse_double("1,5"));
  EXPECT_FALSE(text::parse_double("1.5x"));
  EXPECT_FALSE(text::parse_double(""));
  EXPECT_FALSE(text::parse_double("+"));
}

TEST(Text, FormatDoubleRoundTrips) {
  Gen g(10);
  for (int i = 0; i < 1000; ++i) {
    const double v = g.uniform(-1e6, 1e6) * std::pow(10.0, g.integer(-12, 6));
    EXPECT_EQ(text::parse_double(text::format_double(v)), v);
  }
  EXPECT_EQ(text::format_fixed(-0.0000001, 3), "0.000");
}

TEST(CamCalib, IdentityFixture) {
  const auto c = parse_cam("P_rect_02: 1 0 0 0 0 1 0 0 0 0 1 0\nR_rect_00: 1 0 0 0 1 0 0 0 1\n");
  Matrix34d p = Matrix34d::Zero();
  p.leftCols<3>().setIdentity();
  EXPECT_EQ(c.projection, p);
  EXPECT_EQ(c.rect_rotation, Eigen::Matrix3d::Identity());
}

TEST(CamCalib, RowMajorFixtureAndUnknownKeys) {
  const auto c = parse_cam(
      "calib_time: 09-Jan-2012 13:57:47\nS_02: 1.392000e+03 5.120000e+02\n"
      "P_rect_02: 1 2 3 4 5 6 7 8 9 10 11 12\nR_rect_00: 1 0 0 0 1 0 0 0 1\nP_rect_03: 1 2\n");
  EXPECT_EQ(c.projection(0, 3), 4.0);
  EXPECT_EQ(c.projection(1, 0), 5.0);
  EXPECT_EQ(c.projection(2, 3), 12.0);
}

TEST(CamCalib, Errors) {
  EXPECT_EQ(code_of([] { parse_cam("R_rect_00: 1 0 0 0 1 0 0 0 1\n"); }), ErrorCode::kMissingField);
  EXPECT_EQ(code_of([] { parse_cam("P_rect_02: 1 2 3\nR_rect_00: 1 0 0 0 1 0 0 0 1\n"); }),
            ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of([] { parse_cam("P_rect_02: 0 0 0 0 0 1 0 0 0 0 1 0\nR_rect_00: 1 0 0 0 1 0 0 0 1\n"); }),
            ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of([] { parse_cam("P_rect_02: 1 0 0 0 0 1 0 0 0 0 1 0\nR_rect_00: 1 0 0 0 1 0 0 0 2\n"); }),
            ErrorCode::kBadRotation);
}

TEST(CamCalib, WriteParseRoundTripIsBitwise) {
  Gen g(11);
  for (int i = 0; i < 200; ++i) {
    CameraCalibration c;
    c.projection = Matrix34d::Random() * 700.0;
    c.projection(0, 0) = g.uniform(100, 1000);
    c.projection(1, 1) = g.uniform(100, 1000);
    c.rect_rotation = g.rotation();
    std::ostringstream out;
    write_cam_calib(out, c);
    const auto back = parse_cam(out.str());
    EXPECT_EQ(back.projection, c.projection);
    EXPECT_EQ(back.rect_rotation, c.rect_rotation);
  }
}

TEST(Extrinsic, IdentityAndQuarterTurn) {
  EXPECT_EQ(parse_ext("R: 1 0 0 0 1 0 0 0 1\nT: 0 0 0\n"), RigidTransform::identity());
  const auto t = parse_ext("R: 0 -1 0 1 0 0 0 0 1\nT: 1 0 0\n");
  EXPECT_LT((t.apply({1, 0, 0}) - Eigen::Vector3d(1, 1, 0)).norm(), 1e-12);
}

TEST(Extrinsic, Errors) {
  EXPECT_EQ(code_of([] { parse_ext("R: 1 0 0 0 1 0 0 0 -1\nT: 0 0 0\n"); }), ErrorCode::kBadRotation);
  EXPECT_EQ(code_of([] { parse_ext("R: 1 0 0 0 1 0 0 0 1.01\nT: 0 0 0\n"); }), ErrorCode::kBadRotation);
  EXPECT_EQ(code_of([] { parse_ext("R: 1 0 0 0 1 0 0 0 1\n"); }), ErrorCode::kMissingField);
}

TEST(Extrinsic, PrintedPrecisionIsProjected) {
  // Six printed decimals leave ~1e-7 drift, which is accepted and projected away.
  const auto t = parse_ext(
      "R: 7.533745e-03 -9.999714e-01 -6.166020e-04 1.480249e-02 7.280733e-04 -9.998902e-01 "
      "9.998621e-01 7.523790e-03 1.480755e-02\nT: -4.069766e-03 -7.631618e-02 -2.717806e-01\n");
  EXPECT_LT(orthonormality_drift(t.rotation()), 1e-12);
}

TEST(Extrinsic, WriteParseRoundTrip) {
  Gen g(12);
  for (int i = 0; i < 100; ++i) {
    const auto t = g.transform(5.0);
    std::ostringstream out;
    write_extrinsic(out, t);
    const auto back = parse_ext(out.str());
    EXPECT_LT((back.rotation() - t.rotation()).norm(), 1e-14);
    EXPECT_EQ(back.translation(), t.translation());
  }
}

TEST(Oxts, ParsesLeadingSixFields) {
  const auto r = parse_oxts_line("49.0 8.4 110.0 0 0 0 1 2 3 4 5", 2.5);
  EXPECT_EQ(r.lat, 49.0);
  EXPECT_EQ(r.lon, 8.4);
  EXPECT_EQ(r.alt, 110.0);
  EXPECT_EQ(r.yaw, 0.0);
  EXPECT_EQ(r.timestamp, 2.5);
  const auto zero = parse_oxts_line("0 0 0 0 0 0");
  EXPECT_EQ(zero.lat, 0.0);
  EXPECT_EQ(zero.roll, 0.0);
}

TEST(Oxts, Errors) {
  EXPECT_EQ(code_of([] { parse_oxts_line("49.0 8.4"); }), ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of([] { parse_oxts_line("49.0 8.4 1 nan 0 0"); }), ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of([] { parse_oxts_line("91 8.4 1 0 0 0"); }), ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of([] { parse_oxts_line("49 181 1 0 0 0"); }), ErrorCode::kMalformedLine);
}

TEST(Timestamps, AbsoluteAndRelative) {
  EXPECT_EQ(parse_timestamp("1970-01-02 00:00:01.5"), 86401.5);
  EXPECT_NEAR(parse_timestamp("2011-09-26 13:02:25.964389445"), 1317042145.964389445, 1e-6);
  std::istringstream in("2011-09-26 13:02:25.900000000\n2011-09-26 13:02:26.000000000\n\n"
                        "2011-09-26 13:02:26.103000000\n");
  const auto t = parse_timestamps(in);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0], 0.0);
  EXPECT_NEAR(t[1], 0.1, 1e-12);
  EXPECT_NEAR(t[2], 0.203, 1e-12);
  EXPECT_EQ(code_of([] { parse_timestamp("2011-13-26 13:02:25"); }), ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of([] { parse_timestamp("yesterday"); }), ErrorCode::kMalformedLine);
}

TrackletParseResult parse_doc(const std::string& s) {
  std::istringstream in(s);
  return parse_tracklets(in);
}

TEST(Tracklets, OneCarOverThreeFrames) {
  const auto r = parse_doc(
      "# frame track class cx cy cz l w h yaw\n"
      "2 7 Car 10 1 -1 4 2 1.5 0.1\n0 7 Car 12 1 -1 4 2 1.5 0.1\n1 7 Car 11 1 -1 4 2 1.5 0.1\n");
  ASSERT_EQ(r.boxes.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(r.boxes[i].track_id, 7);
    EXPECT_EQ(r.boxes[i].frame_index, i);
  }
  EXPECT_EQ(r.boxes[0].center.x(), 12.0);
  EXPECT_EQ(r.boxes[0].dims.length, 4.0);
}

TEST(Tracklets, EmptyDocument) {
  EXPECT_TRUE(parse_doc("").boxes.empty());
  EXPECT_TRUE(parse_doc("# nothing\n\n").boxes.empty());
}

TEST(Tracklets, UnknownClassIsSkippedWithDiagnostic) {
  const auto r = parse_doc("0 1 Tram 1 1 1 4 2 2 0\n0 2 Van 1 1 1 4 2 2 0\n");
  ASSERT_EQ(r.boxes.size(), 1u);
  EXPECT_EQ(r.boxes[0].object_class, ObjectClass::kVan);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].line_number, 1);
  EXPECT_NE(r.diagnostics[0].message.find("UnknownClass"), std::string::npos);
}

TEST(Tracklets, StructuralErrors) {
  EXPECT_EQ(code_of([] { parse_doc("0 1 Car 1 1 1 4 2 2\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_doc("0 1 Car 1 1 1 4 2 2 0 9\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_doc("0 1 Car 1 1 1 0 2 2 0\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_doc("x 1 Car 1 1 1 4 2 2 0\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_doc("0 1 Car 1 1 1 4 2 2 0\n0 1 Car 2 1 1 4 2 2 0\n"); }),
            ErrorCode::kParseError);
}

TEST(Tracklets, CountConservationAndRoundTrip) {
  Gen g(13);
  const char* classes[] = {"Car", "Truck", "Van", "Pedestrian", "Cyclist", "Tram", "Misc"};
  for (int trial = 0; trial < 50; ++trial) {
    std::ostringstream doc;
    int expected = 0;
    for (int track = 0; track < g.integer(0, 6); ++track) {
      const char* cls = classes[g.integer(0, 6)];
      const bool known = parse_object_class(cls).has_value();
      for (int f = 0; f < g.integer(1, 5); ++f) {
        doc << f << ' ' << track << ' ' << cls << ' ' << g.uniform(-50, 50) << " 1 -1 " << g.uniform(0.5, 5)
            << " 2 1.5 " << g.uniform(-3, 3) << '\n';
        expected += known;
      }
    }
    const auto r = parse_doc(doc.str());
    EXPECT_EQ(static_cast<int>(r.boxes.size()), expected);
    std::ostringstream out;
    write_tracklets(out, r.boxes);
    const auto again = parse_doc(out.str());
    ASSERT_EQ(again.boxes.size(), r.boxes.size());
    for (std::size_t i = 0; i < r.boxes.size(); ++i) {
      EXPECT_EQ(again.boxes[i].center, r.boxes[i].center);
      EXPECT_EQ(again.boxes[i].yaw, r.boxes[i].yaw);
    }
  }
}

// Any byte soup either parses or raises a bevmod::Error.
TEST(Parsers, FuzzTotality) {
  Gen g(14);
  std::string alphabet = "0123456789 .-+eE:\n\tRTP_rect02abcCarVn#\xff";
  alphabet.push_back('\0');
  const std::string seeds[] = {"P_rect_02: 1 0 0 0 0 1 0 0 0 0 1 0\nR_rect_00: 1 0 0 0 1 0 0 0 1\n",
                               "R: 1 0 0 0 1 0 0 0 1\nT: 0 0 0\n", "0 1 Car 1 1 1 4 2 2 0\n",
                               "49.0 8.4 110.0 0 0 0\n"};
  for (int i = 0; i < 3000; ++i) {
    std::string s = seeds[i % 4];
    const int edits = g.integer(0, 8);
    for (int e = 0; e < edits && !s.empty(); ++e) {
      const auto pos = static_cast<std::size_t>(g.integer(0, static_cast<int>(s.size()) - 1));
      const char ch = alphabet[static_cast<std::size_t>(g.integer(0, static_cast<int>(alphabet.size()) - 1))];
      switch (g.integer(0, 2)) {
        case 0: s[pos] = ch; break;
        case 1: s.insert(pos, 1, ch); break;
        default: s.erase(pos, 1); break;
      }
    }
    auto total = [&](auto&& fn) {
      try {
        fn();
      } catch (const Error&) {
      } catch (...) {
        ADD_FAILURE() << "non-structured exception for input: " << s;
      }
    };
    total([&] { parse_cam(s); });
    total([&] { parse_ext(s); });
    total([&] { parse_doc(s); });
    total([&] { parse_oxts_line(s); });
    total([&] { parse_timestamp(s); });
  }
}

TEST(LoadCalibration, MissingFileIsNamed) {
  const auto dir = std::filesystem::temp_directory_path() / "bevmod_ingest_missing";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "calib_cam_to_cam.txt") << "P_rect_02: 1 0 0 0 0 1 0 0 0 0 1 0\nR_rect_00: 1 0 0 0 1 0 0 0 1\n";
  std::filesystem::remove(dir / "calib_velo_to_cam.txt");
  try {
    load_calibration(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
    EXPECT_NE(std::string(e.what()).find("calib_velo_to_cam.txt"), std::string::npos);
  }
}

}  // namespace
}  // namespace bevmod
