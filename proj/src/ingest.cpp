#include "bevmod/ingest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "bevmod/error.hpp"
#include "bevmod/text.hpp"

namespace bevmod {
namespace {

constexpr double kExtrinsicTolerance = 1e-3;
constexpr double kRectTolerance = 1e-6;

// key -> raw value text, for `key: v1 v2 ...` files. Later duplicates win.
std::map<std::string, std::string, std::less<>> read_keyed_lines(std::istream& in) {
  std::map<std::string, std::string, std::less<>> entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const auto key = text::trim(std::string_view(line).substr(0, colon));
    if (key.empty()) continue;
    entries[std::string(key)] = std::string(std::string_view(line).substr(colon + 1));
  }
  return entries;
}

std::vector<double> numbers_for(const std::map<std::string, std::string, std::less<>>& entries,
                                std::string_view key, std::size_t expected) {
  const auto it = entries.find(key);
  if (it == entries.end()) throw Error(ErrorCode::kMissingField, "missing key '" + std::string(key) + "'");
  const auto tokens = text::split_ws(it->second);
  if (tokens.size() != expected) {
    throw Error(ErrorCode::kMalformedLine, "key '" + std::string(key) + "' expects " +
                                               std::to_string(expected) + " values, got " +
                                               std::to_string(tokens.size()));
  }
  std::vector<double> values;
  values.reserve(expected);
  for (auto token : tokens) {
    const auto v = text::parse_double(token);
    if (!v || !std::isfinite(*v)) {
      throw Error(ErrorCode::kMalformedLine,
                  "key '" + std::string(key) + "' has non-numeric value '" + std::string(token) + "'");
    }
    values.push_back(*v);
  }
  return values;
}

template <int Rows, int Cols>
Eigen::Matrix<double, Rows, Cols> row_major(const std::vector<double>& v) {
  Eigen::Matrix<double, Rows, Cols> m;
  for (int r = 0; r < Rows; ++r)
    for (int c = 0; c < Cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * Cols + c)];
  return m;
}

template <typename Derived>
void write_row_major(std::ostream& out, std::string_view key, const Eigen::MatrixBase<Derived>& m) {
  out << key << ':';
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out << ' ' << text::format_double(m(r, c));
  out << '\n';
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(ObjectClass cls) {
  switch (cls) {
    case ObjectClass::kCar: return "Car";
    case ObjectClass::kTruck: return "Truck";
    case ObjectClass::kVan: return "Van";
    case ObjectClass::kPedestrian: return "Pedestrian";
    case ObjectClass::kCyclist: return "Cyclist";
  }
  return "Unknown";
}

std::optional<ObjectClass> parse_object_class(std::string_view name) {
  for (auto cls : kAllObjectClasses)
    if (to_string(cls) == name) return cls;
  return std::nullopt;
}

CameraCalibration parse_cam_calib(std::istream& in) {
  const auto entries = read_keyed_lines(in);
  CameraCalibration calib;
  calib.projection = row_major<3, 4>(numbers_for(entries, "P_rect_02", 12));
  calib.rect_rotation = row_major<3, 3>(numbers_for(entries, "R_rect_00", 9));
  if (calib.projection(0, 0) == 0.0 || calib.projection(1, 1) == 0.0) {
    throw Error(ErrorCode::kMalformedLine, "P_rect_02 has a zero focal entry");
  }
  if (orthonormality_drift(calib.rect_rotation) > kRectTolerance ||
      calib.rect_rotation.determinant() < 0.0) {
    throw Error(ErrorCode::kBadRotation, "R_rect_00 is not a rotation");
  }
  return calib;
}

void write_cam_calib(std::ostream& out, const CameraCalibration& calib) {
  write_row_major(out, "R_rect_00", calib.rect_rotation);
  write_row_major(out, "P_rect_02", calib.projection);
}

RigidTransform parse_extrinsic(std::istream& in, std::string_view key_r, std::string_view key_t) {
  const auto entries = read_keyed_lines(in);
  const auto r = row_major<3, 3>(numbers_for(entries, key_r, 9));
  const auto t = numbers_for(entries, key_t, 3);
  return RigidTransform::from_parts(r, Eigen::Vector3d(t[0], t[1], t[2]), kExtrinsicTolerance);
}

void write_extrinsic(std::ostream& out, const RigidTransform& transform) {
  write_row_major(out, "R", transform.rotation());
  write_row_major(out, "T", transform.translation().transpose());
}

OxtsRecord parse_oxts_line(std::string_view line, double timestamp) {
  const auto tokens = text::split_ws(line);
  if (tokens.size() < 6) {
    throw Error(ErrorCode::kMalformedLine,
                "GPS/IMU line has " + std::to_string(tokens.size()) + " fields, need at least 6");
  }
  std::array<double, 6> v{};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto parsed = text::parse_double(tokens[i]);
    if (!parsed || !std::isfinite(*parsed)) {
      throw Error(ErrorCode::kMalformedLine, "GPS/IMU field " + std::to_string(i + 1) +
                                                 " is not a finite number: '" + std::string(tokens[i]) + "'");
    }
    v[i] = *parsed;
  }
  if (v[0] < -90.0 || v[0] > 90.0) throw Error(ErrorCode::kMalformedLine, "latitude out of range");
  if (v[1] < -180.0 || v[1] > 180.0) throw Error(ErrorCode::kMalformedLine, "longitude out of range");
  return OxtsRecord{v[0], v[1], v[2], v[3], v[4], v[5], timestamp};
}

namespace {

struct SplitTime {
  long long whole = 0;  // seconds since the epoch
  double fraction = 0.0;
};

SplitTime split_timestamp(std::string_view raw) {
  const auto s = text::trim(raw);
  auto fail = [&]() -> Error {
    return Error(ErrorCode::kMalformedLine, "bad timestamp '" + std::string(s) + "'");
  };
  // YYYY-MM-DD HH:MM:SS[.f]
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' ||
      s[16] != ':') {
    throw fail();
  }
  const auto year = text::parse_int(s.substr(0, 4));
  const auto month = text::parse_int(s.substr(5, 2));
  const auto day = text::parse_int(s.substr(8, 2));
  const auto hour = text::parse_int(s.substr(11, 2));
  const auto minute = text::parse_int(s.substr(14, 2));
  const auto second = text::parse_double(s.substr(17));
  if (!year || !month || !day || !hour || !minute || !second) throw fail();
  const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(*year)),
                                        std::chrono::month(static_cast<unsigned>(*month)),
                                        std::chrono::day(static_cast<unsigned>(*day))};
  if (!ymd.ok() || *hour > 23 || *minute > 59 || *second < 0.0 || *second >= 61.0) throw fail();
  const long long days = std::chrono::sys_days(ymd).time_since_epoch().count();
  const double whole_sec = std::floor(*second);
  return {days * 86400 + *hour * 3600 + *minute * 60 + static_cast<long long>(whole_sec), *second - whole_sec};
}

}  // namespace

double parse_timestamp(std::string_view raw) {
  const SplitTime t = split_timestamp(raw);
  return static_cast<double>(t.whole) + t.fraction;
}

std::vector<double> parse_timestamps(std::istream& in) {
  std::vector<double> out;
  std::optional<SplitTime> first;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const SplitTime t = split_timestamp(line);
    if (!first) first = t;
    out.push_back(static_cast<double>(t.whole - first->whole) + (t.fraction - first->fraction));
  }
  return out;
}

TrackletParseResult parse_tracklets(std::istream& in) {
  TrackletParseResult result;
  std::set<std::pair<int, int>> seen;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto where = "line " + std::to_string(line_number);
    const auto tokens = text::split_ws(body);
    if (tokens.size() != 10) {
      throw Error(ErrorCode::kParseError, where + ": expected 10 fields, got " + std::to_string(tokens.size()));
    }
    const auto frame = text::parse_int(tokens[0]);
    const auto track = text::parse_int(tokens[1]);
    if (!frame || !track || *frame < 0 || *track < 0 || *frame > INT32_MAX || *track > INT32_MAX) {
      throw Error(ErrorCode::kParseError, where + ": bad frame or track id");
    }
    std::array<double, 7> v{};
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto parsed = text::parse_double(tokens[3 + i]);
      if (!parsed || !std::isfinite(*parsed)) {
        throw Error(ErrorCode::kParseError, where + ": bad number '" + std::string(tokens[3 + i]) + "'");
      }
      v[i] = *parsed;
    }
    if (v[3] <= 0.0 || v[4] <= 0.0 || v[5] <= 0.0) {
      throw Error(ErrorCode::kParseError, where + ": box dimensions must be positive");
    }
    const auto cls = parse_object_class(tokens[2]);
    if (!cls) {
      result.diagnostics.push_back(
          {line_number, "UnknownClass: '" + std::string(tokens[2]) + "' skipped"});
      continue;
    }
    if (!seen.emplace(static_cast<int>(*track), static_cast<int>(*frame)).second) {
      throw Error(ErrorCode::kParseError, where + ": duplicate (track, frame) entry");
    }
    TrackedBox box;
    box.frame_index = static_cast<int>(*frame);
    box.track_id = static_cast<int>(*track);
    box.object_class = *cls;
    box.center = Eigen::Vector3d(v[0], v[1], v[2]);
    box.dims = BoxDims{v[3], v[4], v[5]};
    box.yaw = v[6];
    box.frame = BoxFrame::kVelodyne;
    result.boxes.push_back(box);
  }
  std::sort(result.boxes.begin(), result.boxes.end(), [](const TrackedBox& a, const TrackedBox& b) {
    return std::pair(a.track_id, a.frame_index) < std::pair(b.track_id, b.frame_index);
  });
  return result;
}

void write_tracklets(std::ostream& out, std::span<const TrackedBox> boxes) {
  out << "# frame track_id class cx cy cz l w h yaw\n";
  for (const auto& b : boxes) {
    out << b.frame_index << ' ' << b.track_id << ' ' << to_string(b.object_class);
    for (double v : {b.center.x(), b.center.y(), b.center.z(), b.dims.length, b.dims.width,
                     b.dims.height, b.yaw}) {
      out << ' ' << text::format_double(v);
    }
    out << '\n';
  }
}

CalibrationSet load_calibration(const std::filesystem::path& dir) {
  CalibrationSet set;
  auto read = [&](const char* name, auto&& parse) {
    const auto path = dir / name;
    auto in = open_or_throw(path);
    try {
      parse(in);
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": " + e.what());
    }
  };
  read("calib_cam_to_cam.txt", [&](std::istream& in) {
    const auto cam = parse_cam_calib(in);
    set.cam_projection = cam.projection;
    set.rect_rotation = cam.rect_rotation;
  });
  read("calib_velo_to_cam.txt", [&](std::istream& in) { set.velo_to_cam = parse_extrinsic(in); });
  read("calib_imu_to_velo.txt", [&](std::istream& in) { set.imu_to_velo = parse_extrinsic(in); });
  return set;
}

std::vector<OxtsRecord> load_oxts_sequence(const std::filesystem::path& sequence_dir) {
  const auto stamps_path = sequence_dir / "oxts" / "timestamps.txt";
  auto stamps_in = open_or_throw(stamps_path);
  const auto stamps = parse_timestamps(stamps_in);
  std::vector<OxtsRecord> records;
  records.reserve(stamps.size());
  for (std::size_t i = 0; i < stamps.size(); ++i) {
    std::ostringstream name;
    name.width(10);
    name.fill('0');
    name << i;
    const auto path = sequence_dir / "oxts" / "data" / (name.str() + ".txt");
    auto in = open_or_throw(path);
    std::string line;
    std::getline(in, line);
    try {
      records.push_back(parse_oxts_line(line, stamps[i]));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": " + e.what());
    }
  }
  return records;
}

}  // namespace bevmod
