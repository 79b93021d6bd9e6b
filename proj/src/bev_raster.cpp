#include "bevmod/bev_raster.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include "bevmod/error.hpp"
#include "bevmod/geometry.hpp"
#include "bevmod/text.hpp"

namespace bevmod {
namespace {

int checked_cells(double extent, double resolution, const char* axis) {
  const double cells = extent / resolution;
  const double rounded = std::round(cells);
  if (!(rounded >= 1.0) || std::abs(cells - rounded) > 1e-9 || rounded > 1e6) {
    throw Error(ErrorCode::kBadConfig, std::string(axis) + " extent is not an integral number of cells");
  }
  return static_cast<int>(rounded);
}

double signed_area(const Polygon2& poly) {
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    area += p.x() * q.y() - q.x() * p.y();
  }
  return area / 2.0;
}

// Closed half-plane test against every edge of a counter-clockwise polygon.
bool contains(const Polygon2& ccw, double x, double z) {
  for (std::size_t i = 0; i < ccw.size(); ++i) {
    const auto& p = ccw[i];
    const auto& q = ccw[(i + 1) % ccw.size()];
    if ((q.x() - p.x()) * (z - p.y()) - (q.y() - p.y()) * (x - p.x()) < 0.0) return false;
  }
  return true;
}

void paint(BevGrid& grid, const Polygon2& polygon, CellClass cls) {
  if (polygon.size() < 3) return;
  const double area = signed_area(polygon);
  if (area == 0.0) return;
  Polygon2 ccw = polygon;
  if (area < 0.0) std::reverse(ccw.begin(), ccw.end());

  const auto& spec = grid.spec;
  double zlo = ccw[0].y(), zhi = ccw[0].y();
  for (const auto& v : ccw) {
    zlo = std::min(zlo, v.y());
    zhi = std::max(zhi, v.y());
  }
  // One spare row each side; rows the polygon misses get an empty span.
  const double first = std::floor((spec.z_max - zhi) / spec.resolution - 0.5) - 1.0;
  const double last = std::ceil((spec.z_max - zlo) / spec.resolution - 0.5) + 1.0;
  if (!(last >= 0.0) || !(first <= spec.height - 1.0)) return;
  const int row_first = static_cast<int>(std::max(0.0, first));
  const int row_last = static_cast<int>(std::min(spec.height - 1.0, last));

  for (int row = row_first; row <= row_last; ++row) {
    const double z = spec.cell_center_z(row);
    double xl = INFINITY, xr = -INFINITY;
    for (std::size_t i = 0; i < ccw.size(); ++i) {
      const auto& p = ccw[i];
      const auto& q = ccw[(i + 1) % ccw.size()];
      if ((z < p.y() && z < q.y()) || (z > p.y() && z > q.y())) continue;
      if (p.y() == q.y()) {
        xl = std::min({xl, p.x(), q.x()});
        xr = std::max({xr, p.x(), q.x()});
      } else {
        const double x = p.x() + (z - p.y()) * (q.x() - p.x()) / (q.y() - p.y());
        xl = std::min(xl, x);
        xr = std::max(xr, x);
      }
    }
    if (xl > xr) continue;
    const double max_col = spec.width - 1.0;
    int c0 = static_cast<int>(std::clamp(std::ceil((xl - spec.x_min) / spec.resolution - 0.5), 0.0, max_col));
    int c1 = static_cast<int>(std::clamp(std::floor((xr - spec.x_min) / spec.resolution - 0.5), 0.0, max_col));
    // Settle the span ends with the exact inclusion predicate so boundary
    // cells agree with a per-cell test.
    while (c0 > 0 && contains(ccw, spec.cell_center_x(c0 - 1), z)) --c0;
    while (c0 <= c1 && !contains(ccw, spec.cell_center_x(c0), z)) ++c0;
    while (c1 + 1 < spec.width && c1 >= c0 && contains(ccw, spec.cell_center_x(c1 + 1), z)) ++c1;
    while (c1 >= c0 && !contains(ccw, spec.cell_center_x(c1), z)) --c1;
    for (int col = c0; col <= c1; ++col) {
      auto& cell = grid.at(row, col);
      if (static_cast<int>(cls) > static_cast<int>(cell)) cell = cls;
    }
  }
}

constexpr std::uint8_t kRed[3] = {255, 0, 0};
constexpr std::uint8_t kBlue[3] = {0, 0, 255};
constexpr std::uint8_t kGreen[3] = {0, 255, 0};

}  // namespace

CellClass to_cell_class(Verdict verdict) {
  return verdict == Verdict::kMoving ? CellClass::kMoving : CellClass::kStatic;
}

ClassImage::ClassImage(int h, int w, CellClass fill)
    : height(h), width(w), cells(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {
  if (h < 0 || w < 0) throw Error(ErrorCode::kShapeError, "negative image size");
}

GridSpec GridSpec::make(double x_min, double x_max, double z_min, double z_max, double resolution) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw Error(ErrorCode::kBadConfig, "resolution must be positive");
  }
  GridSpec spec;
  spec.x_min = x_min;
  spec.x_max = x_max;
  spec.z_min = z_min;
  spec.z_max = z_max;
  spec.resolution = resolution;
  spec.width = checked_cells(x_max - x_min, resolution, "lateral");
  spec.height = checked_cells(z_max - z_min, resolution, "forward");
  return spec;
}

GridSpec GridSpec::make(double resolution, double max_range, double half_width) {
  return make(-half_width, half_width, 0.0, max_range, resolution);
}

std::array<Eigen::Vector2d, 4> footprint(const TrackedBox& camera_box) {
  const auto corners = box_corners(camera_box);
  return {Eigen::Vector2d(corners[0].x(), corners[0].z()), Eigen::Vector2d(corners[1].x(), corners[1].z()),
          Eigen::Vector2d(corners[2].x(), corners[2].z()), Eigen::Vector2d(corners[3].x(), corners[3].z())};
}

BevGrid rasterize(std::span<const LabeledFootprint> footprints, const GridSpec& spec) {
  BevGrid grid(spec);
  for (const auto& fp : footprints) paint(grid, fp.polygon, to_cell_class(fp.verdict));
  return grid;
}

RgbImage render_rgb(const ClassImage& image, bool ego_marker) {
  RgbImage rgb;
  rgb.width = image.width;
  rgb.height = image.height;
  rgb.pixels.assign(static_cast<std::size_t>(image.width) * image.height * 3, 0);
  const double radius = std::max(2.0, image.width / 50.0);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const std::uint8_t* color = nullptr;
      switch (image.at(r, c)) {
        case CellClass::kMoving: color = kRed; break;
        case CellClass::kStatic: color = kBlue; break;
        case CellClass::kBackground:
          if (ego_marker) {
            const double dx = c + 0.5 - image.width / 2.0;
            const double dy = r + 0.5 - image.height;
            if (dx * dx + dy * dy <= radius * radius) color = kGreen;
          }
          break;
      }
      if (color) std::copy(color, color + 3, rgb.pixels.begin() + (static_cast<std::ptrdiff_t>(r) * image.width + c) * 3);
    }
  }
  return rgb;
}

std::vector<std::uint8_t> render_png(const BevGrid& grid) { return encode_png(render_rgb(grid.cells, true)); }

ClassImage classes_from_rgb(const RgbImage& rgb) {
  ClassImage image(rgb.height, rgb.width);
  for (std::size_t i = 0; i < image.cells.size(); ++i) {
    const std::uint8_t* px = rgb.pixels.data() + i * 3;
    if (std::equal(px, px + 3, kRed)) {
      image.cells[i] = CellClass::kMoving;
    } else if (std::equal(px, px + 3, kBlue)) {
      image.cells[i] = CellClass::kStatic;
    } else if ((px[0] == 0 && px[1] == 0 && px[2] == 0) || std::equal(px, px + 3, kGreen)) {
      image.cells[i] = CellClass::kBackground;
    } else {
      throw Error(ErrorCode::kParseError, "pixel " + std::to_string(i) + " is not a class color");
    }
  }
  return image;
}

ClassImage decode_class_png(std::span<const std::uint8_t> bytes) { return classes_from_rgb(decode_png(bytes)); }

void write_mask(std::ostream& out, const BevGrid& grid) {
  out << "BEVGRID v1 " << grid.spec.height << ' ' << grid.spec.width << ' '
      << text::format_double(grid.spec.resolution) << '\n';
  out.write(reinterpret_cast<const char*>(grid.cells.cells.data()),
            static_cast<std::streamsize>(grid.cells.cells.size()));
}

BevGrid read_mask(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::kParseError, "empty mask stream");
  const auto tokens = text::split_ws(header);
  if (tokens.size() != 5 || tokens[0] != "BEVGRID" || tokens[1] != "v1") {
    throw Error(ErrorCode::kParseError, "bad mask header '" + header + "'");
  }
  const auto h = text::parse_int(tokens[2]);
  const auto w = text::parse_int(tokens[3]);
  const auto res = text::parse_double(tokens[4]);
  if (!h || !w || !res || *h <= 0 || *w <= 0 || *h > 100000 || *w > 100000 || !(*res > 0.0)) {
    throw Error(ErrorCode::kParseError, "bad mask dimensions");
  }
  const double half_width = static_cast<double>(*w) * *res / 2.0;
  GridSpec spec;
  spec.x_min = -half_width;
  spec.x_max = half_width;
  spec.z_min = 0.0;
  spec.z_max = static_cast<double>(*h) * *res;
  spec.resolution = *res;
  spec.height = static_cast<int>(*h);
  spec.width = static_cast<int>(*w);
  BevGrid grid(spec);
  std::vector<char> raw(grid.cells.cells.size());
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(ErrorCode::kParseError, "mask payload truncated");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorCode::kParseError, "trailing mask bytes");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto v = static_cast<unsigned char>(raw[i]);
    if (v > 2) throw Error(ErrorCode::kParseError, "cell value out of range");
    grid.cells.cells[i] = static_cast<CellClass>(v);
  }
  return grid;
}

}  // namespace bevmod
