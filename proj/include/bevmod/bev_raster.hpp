#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bevmod/ingest.hpp"
#include "bevmod/motion_labeling.hpp"
#include "bevmod/png_io.hpp"

namespace bevmod {

enum class CellClass : std::uint8_t { kBackground = 0, kStatic = 1, kMoving = 2 };

CellClass to_cell_class(Verdict verdict);

// Row-major class raster; used for both BEV grids and front-view masks.
struct ClassImage {
  int height = 0;
  int width = 0;
  std::vector<CellClass> cells;

  ClassImage() = default;
  ClassImage(int h, int w, CellClass fill = CellClass::kBackground);

  CellClass& at(int row, int col) { return cells[static_cast<std::size_t>(row) * width + col]; }
  CellClass at(int row, int col) const { return cells[static_cast<std::size_t>(row) * width + col]; }

  bool operator==(const ClassImage&) const = default;
};

/// Metric extent of a BEV grid over the camera xz plane. Row 0 is the
/// farthest z, column 0 the leftmost x; cell (r, c) has its center at
/// x = x_min + (c + ½)·res, z = z_max − (r + ½)·res.
struct GridSpec {
  double x_min = -25.0;
  double x_max = 25.0;
  double z_min = 0.0;
  double z_max = 50.0;
  double resolution = 0.2;
  int height = 250;
  int width = 250;

  // Throws BadConfig unless both extents are integral multiples of the
  // resolution (within 1e-9 cells).
  static GridSpec make(double x_min, double x_max, double z_min, double z_max, double resolution);
  // Lateral ±half_width, forward [0, max_range].
  static GridSpec make(double resolution = 0.2, double max_range = 50.0, double half_width = 25.0);

  double cell_center_x(int col) const { return x_min + (col + 0.5) * resolution; }
  double cell_center_z(int row) const { return z_max - (row + 0.5) * resolution; }

  bool operator==(const GridSpec&) const = default;
};

struct BevGrid {
  GridSpec spec;
  ClassImage cells;

  explicit BevGrid(const GridSpec& s) : spec(s), cells(s.height, s.width) {}

  CellClass& at(int row, int col) { return cells.at(row, col); }
  CellClass at(int row, int col) const { return cells.at(row, col); }

  bool operator==(const BevGrid&) const = default;
};

using Polygon2 = std::vector<Eigen::Vector2d>;  // (x, z) vertices

struct LabeledFootprint {
  Polygon2 polygon;
  Verdict verdict = Verdict::kStatic;
};

// Bottom face of a camera-frame box projected onto (x, z), counter-clockwise.
std::array<Eigen::Vector2d, 4> footprint(const TrackedBox& camera_box);

// Paints every cell whose center lies in the closed convex polygon.
// Moving wins over Static wherever footprints overlap, independent of
// input order. Degenerate (zero-area) polygons paint nothing.
BevGrid rasterize(std::span<const LabeledFootprint> footprints, const GridSpec& spec);

// Moving = red, Static = blue, Background = black. With `ego_marker` a
// green disc is drawn at the bottom-center, over background pixels only.
RgbImage render_rgb(const ClassImage& image, bool ego_marker);
std::vector<std::uint8_t> render_png(const BevGrid& grid);
// Inverse palette; green decodes as Background. Other colors are ParseError.
ClassImage classes_from_rgb(const RgbImage& image);
ClassImage decode_class_png(std::span<const std::uint8_t> bytes);

// `BEVGRID v1 height width resolution\n` followed by one byte per cell.
void write_mask(std::ostream& out, const BevGrid& grid);
// The grid is reconstructed as x ∈ ±width·res/2, z ∈ [0, height·res].
BevGrid read_mask(std::istream& in);

}  // namespace bevmod
