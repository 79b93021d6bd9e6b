#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bevmod/bev_raster.hpp"
#include "bevmod/eval.hpp"

namespace bevmod {

struct Correspondence {
  Eigen::Vector2d src;  // (u, v) image pixels
  Eigen::Vector2d dst;  // (x, z) BEV meters
};

/// Projective plane map, stored scale-normalized: unit Frobenius norm and
/// the first significant entry (row-major) positive. Two homographies that
/// differ only by scale normalize to the same bits.
class Homography {
 public:
  Homography();  // identity

  // Throws DegeneratePoints unless |det| > 1e-12 after normalization.
  static Homography from_matrix(const Eigen::Matrix3d& h);

  const Eigen::Matrix3d& matrix() const { return h_; }

  Homography inverse() const;
  // this ∘ other: applies `other` first.
  Homography operator*(const Homography& other) const;

  // Throws HorizonPoint when |w| < 1e-12.
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
  std::optional<Eigen::Vector2d> try_apply(const Eigen::Vector2d& p) const;

 private:
  explicit Homography(const Eigen::Matrix3d& h) : h_(h) {}
  Eigen::Matrix3d h_;
};

// Four-point DLT with Hartley conditioning. Throws DegeneratePoints when
// fewer or more than 4 pairs are given or any three source (or destination)
// points are collinear (triangle area <= 1e-9).
Homography estimate_homography(std::span<const Correspondence> pairs);

inline Eigen::Vector2d apply_homography(const Homography& h, const Eigen::Vector2d& p) { return h.apply(p); }

// Nearest-neighbour inverse warp between pixel grids. Pixel (r, c) has its
// center at (c, r); `src_to_dst` maps source pixel coordinates to
// destination pixel coordinates. Cells that map outside the source or to
// the horizon become Background.
ClassImage warp_image(const ClassImage& src, const Homography& src_to_dst, int out_height, int out_width);

// Cell-center → pixel affine map of a grid: metric (x, z) of cell (r, c)
// is grid_to_metric · (c, r, 1).
Homography grid_to_metric(const GridSpec& spec);

// `image_to_bev` maps image pixels to BEV meters. Each cell center is sent
// back through its inverse and sampled nearest-neighbour.
BevGrid warp_mask(const ClassImage& front_mask, const Homography& image_to_bev, const GridSpec& spec);

// Warp, then score against `gt` (which must share `spec`).
IouReport ipm_baseline(const ClassImage& front_mask, const Homography& image_to_bev, const GridSpec& spec,
                       const BevGrid& gt, MiouMode mode = MiouMode::kMeanOfTwo);

// Four lines `u v x z` (whitespace or comma separated), `#` comments.
std::vector<Correspondence> parse_correspondences(std::istream& in);
// `u,v,x,z`.
Correspondence parse_correspondence(std::string_view text);
// Nine row-major entries separated by spaces.
std::string format_homography(const Homography& h);

}  // namespace bevmod
