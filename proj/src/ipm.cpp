#include "bevmod/ipm.hpp"

#include <array>
#include <cmath>
#include <istream>
#include <string>

#include <Eigen/Dense>

#include "bevmod/error.hpp"
#include "bevmod/text.hpp"

namespace bevmod {
namespace {

constexpr double kHorizonEps = 1e-12;
constexpr double kCollinearArea = 1e-9;

Eigen::Matrix3d normalized(const Eigen::Matrix3d& h) {
  const double norm = h.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kDegeneratePoints, "homography is zero or non-finite");
  }
  Eigen::Matrix3d out = h / norm;
  const double significant = out.cwiseAbs().maxCoeff() * 1e-12;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (std::abs(out(r, c)) > significant) {
        if (out(r, c) < 0.0) out = -out;
        return out;
      }
    }
  }
  return out;
}

void check_no_three_collinear(std::span<const Correspondence> pairs, bool source) {
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      for (std::size_t k = j + 1; k < 4; ++k) {
        const auto& a = source ? pairs[i].src : pairs[i].dst;
        const auto& b = source ? pairs[j].src : pairs[j].dst;
        const auto& c = source ? pairs[k].src : pairs[k].dst;
        const double area = 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
        if (!(area > kCollinearArea)) {
          throw Error(ErrorCode::kDegeneratePoints,
                      std::string(source ? "source" : "destination") + " points " + std::to_string(i) + ", " +
                          std::to_string(j) + ", " + std::to_string(k) + " are collinear");
        }
      }
    }
  }
}

// Similarity taking the points' centroid to the origin and their mean
// distance from it to √2.
Eigen::Matrix3d conditioning(const std::array<Eigen::Vector2d, 4>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= 4.0;
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= 4.0;
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

Eigen::Vector2d transform(const Eigen::Matrix3d& t, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = t * p.homogeneous();
  return q.hnormalized();
}

template <typename SourceCoords>
void sample_into(const ClassImage& src, ClassImage& dst, SourceCoords&& source_of) {
  for (int r = 0; r < dst.height; ++r) {
    for (int c = 0; c < dst.width; ++c) {
      const std::optional<Eigen::Vector2d> uv = source_of(r, c);
      if (!uv) continue;
      const double u = std::floor(uv->x() + 0.5);
      const double v = std::floor(uv->y() + 0.5);
      if (u >= 0.0 && v >= 0.0 && u < src.width && v < src.height) {
        dst.at(r, c) = src.at(static_cast<int>(v), static_cast<int>(u));
      }
    }
  }
}

}  // namespace

Homography::Homography() : h_(normalized(Eigen::Matrix3d::Identity())) {}

Homography Homography::from_matrix(const Eigen::Matrix3d& h) {
  const Eigen::Matrix3d n = normalized(h);
  if (!(std::abs(n.determinant()) > 1e-12)) {
    throw Error(ErrorCode::kDegeneratePoints, "homography is rank deficient");
  }
  return Homography(n);
}

Homography Homography::inverse() const { return from_matrix(h_.inverse()); }

Homography Homography::operator*(const Homography& other) const { return from_matrix(h_ * other.h_); }

std::optional<Eigen::Vector2d> Homography::try_apply(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d q = h_ * p.homogeneous();
  if (std::abs(q.z()) < kHorizonEps) return std::nullopt;
  return Eigen::Vector2d(q.x() / q.z(), q.y() / q.z());
}

Eigen::Vector2d Homography::apply(const Eigen::Vector2d& p) const {
  auto q = try_apply(p);
  if (!q) throw Error(ErrorCode::kHorizonPoint, "point maps to the line at infinity");
  return *q;
}

Homography estimate_homography(std::span<const Correspondence> pairs) {
  if (pairs.size() != 4) {
    throw Error(ErrorCode::kDegeneratePoints, "exactly 4 correspondences required, got " +
                                                  std::to_string(pairs.size()));
  }
  for (const auto& p : pairs) {
    if (!p.src.allFinite() || !p.dst.allFinite()) {
      throw Error(ErrorCode::kDegeneratePoints, "non-finite correspondence");
    }
  }
  check_no_three_collinear(pairs, true);
  check_no_three_collinear(pairs, false);

  std::array<Eigen::Vector2d, 4> src, dst;
  for (std::size_t i = 0; i < 4; ++i) {
    src[i] = pairs[i].src;
    dst[i] = pairs[i].dst;
  }
  const Eigen::Matrix3d t_src = conditioning(src);
  const Eigen::Matrix3d t_dst = conditioning(dst);

  Eigen::Matrix<double, 8, 9> a;
  for (int i = 0; i < 4; ++i) {
    const auto p = transform(t_src, src[static_cast<std::size_t>(i)]);
    const auto q = transform(t_dst, dst[static_cast<std::size_t>(i)]);
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Eigen::Matrix3d conditioned;
  conditioned << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography::from_matrix(t_dst.inverse() * conditioned * t_src);
}

ClassImage warp_image(const ClassImage& src, const Homography& src_to_dst, int out_height, int out_width) {
  ClassImage dst(out_height, out_width);
  const Homography back = src_to_dst.inverse();
  sample_into(src, dst, [&](int r, int c) { return back.try_apply(Eigen::Vector2d(c, r)); });
  return dst;
}

Homography grid_to_metric(const GridSpec& spec) {
  Eigen::Matrix3d a;
  a << spec.resolution, 0, spec.x_min + 0.5 * spec.resolution, 0, -spec.resolution,
      spec.z_max - 0.5 * spec.resolution, 0, 0, 1;
  return Homography::from_matrix(a);
}

BevGrid warp_mask(const ClassImage& front_mask, const Homography& image_to_bev, const GridSpec& spec) {
  BevGrid grid(spec);
  const Homography back = image_to_bev.inverse();
  sample_into(front_mask, grid.cells, [&](int r, int c) {
    return back.try_apply(Eigen::Vector2d(spec.cell_center_x(c), spec.cell_center_z(r)));
  });
  return grid;
}

IouReport ipm_baseline(const ClassImage& front_mask, const Homography& image_to_bev, const GridSpec& spec,
                       const BevGrid& gt, MiouMode mode) {
  return iou_report(accumulate(warp_mask(front_mask, image_to_bev, spec), gt), mode);
}

Correspondence parse_correspondence(std::string_view raw) {
  std::string s(raw);
  for (auto& ch : s)
    if (ch == ',') ch = ' ';
  const auto tokens = text::split_ws(s);
  if (tokens.size() != 4) {
    throw Error(ErrorCode::kMalformedLine, "correspondence needs u,v,x,z: '" + std::string(raw) + "'");
  }
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto parsed = text::parse_double(tokens[i]);
    if (!parsed || !std::isfinite(*parsed)) {
      throw Error(ErrorCode::kMalformedLine, "bad correspondence value '" + std::string(tokens[i]) + "'");
    }
    v[i] = *parsed;
  }
  return Correspondence{Eigen::Vector2d(v[0], v[1]), Eigen::Vector2d(v[2], v[3])};
}

std::vector<Correspondence> parse_correspondences(std::istream& in) {
  std::vector<Correspondence> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    out.push_back(parse_correspondence(body));
  }
  return out;
}

std::string format_homography(const Homography& h) {
  std::string out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (!out.empty()) out += ' ';
      out += text::format_double(h.matrix()(r, c));
    }
  }
  return out;
}

}  // namespace bevmod
