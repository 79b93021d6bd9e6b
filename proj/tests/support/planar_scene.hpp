#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "bevmod/bev_raster.hpp"
#include "bevmod/ipm.hpp"
#include "generators.hpp"

namespace bevmod::testing {

// Forward-looking pinhole camera at `height` meters above flat ground;
// camera frame x right, y down, z forward.
struct PinholeCamera {
  double f = 721.0;
  double cu = 609.0;
  double cv = 172.0;
  double height = 1.65;
  int image_width = 1242;
  int image_height = 375;

  // Ground point (x, z) to pixel (u, v).
  Eigen::Vector2d project_ground(double x, double z) const { return {f * x / z + cu, f * height / z + cv}; }

  // Image → ground (x, z), written out from the projection above.
  Eigen::Matrix3d ground_homography() const {
    Eigen::Matrix3d h;
    h << height, 0.0, -cu * height, 0.0, 0.0, f * height, 0.0, 1.0, -cv;
    return h;
  }
};

struct ScenePlate {
  Polygon2 footprint;        // (x, z) on the ground
  double elevation = 0.0;    // plate height above the ground, meters
  Verdict verdict = Verdict::kMoving;
};

// Front-view class mask: each pixel ray is intersected with every plate's
// horizontal plane and labeled when the hit lies inside the footprint.
inline ClassImage render_front(const PinholeCamera& cam, const std::vector<ScenePlate>& plates) {
  ClassImage out(cam.image_height, cam.image_width);
  for (int v = 0; v < cam.image_height; ++v) {
    const double dv = v - cam.cv;
    if (dv <= 0.0) continue;
    for (int u = 0; u < cam.image_width; ++u) {
      for (const auto& plate : plates) {
        const double plane_y = cam.height - plate.elevation;
        if (plane_y <= 0.0) continue;
        const double z = cam.f * plane_y / dv;
        const double x = (u - cam.cu) * z / cam.f;
        if (!inside_convex(plate.footprint, {x, z})) continue;
        const CellClass k = plate.verdict == Verdict::kMoving ? CellClass::kMoving : CellClass::kStatic;
        if (static_cast<int>(k) > static_cast<int>(out.at(v, u))) out.at(v, u) = k;
      }
    }
  }
  return out;
}

// Four ground points seen by the camera, as image/BEV correspondences.
inline std::vector<Correspondence> ground_pairs(const PinholeCamera& cam) {
  std::vector<Correspondence> pairs;
  for (const auto& [x, z] : {std::pair{-6.0, 8.0}, {6.0, 8.0}, {8.0, 40.0}, {-8.0, 40.0}}) {
    pairs.push_back({cam.project_ground(x, z), {x, z}});
  }
  return pairs;
}

inline std::vector<LabeledFootprint> ground_truth(const std::vector<ScenePlate>& plates) {
  std::vector<LabeledFootprint> out;
  for (const auto& p : plates) out.push_back({p.footprint, p.verdict});
  return out;
}

}  // namespace bevmod::testing
