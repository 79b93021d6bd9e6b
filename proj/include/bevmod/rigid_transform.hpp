#pragma once

#include <Eigen/Core>

namespace bevmod {

// Largest |(RᵀR − I)_ij|.
double orthonormality_drift(const Eigen::Matrix3d& r);
// Nearest proper rotation in the Frobenius sense (SVD polar factor).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& r);

Eigen::Matrix3d rot_x(double angle);
Eigen::Matrix3d rot_y(double angle);
Eigen::Matrix3d rot_z(double angle);
// Rz(yaw)·Ry(pitch)·Rx(roll).
Eigen::Matrix3d euler_zyx(double yaw, double pitch, double roll);

/// SE(3) element p ↦ R·p + t. Construction guarantees RᵀR = I within 1e-9
/// and det R = +1: inputs drifting more than 1e-9 are projected back onto
/// SO(3), inputs drifting more than the caller's tolerance are rejected
/// with BadRotation.
class RigidTransform {
 public:
  static constexpr double kProjectionThreshold = 1e-9;
  static constexpr double kDefaultTolerance = 1e-6;

  RigidTransform();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_parts(const Eigen::Matrix3d& rotation,
                                   const Eigen::Vector3d& translation,
                                   double tolerance = kDefaultTolerance);
  static RigidTransform from_translation(const Eigen::Vector3d& translation);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }
  RigidTransform inverse() const;

  // this ∘ other: applies `other` first.
  RigidTransform operator*(const RigidTransform& other) const;

  bool operator==(const RigidTransform&) const = default;

 private:
  RigidTransform(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) : rotation_(r), translation_(t) {}

  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }
inline RigidTransform invert(const RigidTransform& a) { return a.inverse(); }
inline Eigen::Vector3d apply(const RigidTransform& a, const Eigen::Vector3d& p) { return a.apply(p); }

}  // namespace bevmod
