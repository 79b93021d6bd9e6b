#include "bevmod/rigid_transform.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "bevmod/error.hpp"
#include "bevmod/text.hpp"

namespace bevmod {

double orthonormality_drift(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Eigen::Matrix3d rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Eigen::Matrix3d rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Eigen::Matrix3d rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Eigen::Matrix3d euler_zyx(double yaw, double pitch, double roll) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

RigidTransform::RigidTransform()
    : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

RigidTransform RigidTransform::from_parts(const Eigen::Matrix3d& rotation,
                                          const Eigen::Vector3d& translation, double tolerance) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorCode::kBadRotation, "non-finite transform entries");
  }
  const double drift = orthonormality_drift(rotation);
  if (drift > tolerance) {
    throw Error(ErrorCode::kBadRotation,
                "rotation is not orthonormal (drift " + text::format_double(drift) + ")");
  }
  if (rotation.determinant() < 0.0) {
    throw Error(ErrorCode::kBadRotation, "rotation has determinant -1 (reflection)");
  }
  if (drift > kProjectionThreshold) return RigidTransform(nearest_rotation(rotation), translation);
  return RigidTransform(rotation, translation);
}

RigidTransform RigidTransform::from_translation(const Eigen::Vector3d& translation) {
  return RigidTransform(Eigen::Matrix3d::Identity(), translation);
}

RigidTransform RigidTransform::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return RigidTransform(rt, -(rt * translation_));
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  return from_parts(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
}

}  // namespace bevmod
