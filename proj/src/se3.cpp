#include "mf/se3.h"

#include <cmath>

#include "mf/error.h"

namespace mf {

namespace {
constexpr double kSmallAngle = 1e-8;
constexpr double kOrthoTolerance = 1e-9;
constexpr int kMaxChain = 100;
}  // namespace

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

Se3Pose::Se3Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  const double err = orthonormality_error();
  if (err > 1e-6 || rotation_.determinant() < 0)
    throw Error("Se3Pose: rotation is not orthonormal");
  if (err > kOrthoTolerance) orthonormalize();
}

Se3Pose Se3Pose::exp(const Vector6d& twist) {
  const Eigen::Vector3d v = twist.head<3>();
  const Eigen::Vector3d omega = twist.tail<3>();
  const double theta = omega.norm();

  Se3Pose out;
  if (theta < kSmallAngle) {
    out.rotation_ = Eigen::Matrix3d::Identity() + skew(omega);
    out.translation_ = v + 0.5 * omega.cross(v);
    out.orthonormalize();
    return out;
  }

  const Eigen::Matrix3d w = skew(omega);
  const Eigen::Matrix3d w2 = w * w;
  const double s = std::sin(theta), c = std::cos(theta);
  out.rotation_ = Eigen::Matrix3d::Identity() + (s / theta) * w + ((1.0 - c) / (theta * theta)) * w2;
  const Eigen::Matrix3d V = Eigen::Matrix3d::Identity() + ((1.0 - c) / (theta * theta)) * w +
                            ((theta - s) / (theta * theta * theta)) * w2;
  out.translation_ = V * v;
  return out;
}

Se3Pose Se3Pose::operator*(const Se3Pose& rhs) const {
  Se3Pose out;
  out.rotation_ = rotation_ * rhs.rotation_;
  out.translation_ = rotation_ * rhs.translation_ + translation_;
  out.chain_ = chain_ + rhs.chain_ + 1;
  if (out.chain_ > kMaxChain) out.orthonormalize();
  return out;
}

Se3Pose Se3Pose::inverse() const {
  Se3Pose out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  out.chain_ = chain_;
  return out;
}

double Se3Pose::angle() const {
  const double c = std::clamp((rotation_.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

double Se3Pose::orthonormality_error() const {
  return (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity()).norm();
}

void Se3Pose::orthonormalize() {
  // Gram-Schmidt on the columns, then fix handedness.
  Eigen::Vector3d c0 = rotation_.col(0).normalized();
  Eigen::Vector3d c1 = (rotation_.col(1) - c0 * c0.dot(rotation_.col(1))).normalized();
  Eigen::Vector3d c2 = c0.cross(c1);
  rotation_.col(0) = c0;
  rotation_.col(1) = c1;
  rotation_.col(2) = c2;
  chain_ = 0;
}

}  // namespace mf
