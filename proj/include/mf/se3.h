#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mf {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Rigid transform p -> R p + t. Composition tracks chain length and
/// re-orthonormalizes the rotation once a chain exceeds 100 links.
class Se3Pose {
 public:
  Se3Pose() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  Se3Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  /// Exponential map of a twist (v, omega); first-order series below 1e-8 angle.
  static Se3Pose exp(const Vector6d& twist);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation_ * p + translation_;
  }

  Se3Pose operator*(const Se3Pose& rhs) const;
  Se3Pose inverse() const;

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation_); }

  /// Rotation angle in radians.
  double angle() const;

  /// Frobenius distance of R^T R from the identity.
  double orthonormality_error() const;

  void orthonormalize();

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
  int chain_ = 0;
};

inline Se3Pose se3_exp(const Vector6d& twist) { return Se3Pose::exp(twist); }
inline Se3Pose compose(const Se3Pose& a, const Se3Pose& b) { return a * b; }
inline Se3Pose invert(const Se3Pose& a) { return a.inverse(); }

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

}  // namespace mf
