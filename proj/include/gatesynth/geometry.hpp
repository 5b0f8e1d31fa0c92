#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gatesynth {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Hamilton quaternion, scalar-first. Kept separate from Eigen::Quaterniond so
// the rotation path used for projection is the explicit q * v * q^-1 product.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat identity() { return {}; }
  static Quat from_axis_angle(const Vec3& axis, double angle);
  static Quat from_yaw(double yaw) { return from_axis_angle(Vec3::UnitZ(), yaw); }

  double norm() const;
  Quat normalized() const;
  Quat conjugate() const { return {w, -x, -y, -z}; }
  Quat inverse() const;
  Mat3 to_matrix() const;
};

Quat operator*(const Quat& a, const Quat& b);

inline constexpr double kUnitQuatTolerance = 1e-6;

// Throws ValidationError when | |q| - 1 | exceeds kUnitQuatTolerance.
void require_unit(const Quat& q, const char* what = "quaternion");

// q * v * q^-1 via two Hamilton products.
Vec3 quat_rotate(const Quat& q, const Vec3& v);

// Rigid transform x -> rotation * x + translation.
struct RigidTransform {
  Quat rotation;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const;
  // (this ∘ inner): apply inner first, then this.
  RigidTransform compose(const RigidTransform& inner) const;
};

}  // namespace gatesynth
