#include "gatesynth/geometry.hpp"

#include <cmath>
#include <string>

#include "gatesynth/error.hpp"

namespace gatesynth {

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = axis.normalized();
  const double s = std::sin(angle / 2.0);
  return {std::cos(angle / 2.0), a.x() * s, a.y() * s, a.z() * s};
}

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat Quat::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

Quat Quat::inverse() const {
  const double n2 = w * w + x * x + y * y + z * z;
  return {w / n2, -x / n2, -y / n2, -z / n2};
}

Mat3 Quat::to_matrix() const {
  Mat3 m;
  m.col(0) = quat_rotate(*this, Vec3::UnitX());
  m.col(1) = quat_rotate(*this, Vec3::UnitY());
  m.col(2) = quat_rotate(*this, Vec3::UnitZ());
  return m;
}

Quat operator*(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

void require_unit(const Quat& q, const char* what) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitQuatTolerance) {
    throw ValidationError(std::string(what) + " is not unit-norm (|q| = " + std::to_string(n) + ")");
  }
}

Vec3 quat_rotate(const Quat& q, const Vec3& v) {
  require_unit(q);
  const Quat p{0.0, v.x(), v.y(), v.z()};
  const Quat r = q * p * q.conjugate();
  return {r.x, r.y, r.z};
}

Vec3 RigidTransform::apply(const Vec3& p) const { return quat_rotate(rotation, p) + translation; }

RigidTransform RigidTransform::compose(const RigidTransform& inner) const {
  return {rotation * inner.rotation, apply(inner.translation)};
}

}  // namespace gatesynth
