#include "gatesynth/camera.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "gatesynth/error.hpp"

namespace gatesynth {

void CameraPose::validate() const {
  require_unit(q_bw, "camera orientation");
  if (!r_w.allFinite()) throw ValidationError("camera position is not finite");
}

void Intrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw ValidationError("focal lengths must be positive");
  if (!(near > 0.0 && near < far)) throw ValidationError("clip distances must satisfy 0 < near < far");
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(far)) {
    throw ValidationError("intrinsics are not finite");
  }
}

void Viewport::validate() const {
  if (w <= 0 || h <= 0) throw ValidationError("viewport size must be positive");
  if (x < 0 || y < 0) throw ValidationError("viewport offset must be non-negative");
}

void CameraModel::validate() const {
  pose.validate();
  intrinsics.validate();
  viewport.validate();
  require_unit(mount.rotation, "camera mount rotation");
  if (std::abs(view_axis.dot(up_axis)) > 1e-9) throw ValidationError("view and up axes must be orthogonal");
}

CameraPose CameraModel::optical_pose() const {
  return {pose.r_w + quat_rotate(pose.q_bw, mount.translation), pose.q_bw * mount.rotation};
}

Mat4 CameraModel::view() const {
  const CameraPose p = optical_pose();
  return view_matrix(p.r_w, target_vector(p, view_axis), up_vector(p, up_axis));
}

Mat4 CameraModel::projection() const { return projection_matrix(intrinsics, viewport); }

Vec3 target_vector(const CameraPose& pose, const Vec3& view_axis) {
  return pose.r_w + quat_rotate(pose.q_bw, view_axis);
}

Vec3 up_vector(const CameraPose& pose, const Vec3& up_axis) { return pose.r_w + quat_rotate(pose.q_bw, up_axis); }

Mat4 view_matrix(const Vec3& eye, const Vec3& target, const Vec3& up_point) {
  const Vec3 forward_raw = target - eye;
  if (forward_raw.norm() < 1e-12) throw GeometryError("look-at target coincides with the eye");
  const Vec3 f = forward_raw.normalized();
  const Vec3 up = up_point - eye;
  const Vec3 side_raw = f.cross(up);
  if (side_raw.norm() < 1e-12 * std::max(1.0, up.norm())) {
    throw GeometryError("look-at up direction is parallel to the view direction");
  }
  const Vec3 s = side_raw.normalized();
  const Vec3 u = s.cross(f);

  Mat4 m = Mat4::Identity();
  m.block<1, 3>(0, 0) = s.transpose();
  m.block<1, 3>(1, 0) = u.transpose();
  m.block<1, 3>(2, 0) = -f.transpose();
  m(0, 3) = -s.dot(eye);
  m(1, 3) = -u.dot(eye);
  m(2, 3) = f.dot(eye);
  return m;
}

Mat4 projection_matrix(const Intrinsics& intr, const Viewport& vp) {
  intr.validate();
  vp.validate();
  const double w = vp.w;
  const double h = vp.h;
  const double n = intr.near;
  const double f = intr.far;
  Mat4 p = Mat4::Zero();
  // Camera space looks down -z, so the pinhole depth is -z_c and the image
  // row axis is -y_c.
  p(0, 0) = 2.0 * intr.fx / w;
  p(0, 2) = 1.0 - 2.0 * intr.cx / w;
  p(1, 1) = -2.0 * intr.fy / h;
  p(1, 2) = 1.0 - 2.0 * intr.cy / h;
  p(2, 2) = -(f + n) / (f - n);
  p(2, 3) = -2.0 * f * n / (f - n);
  p(3, 2) = -1.0;
  return p;
}

WindowPoint ndc_to_window(double x_n, double y_n, const Viewport& vp) {
  return {(vp.w / 2.0) * x_n + vp.x + vp.w / 2.0, (vp.h / 2.0) * y_n + vp.y + vp.h / 2.0};
}

Projection project_point(const Mat4& view_projection, const Viewport& vp, const Vec3& p_w) {
  const Eigen::Vector4d clip = view_projection * p_w.homogeneous();
  Projection out;
  out.depth = clip.w();
  out.in_front = clip.w() > 0.0;
  out.pixel = ndc_to_window(clip.x() / clip.w(), clip.y() / clip.w(), vp);
  return out;
}

Projection project_point(const CameraModel& cam, const Vec3& p_w) {
  const CameraPose optical = cam.optical_pose();
  if ((p_w - optical.r_w).norm() == 0.0) throw GeometryError("cannot project the eye point");
  return project_point(cam.view_projection(), cam.viewport, p_w);
}

}  // namespace gatesynth
