#pragma once

#include "gatesynth/geometry.hpp"

namespace gatesynth {

// Position and orientation of the vehicle body in the motion-capture world frame.
struct CameraPose {
  Vec3 r_w = Vec3::Zero();
  Quat q_bw;  // body -> world

  void validate() const;
};

struct Intrinsics {
  double fx = 300.0;
  double fy = 300.0;
  double cx = 320.0;
  double cy = 240.0;
  double near = 0.05;
  double far = 50.0;

  void validate() const;
};

struct Viewport {
  int w = 640;
  int h = 480;
  int x = 0;
  int y = 0;

  void validate() const;
  bool contains(double px, double py) const {
    return px >= x && px <= x + w && py >= y && py <= y + h;
  }
};

// Body axes: x_B looks forward through the lens, z_B is up. `mount` maps the
// camera frame into the body frame for cameras not aligned with x_B.
struct CameraModel {
  CameraPose pose;
  Intrinsics intrinsics;
  Viewport viewport;
  RigidTransform mount;
  Vec3 view_axis = Vec3::UnitX();
  Vec3 up_axis = Vec3::UnitZ();

  void validate() const;
  // Pose of the optical centre after applying the mount transform.
  CameraPose optical_pose() const;
  Mat4 view() const;
  Mat4 projection() const;
  // projection() * view(), cached by callers that project many points.
  Mat4 view_projection() const { return projection() * view(); }
};

Vec3 target_vector(const CameraPose& pose, const Vec3& view_axis = Vec3::UnitX());
Vec3 up_vector(const CameraPose& pose, const Vec3& up_axis = Vec3::UnitZ());

// Right-handed look-at: camera space has +x right, +y up and looks down -z.
// `up_point` is a point, the up direction is up_point - eye.
Mat4 view_matrix(const Vec3& eye, const Vec3& target, const Vec3& up_point);

// Perspective projection built from pinhole intrinsics. After the
// perspective divide and ndc_to_window, a camera-space point lands on
// u = fx X / Z + cx, v = fy Y / Z + cy with image rows pointing down and
// Z the distance along the view axis. Depth maps [near, far] to [-1, 1].
Mat4 projection_matrix(const Intrinsics& intr, const Viewport& vp);

struct WindowPoint {
  double x = 0.0;
  double y = 0.0;
};

WindowPoint ndc_to_window(double x_n, double y_n, const Viewport& vp);

struct Projection {
  WindowPoint pixel;
  double depth = 0.0;  // distance along the view axis, meters
  bool in_front = false;
};

Projection project_point(const CameraModel& cam, const Vec3& p_w);
// Same as project_point with a precomputed view-projection matrix.
Projection project_point(const Mat4& view_projection, const Viewport& vp, const Vec3& p_w);

}  // namespace gatesynth
