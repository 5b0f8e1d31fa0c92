#include "gatesynth/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace gatesynth {

FrameBuffers::FrameBuffers(int width, int height)
    : color(width, height, 3, 0),
      coverage(width, height, 0.0f),
      depth(width, height, std::numeric_limits<float>::infinity()) {}

namespace {

double edge(const RasterVertex& a, const RasterVertex& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// With rows pointing down and positive edge() meaning "inside", a top edge is
// horizontal running right and a left edge runs upward.
bool is_top_left(const RasterVertex& a, const RasterVertex& b) {
  const double dy = b.y - a.y;
  const double dx = b.x - a.x;
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

bool inside(double e, bool top_left) { return e > 0.0 || (e == 0.0 && top_left); }

}  // namespace

void rasterize_triangle(FrameBuffers& fb, const RasterVertex& v0, const RasterVertex& v1_in,
                        const RasterVertex& v2_in, Rgb color) {
  RasterVertex v1 = v1_in;
  RasterVertex v2 = v2_in;
  double area = edge(v0, v1, v2.x, v2.y);
  if (!(std::abs(area) > 0.0) || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(v1, v2);
    area = -area;
  }

  const int w = fb.width();
  const int h = fb.height();
  const double min_x = std::min({v0.x, v1.x, v2.x});
  const double max_x = std::max({v0.x, v1.x, v2.x});
  const double min_y = std::min({v0.y, v1.y, v2.y});
  const double max_y = std::max({v0.y, v1.y, v2.y});
  const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(max_x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(max_y - 0.5)));
  if (x0 > x1 || y0 > y1) return;

  const bool tl0 = is_top_left(v1, v2);
  const bool tl1 = is_top_left(v2, v0);
  const bool tl2 = is_top_left(v0, v1);
  const double inv_d0 = 1.0 / v0.depth;
  const double inv_d1 = 1.0 / v1.depth;
  const double inv_d2 = 1.0 / v2.depth;

  auto pixels = fb.color.data();
  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      const double e0 = edge(v1, v2, px, py);
      const double e1 = edge(v2, v0, px, py);
      const double e2 = edge(v0, v1, px, py);
      if (!inside(e0, tl0) || !inside(e1, tl1) || !inside(e2, tl2)) continue;
      // Screen-space barycentrics interpolate 1/depth linearly.
      const double inv_depth = (e0 * inv_d0 + e1 * inv_d1 + e2 * inv_d2) / area;
      const float depth = static_cast<float>(1.0 / inv_depth);
      float& stored = fb.depth.at(x, y);
      if (!(depth < stored)) continue;
      stored = depth;
      fb.coverage.at(x, y) = 1.0f;
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
      pixels[i] = color.r;
      pixels[i + 1] = color.g;
      pixels[i + 2] = color.b;
    }
  }
}

namespace {

Rgb shade(Rgb base, double factor) {
  auto s = [&](std::uint8_t c) { return static_cast<std::uint8_t>(std::clamp(std::lround(c * factor), 0L, 255L)); };
  return {s(base.r), s(base.g), s(base.b)};
}

}  // namespace

FrameBuffers render_scene(const CameraModel& cam, std::span<const GateInstance> gates, const RenderOptions& options) {
  cam.validate();
  const Viewport& vp = cam.viewport;
  FrameBuffers fb(vp.w, vp.h);
  const Mat4 view = cam.view();
  const Mat4 proj = cam.projection();
  const double near = cam.intrinsics.near;

  auto to_raster = [&](const Vec3& cam_space) {
    const Eigen::Vector4d clip = proj * cam_space.homogeneous();
    const WindowPoint p = ndc_to_window(clip.x() / clip.w(), clip.y() / clip.w(), vp);
    // Raster coordinates are relative to the buffer origin, not the viewport offset.
    return RasterVertex{p.x - vp.x, p.y - vp.y, clip.w()};
  };

  std::vector<Vec3> camera_space;
  for (const GateInstance& gate : gates) {
    const Mesh world = transform_mesh(gate.spec->mesh, gate.transform());
    camera_space.clear();
    for (const auto& v : world.vertices) camera_space.push_back((view * v.homogeneous()).head<3>());

    for (std::size_t f = 0; f < world.faces.size(); ++f) {
      const auto& face = world.faces[f];
      const std::array<Vec3, 3> tri{camera_space[face[0]], camera_space[face[1]], camera_space[face[2]]};
      const Vec3 n = (world.vertices[face[1]] - world.vertices[face[0]])
                         .cross(world.vertices[face[2]] - world.vertices[face[0]]);
      const double n_len = n.norm();
      const double lambert = n_len > 0.0 ? std::abs(n.dot(options.light_direction)) / n_len : 0.0;
      const Rgb color = shade(world.face_color(f), options.ambient + (1.0 - options.ambient) * lambert);

      // Sutherland-Hodgman against depth >= near; a triangle yields at most a quad.
      std::array<Vec3, 4> poly;
      std::size_t count = 0;
      for (std::size_t i = 0; i < 3; ++i) {
        const Vec3& a = tri[i];
        const Vec3& b = tri[(i + 1) % 3];
        const double da = -a.z() - near;
        const double db = -b.z() - near;
        if (da >= 0.0) poly[count++] = a;
        if ((da >= 0.0) != (db >= 0.0)) poly[count++] = a + (b - a) * (da / (da - db));
      }
      if (count < 3) continue;
      const RasterVertex r0 = to_raster(poly[0]);
      for (std::size_t i = 1; i + 1 < count; ++i) {
        rasterize_triangle(fb, r0, to_raster(poly[i]), to_raster(poly[i + 1]), color);
      }
    }
  }
  return fb;
}

}  // namespace gatesynth
