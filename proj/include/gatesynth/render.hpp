#pragma once

#include <limits>
#include <span>
#include <vector>

#include "gatesynth/camera.hpp"
#include "gatesynth/image.hpp"
#include "gatesynth/mesh.hpp"
#include "gatesynth/scene.hpp"

namespace gatesynth {

// Colour, coverage and depth rasters of the synthetic layer. Empty pixels
// have colour 0, coverage 0 and infinite depth.
struct FrameBuffers {
  Image color;
  Plane coverage;
  Plane depth;

  FrameBuffers() = default;
  FrameBuffers(int width, int height);

  int width() const { return color.width(); }
  int height() const { return color.height(); }
  bool empty_at(int x, int y) const { return coverage.at(x, y) == 0.0f; }
};

// Window-space vertex plus its camera-space depth (distance along the view axis).
struct RasterVertex {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;
};

// Fills pixels whose centres (i + 0.5, j + 0.5) are inside the triangle under
// a top-left fill rule and whose perspective-correct depth is strictly less
// than the stored one. Either winding is accepted; zero-area triangles draw nothing.
void rasterize_triangle(FrameBuffers& fb, const RasterVertex& v0, const RasterVertex& v1, const RasterVertex& v2,
                        Rgb color);

struct RenderOptions {
  // Fixed directional light (world frame, pointing from the light).
  Vec3 light_direction = Vec3(-0.4, -0.3, -0.866).normalized();
  double ambient = 0.45;
};

// Transforms every gate mesh into the world, clips triangles against the near
// plane and rasterizes them with a z-buffer. Buffers match the viewport size.
FrameBuffers render_scene(const CameraModel& cam, std::span<const GateInstance> gates,
                          const RenderOptions& options = {});

}  // namespace gatesynth
