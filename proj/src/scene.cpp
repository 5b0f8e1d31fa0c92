#include "gatesynth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gatesynth/error.hpp"

namespace gatesynth {

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void SceneConfig::validate_parameters() const {
  if (max_gates < 1) throw ValidationError("max_gates must be at least 1");
  if (!(min_distance > 0.0)) throw ValidationError("min_distance must be positive");
  if (!(bounds.min.array() <= bounds.max.array()).all()) throw ValidationError("bounds min exceeds max");
  if (!(bounds.max.x() > bounds.min.x() && bounds.max.y() > bounds.min.y())) {
    throw ValidationError("bounds must have positive horizontal extent");
  }
  if (!(yaw_max >= yaw_min)) throw ValidationError("yaw range is inverted");
  if (max_attempts_per_gate < 1) throw ValidationError("max_attempts_per_gate must be at least 1");
}

void SceneConfig::validate() const {
  validate_parameters();
  if (available_specs.empty()) throw ValidationError("no gate specs available");
}

Vec3 GateInstance::world_center() const { return transform().apply(spec->center_offset); }

Vec3 GateInstance::world_normal() const { return quat_rotate(Quat::from_yaw(yaw), spec->normal_local); }

std::array<Vec3, 4> GateInstance::world_corners() const {
  auto corners = spec->panel_corners();
  const RigidTransform t = transform();
  for (auto& c : corners) c = t.apply(c);
  return corners;
}

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kTarget:
      return "target";
    case Category::kFront:
      return "front";
    case Category::kBack:
      return "back";
  }
  return "unknown";
}

Category category_from_name(std::string_view name) {
  if (name == "target") return Category::kTarget;
  if (name == "front") return Category::kFront;
  if (name == "back") return Category::kBack;
  throw ValidationError("unknown category '" + std::string(name) + "'");
}

std::vector<GateInstance> sample_gate_poses(const SceneConfig& cfg, Rng& rng) {
  cfg.validate();
  std::uniform_int_distribution<int> count_dist(1, cfg.max_gates);
  std::uniform_int_distribution<std::size_t> spec_dist(0, cfg.available_specs.size() - 1);
  std::uniform_real_distribution<double> ux(cfg.bounds.min.x(), cfg.bounds.max.x());
  std::uniform_real_distribution<double> uy(cfg.bounds.min.y(), cfg.bounds.max.y());
  std::uniform_real_distribution<double> uz(cfg.bounds.min.z(), cfg.bounds.max.z());
  std::uniform_real_distribution<double> uyaw(cfg.yaw_min, cfg.yaw_max);

  const int count = count_dist(rng);
  std::vector<GateInstance> gates;
  std::vector<Vec3> centers;
  gates.reserve(count);
  for (int i = 0; i < count; ++i) {
    GateInstance gate;
    gate.spec_index = spec_dist(rng);
    gate.spec = &cfg.available_specs[gate.spec_index];
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_attempts_per_gate && !placed; ++attempt) {
      const double x = ux(rng);
      const double y = uy(rng);
      const double z = uz(rng);
      gate.position = Vec3(x, y, z);
      gate.yaw = uyaw(rng);
      const Vec3 c = gate.world_center();
      placed = std::all_of(centers.begin(), centers.end(),
                           [&](const Vec3& other) { return (c - other).norm() >= cfg.min_distance; });
      if (placed) centers.push_back(c);
    }
    if (!placed) {
      throw PlacementError("could not place gate " + std::to_string(i + 1) + " of " + std::to_string(count) +
                           " after " + std::to_string(cfg.max_attempts_per_gate) +
                           " attempts; bounds too small for min_distance");
    }
    gates.push_back(gate);
  }
  return gates;
}

int visible_corner_count(const CameraModel& cam, const GateInstance& gate) {
  const Mat4 vp = cam.view_projection();
  int visible = 0;
  for (const auto& corner : gate.world_corners()) {
    const Projection p = project_point(vp, cam.viewport, corner);
    if (p.in_front && cam.viewport.contains(p.pixel.x, p.pixel.y)) ++visible;
  }
  return visible;
}

namespace {

double center_distance(const CameraModel& cam, const GateInstance& gate) {
  return (gate.world_center() - cam.optical_pose().r_w).norm();
}

bool center_in_front(const Mat4& view_projection, const CameraModel& cam, const GateInstance& gate) {
  return project_point(view_projection, cam.viewport, gate.world_center()).in_front;
}

// Keeps the part of a window-space polygon on the side `inside` accepts;
// `cross` returns the parameter where edge a->b meets the boundary.
template <class Inside, class Cross>
std::vector<WindowPoint> clip_polygon(const std::vector<WindowPoint>& poly, Inside inside, Cross cross) {
  std::vector<WindowPoint> out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const WindowPoint& a = poly[i];
    const WindowPoint& b = poly[(i + 1) % poly.size()];
    const bool ia = inside(a), ib = inside(b);
    if (ia) out.push_back(a);
    if (ia != ib) {
      const double t = cross(a, b);
      out.push_back({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t});
    }
  }
  return out;
}

// Bounds of the panel polygon clipped against the near plane and then the viewport.
PixelRect panel_bbox(const CameraModel& cam, const GateInstance& gate) {
  const Mat4 view = cam.view();
  const Mat4 proj = cam.projection();
  const double near = cam.intrinsics.near;

  std::vector<Vec3> poly;
  for (const auto& c : gate.world_corners()) poly.push_back((view * c.homogeneous()).head<3>());

  std::vector<Vec3> clipped;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec3& a = poly[i];
    const Vec3& b = poly[(i + 1) % poly.size()];
    const double da = -a.z() - near;
    const double db = -b.z() - near;
    if (da >= 0.0) clipped.push_back(a);
    if ((da >= 0.0) != (db >= 0.0)) clipped.push_back(a + (b - a) * (da / (da - db)));
  }

  std::vector<WindowPoint> window;
  for (const auto& v : clipped) {
    const Eigen::Vector4d clip = proj * v.homogeneous();
    window.push_back(ndc_to_window(clip.x() / clip.w(), clip.y() / clip.w(), cam.viewport));
  }
  // Projection maps lines to lines in front of the camera, so clipping in window space is exact.
  const double vx0 = cam.viewport.x;
  const double vy0 = cam.viewport.y;
  const double vx1 = vx0 + cam.viewport.w;
  const double vy1 = vy0 + cam.viewport.h;
  window = clip_polygon(window, [&](const WindowPoint& p) { return p.x >= vx0; },
                        [&](const WindowPoint& a, const WindowPoint& b) { return (vx0 - a.x) / (b.x - a.x); });
  window = clip_polygon(window, [&](const WindowPoint& p) { return p.x <= vx1; },
                        [&](const WindowPoint& a, const WindowPoint& b) { return (vx1 - a.x) / (b.x - a.x); });
  window = clip_polygon(window, [&](const WindowPoint& p) { return p.y >= vy0; },
                        [&](const WindowPoint& a, const WindowPoint& b) { return (vy0 - a.y) / (b.y - a.y); });
  window = clip_polygon(window, [&](const WindowPoint& p) { return p.y <= vy1; },
                        [&](const WindowPoint& a, const WindowPoint& b) { return (vy1 - a.y) / (b.y - a.y); });

  if (window.empty()) return {vx0, vy0, vx0, vy0};
  PixelRect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& w : window) {
    r.x_min = std::min(r.x_min, w.x);
    r.y_min = std::min(r.y_min, w.y);
    r.x_max = std::max(r.x_max, w.x);
    r.y_max = std::max(r.y_max, w.y);
  }
  r.x_min = std::clamp(r.x_min, vx0, vx1);
  r.x_max = std::clamp(r.x_max, vx0, vx1);
  r.y_min = std::clamp(r.y_min, vy0, vy1);
  r.y_max = std::clamp(r.y_max, vy0, vy1);
  return r;
}

}  // namespace

std::optional<std::size_t> select_target(const CameraModel& cam, std::span<const GateInstance> gates) {
  const Mat4 vp = cam.view_projection();
  std::optional<std::size_t> best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gates.size(); ++i) {
    if (!center_in_front(vp, cam, gates[i]) || visible_corner_count(cam, gates[i]) < 3) continue;
    const double d = center_distance(cam, gates[i]);
    if (d < best_distance) {
      best_distance = d;
      best = i;
    }
  }
  return best;
}

std::vector<GateAnnotation> annotate_scene(const CameraModel& cam, std::span<const GateInstance> gates) {
  const Mat4 vp = cam.view_projection();
  const Vec3 eye = cam.optical_pose().r_w;
  const auto target = select_target(cam, gates);
  std::vector<GateAnnotation> out;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    const GateInstance& gate = gates[i];
    if (!center_in_front(vp, cam, gate)) continue;
    const int corners = visible_corner_count(cam, gate);
    if (corners == 0) continue;

    GateAnnotation a;
    a.gate_index = i;
    a.visible_corners = corners;
    a.bbox = panel_bbox(cam, gate);
    const Vec3 center = gate.world_center();
    a.distance = (center - eye).norm();
    if (target && *target == i) {
      a.category = Category::kTarget;
    } else {
      a.category = gate.world_normal().dot(eye - center) >= 0.0 ? Category::kFront : Category::kBack;
    }
    out.push_back(a);
  }
  return out;
}

std::vector<GateAnnotation> filter_by_visible_corners(std::vector<GateAnnotation> annotations, int min_corners) {
  std::erase_if(annotations, [&](const GateAnnotation& a) { return a.visible_corners < min_corners; });
  return annotations;
}

}  // namespace gatesynth
