#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "gatesynth/camera.hpp"
#include "gatesynth/mesh.hpp"

namespace gatesynth {

// All randomness in the library flows through this engine type so a
// (config, seed) pair reproduces output bit-for-bit within a build.
using Rng = std::mt19937_64;

// Per-item seed: splitmix64 finalizer applied to master_seed + golden-ratio
// increment * (index + 1). Any single item can be replayed from
// (master_seed, index) alone.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

struct SceneConfig {
  int max_gates = 3;
  double min_distance = 2.0;
  // Gate origins (mesh frame origin) are drawn from this box.
  Aabb bounds{Vec3(-5.0, -5.0, 0.0), Vec3(5.0, 5.0, 0.0)};
  double yaw_min = 0.0;
  double yaw_max = 2.0 * 3.14159265358979323846;
  std::vector<GateSpec> available_specs;
  int max_attempts_per_gate = 100;

  // Everything except the spec list, which is loaded separately.
  void validate_parameters() const;
  void validate() const;
};

struct GateInstance {
  const GateSpec* spec = nullptr;
  std::size_t spec_index = 0;
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;

  RigidTransform transform() const { return {Quat::from_yaw(yaw), position}; }
  Vec3 world_center() const;
  Vec3 world_normal() const;
  std::array<Vec3, 4> world_corners() const;
};

enum class Category : std::uint8_t { kTarget = 1, kFront = 2, kBack = 3 };

std::string_view category_name(Category c);
Category category_from_name(std::string_view name);

struct PixelRect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() > 0.0 && height() > 0.0 ? width() * height() : 0.0; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

struct GateAnnotation {
  std::size_t gate_index = 0;
  PixelRect bbox;
  Category category = Category::kFront;
  double distance = 0.0;
  int visible_corners = 0;
};

// Draws the gate count uniformly in [1, max_gates], then for each gate a spec
// uniformly from available_specs and a pose uniformly over bounds x yaw range,
// redrawing the pose until its centre keeps min_distance from every accepted
// gate centre. Throws PlacementError after max_attempts_per_gate failures.
std::vector<GateInstance> sample_gate_poses(const SceneConfig& cfg, Rng& rng);

// Corners of the width x height panel that project in front of the camera and
// inside the viewport.
int visible_corner_count(const CameraModel& cam, const GateInstance& gate);

// Closest gate (by centre distance) whose centre is in front of the camera and
// which has at least three visible corners.
std::optional<std::size_t> select_target(const CameraModel& cam, std::span<const GateInstance> gates);

// One annotation per gate with its centre in front and at least one visible
// corner, in gate order.
std::vector<GateAnnotation> annotate_scene(const CameraModel& cam, std::span<const GateInstance> gates);

// Drop annotations below a visible-corner count (e.g. 3 to keep only gates the
// target rule would accept).
std::vector<GateAnnotation> filter_by_visible_corners(std::vector<GateAnnotation> annotations, int min_corners);

}  // namespace gatesynth
