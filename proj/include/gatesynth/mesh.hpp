#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gatesynth/geometry.hpp"

namespace gatesynth {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  // Either one entry per face or a single material colour for all faces.
  std::vector<Rgb> face_colors;
  // Material name per face as read from `usemtl`; empty when none was given.
  std::vector<std::string> face_materials;

  Rgb face_color(std::size_t face) const;
  // Throws ValidationError if indices are out of range, there are no faces,
  // or a coordinate is not finite.
  void validate() const;
};

// Wavefront OBJ subset: `v`, `f` (n-gons are fan-triangulated), `usemtl`,
// comments. Normals, texture coordinates and every other statement are skipped.
Mesh parse_obj(std::istream& in);
Mesh parse_obj(std::string_view text);
Mesh load_obj(const std::filesystem::path& path);
std::string serialize_obj(const Mesh& mesh);

// Every vertex v becomes q v q^-1 + t. Faces and colours are copied.
Mesh transform_mesh(const Mesh& mesh, const RigidTransform& pose);

struct GateSpec {
  std::string name;
  Mesh mesh;
  Vec3 center_offset = Vec3::Zero();
  double width = 0.0;
  double height = 0.0;
  Vec3 normal_local = Vec3::UnitX();

  // In-plane axes of the aperture panel in the mesh frame. `width_axis` is
  // horizontal and perpendicular to the normal; `height_axis` completes the
  // right-handed frame (normal, width, height).
  Vec3 width_axis() const;
  Vec3 height_axis() const;
  // The four panel corners in the mesh frame, counter-clockwise seen from the front.
  std::array<Vec3, 4> panel_corners() const;
  void validate() const;
};

// Square-ish gate: a flat frame of outer size width x height and bar
// thickness `border` in the local y-z plane facing +x, centred at
// (0, 0, center_height), plus two legs down to z = 0 when the panel does not
// reach the ground. Face materials are "frame" and "leg".
GateSpec make_frame_gate(double width, double height, double border, double center_height,
                         Rgb frame_color = {230, 110, 20}, Rgb leg_color = {90, 90, 90});

// `config` holds: mesh (path, relative to `base_dir`), center [x,y,z],
// width, height, normal [x,y,z]; optional name, color [r,g,b] and
// materials {name: [r,g,b]}.
GateSpec load_gate_spec(const nlohmann::json& config, const std::filesystem::path& base_dir);
GateSpec load_gate_spec_file(const std::filesystem::path& path);

}  // namespace gatesynth
