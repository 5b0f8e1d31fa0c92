#include "gatesynth/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gatesynth/error.hpp"

namespace gatesynth {
namespace {

constexpr Rgb kDefaultColor{200, 60, 40};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

bool parse_double(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

// Face tokens look like `7`, `7/2`, `7//3` or `7/2/3`; negative values are
// relative to the current vertex count.
long parse_face_index(std::string_view token, std::size_t vertex_count, std::size_t line_no) {
  const std::string_view head = token.substr(0, token.find('/'));
  long value = 0;
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
  if (ec != std::errc() || ptr != head.data() + head.size() || value == 0) {
    throw ParseError(line_no, "malformed face index '" + std::string(token) + "'");
  }
  return value > 0 ? value - 1 : static_cast<long>(vertex_count) + value;
}

Vec3 json_vec3(const nlohmann::json& config, const char* key) {
  if (!config.contains(key)) throw ConfigError(std::string("gate spec is missing field '") + key + "'");
  const auto& v = config.at(key);
  if (!v.is_array() || v.size() != 3) throw ConfigError(std::string("field '") + key + "' must be a 3-element array");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

double json_number(const nlohmann::json& config, const char* key) {
  if (!config.contains(key)) throw ConfigError(std::string("gate spec is missing field '") + key + "'");
  const auto& v = config.at(key);
  if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

Rgb json_rgb(const nlohmann::json& v) {
  if (!v.is_array() || v.size() != 3) throw ConfigError("colour must be an [r, g, b] array");
  return {static_cast<std::uint8_t>(v[0].get<int>()), static_cast<std::uint8_t>(v[1].get<int>()),
          static_cast<std::uint8_t>(v[2].get<int>())};
}

}  // namespace

Rgb Mesh::face_color(std::size_t face) const {
  if (face_colors.empty()) return kDefaultColor;
  if (face_colors.size() == 1) return face_colors.front();
  return face_colors[face];
}

void Mesh::validate() const {
  if (faces.empty()) throw ValidationError("mesh has no faces");
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw ValidationError("mesh has a non-finite vertex coordinate");
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (auto idx : faces[f]) {
      if (idx >= vertices.size()) {
        throw ValidationError("face " + std::to_string(f) + " references vertex " + std::to_string(idx + 1) +
                              " but the mesh has " + std::to_string(vertices.size()) + " vertices");
      }
    }
  }
  if (face_colors.size() > 1 && face_colors.size() != faces.size()) {
    throw ValidationError("face colour count does not match face count");
  }
}

Mesh parse_obj(std::istream& in) {
  Mesh mesh;
  std::string current_material;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    const std::string_view kind = tokens[0];
    if (kind == "v") {
      if (tokens.size() < 4 || tokens.size() > 5) throw ParseError(line_no, "vertex needs 3 coordinates");
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        if (!parse_double(tokens[k + 1], p[k])) {
          throw ParseError(line_no, "malformed vertex coordinate '" + std::string(tokens[k + 1]) + "'");
        }
      }
      mesh.vertices.push_back(p);
    } else if (kind == "f") {
      if (tokens.size() < 4) throw ParseError(line_no, "face needs at least 3 indices");
      std::vector<long> idx;
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        idx.push_back(parse_face_index(tokens[k], mesh.vertices.size(), line_no));
      }
      for (long i : idx) {
        if (i < 0 || static_cast<std::size_t>(i) >= mesh.vertices.size()) {
          throw ValidationError("line " + std::to_string(line_no) + ": face index " + std::to_string(i + 1) +
                                " out of range (" + std::to_string(mesh.vertices.size()) + " vertices)");
        }
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        mesh.faces.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[k]),
                              static_cast<std::uint32_t>(idx[k + 1])});
        mesh.face_materials.push_back(current_material);
      }
    } else if (kind == "usemtl") {
      current_material = tokens.size() > 1 ? std::string(tokens[1]) : std::string();
    }
  }
  if (std::all_of(mesh.face_materials.begin(), mesh.face_materials.end(),
                  [](const std::string& m) { return m.empty(); })) {
    mesh.face_materials.clear();
  }
  mesh.validate();
  return mesh;
}

Mesh parse_obj(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_obj(in);
}

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  return parse_obj(in);
}

std::string serialize_obj(const Mesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  std::string current;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (!mesh.face_materials.empty() && mesh.face_materials[f] != current) {
      current = mesh.face_materials[f];
      out << "usemtl " << current << '\n';
    }
    const auto& face = mesh.faces[f];
    out << "f " << face[0] + 1 << ' ' << face[1] + 1 << ' ' << face[2] + 1 << '\n';
  }
  return out.str();
}

Mesh transform_mesh(const Mesh& mesh, const RigidTransform& pose) {
  require_unit(pose.rotation, "pose rotation");
  const Mat3 r = pose.rotation.to_matrix();
  Mesh out;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.vertices.push_back(r * v + pose.translation);
  out.faces = mesh.faces;
  out.face_colors = mesh.face_colors;
  out.face_materials = mesh.face_materials;
  return out;
}

Vec3 GateSpec::width_axis() const { return Vec3::UnitZ().cross(normal_local).normalized(); }

Vec3 GateSpec::height_axis() const { return normal_local.cross(width_axis()); }

std::array<Vec3, 4> GateSpec::panel_corners() const {
  const Vec3 hw = width_axis() * (width / 2.0);
  const Vec3 hh = height_axis() * (height / 2.0);
  return {center_offset - hw - hh, center_offset + hw - hh, center_offset + hw + hh, center_offset - hw + hh};
}

void GateSpec::validate() const {
  if (!(width > 0.0)) throw ValidationError("gate width must be positive");
  if (!(height > 0.0)) throw ValidationError("gate height must be positive");
  if (std::abs(normal_local.norm() - 1.0) > 1e-9) throw ValidationError("gate normal must be unit length");
  if (Vec3::UnitZ().cross(normal_local).norm() < 1e-6) {
    throw ValidationError("gate normal must not be vertical");
  }
  if (!center_offset.allFinite()) throw ValidationError("gate center is not finite");
  mesh.validate();
}

GateSpec make_frame_gate(double width, double height, double border, double center_height, Rgb frame_color,
                         Rgb leg_color) {
  GateSpec spec;
  spec.name = "frame";
  spec.width = width;
  spec.height = height;
  spec.center_offset = Vec3(0.0, 0.0, center_height);
  spec.normal_local = Vec3::UnitX();

  Mesh& m = spec.mesh;
  auto quad = [&](double y0, double z0, double y1, double z1, const char* material, Rgb color) {
    const auto base = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.push_back({0.0, y0, z0});
    m.vertices.push_back({0.0, y1, z0});
    m.vertices.push_back({0.0, y1, z1});
    m.vertices.push_back({0.0, y0, z1});
    m.faces.push_back({base, base + 1, base + 2});
    m.faces.push_back({base, base + 2, base + 3});
    m.face_materials.insert(m.face_materials.end(), 2, material);
    m.face_colors.insert(m.face_colors.end(), 2, color);
  };
  const double hw = width / 2.0;
  const double bottom = center_height - height / 2.0;
  const double top = center_height + height / 2.0;
  quad(-hw, top - border, hw, top, "frame", frame_color);
  quad(-hw, bottom, hw, bottom + border, "frame", frame_color);
  quad(-hw, bottom + border, -hw + border, top - border, "frame", frame_color);
  quad(hw - border, bottom + border, hw, top - border, "frame", frame_color);
  if (bottom > 0.0) {
    quad(-hw, 0.0, -hw + border, bottom, "leg", leg_color);
    quad(hw - border, 0.0, hw, bottom, "leg", leg_color);
  }
  spec.validate();
  return spec;
}

namespace {

GateSpec gate_spec_from_json(const nlohmann::json& config, const std::filesystem::path& base_dir) {
  if (!config.is_object()) throw ConfigError("gate spec must be an object");
  if (!config.contains("mesh")) throw ConfigError("gate spec is missing field 'mesh'");
  GateSpec spec;
  spec.center_offset = json_vec3(config, "center");
  spec.width = json_number(config, "width");
  spec.height = json_number(config, "height");
  spec.normal_local = json_vec3(config, "normal");
  const std::filesystem::path mesh_path = base_dir / config.at("mesh").get<std::string>();
  spec.name = config.value("name", mesh_path.stem().string());
  spec.mesh = load_obj(mesh_path);

  if (config.contains("materials")) {
    std::vector<Rgb> colors;
    const Rgb fallback = config.contains("color") ? json_rgb(config.at("color")) : kDefaultColor;
    const auto& materials = config.at("materials");
    for (std::size_t f = 0; f < spec.mesh.faces.size(); ++f) {
      const std::string name = spec.mesh.face_materials.empty() ? std::string() : spec.mesh.face_materials[f];
      colors.push_back(materials.contains(name) ? json_rgb(materials.at(name)) : fallback);
    }
    spec.mesh.face_colors = std::move(colors);
  } else if (config.contains("color")) {
    spec.mesh.face_colors = {json_rgb(config.at("color"))};
  }
  spec.validate();
  return spec;
}

}  // namespace

GateSpec load_gate_spec(const nlohmann::json& config, const std::filesystem::path& base_dir) {
  try {
    return gate_spec_from_json(config, base_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("gate spec: ") + e.what());
  }
}

GateSpec load_gate_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open gate spec " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return load_gate_spec(doc, path.parent_path());
}

}  // namespace gatesynth
