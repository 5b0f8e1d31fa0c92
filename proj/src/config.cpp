#include "gatesynth/config.hpp"

#include <algorithm>
#include <fstream>

#include "gatesynth/error.hpp"

namespace gatesynth {
namespace {

using nlohmann::json;

Vec3 vec3(const json& v, const char* key) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(std::string("'") + key + "' must be a 3-element array");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Kernel kernel_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw ConfigError("blur kernels must be arrays of coefficient rows");
  }
  const int height = static_cast<int>(rows.size());
  const int width = static_cast<int>(rows[0].size());
  std::vector<double> coeffs;
  for (const auto& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != width) throw ConfigError("blur kernel rows differ in length");
    for (const auto& v : row) coeffs.push_back(v.get<double>());
  }
  return {width, height, std::move(coeffs)};
}

}  // namespace

CameraModel GeneratorConfig::camera_at(const CameraPose& pose) const {
  CameraModel cam;
  cam.pose = pose;
  cam.intrinsics = intrinsics;
  cam.viewport = viewport;
  cam.mount = mount;
  return cam;
}

void GeneratorConfig::validate() const {
  intrinsics.validate();
  viewport.validate();
  require_unit(mount.rotation, "camera mount rotation");
  scene.validate_parameters();
  blur.validate();
  if (noise_sigma < 0.0) throw ValidationError("noise_sigma must be non-negative");
  if (png_compression < 0 || png_compression > 9) throw ValidationError("png_compression must be in 0..9");
}

GeneratorConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  GeneratorConfig cfg;
  cfg.snapshot = doc;
  try {
    if (doc.contains("camera")) {
      const json& c = doc.at("camera");
      cfg.intrinsics.fx = c.value("fx", cfg.intrinsics.fx);
      cfg.intrinsics.fy = c.value("fy", cfg.intrinsics.fy);
      cfg.viewport.w = c.value("width", cfg.viewport.w);
      cfg.viewport.h = c.value("height", cfg.viewport.h);
      cfg.intrinsics.cx = c.value("cx", cfg.viewport.w / 2.0);
      cfg.intrinsics.cy = c.value("cy", cfg.viewport.h / 2.0);
      cfg.intrinsics.near = c.value("near", cfg.intrinsics.near);
      cfg.intrinsics.far = c.value("far", cfg.intrinsics.far);
      if (c.contains("mount")) {
        const json& m = c.at("mount");
        if (m.contains("rotation")) {
          const json& q = m.at("rotation");
          if (!q.is_array() || q.size() != 4) throw ConfigError("'camera.mount.rotation' must be [w, x, y, z]");
          cfg.mount.rotation = {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()};
        }
        if (m.contains("translation")) cfg.mount.translation = vec3(m.at("translation"), "camera.mount.translation");
      }
    }
    if (doc.contains("scene")) {
      const json& s = doc.at("scene");
      cfg.scene.max_gates = s.value("max_gates", cfg.scene.max_gates);
      cfg.scene.min_distance = s.value("min_distance", cfg.scene.min_distance);
      cfg.scene.max_attempts_per_gate = s.value("max_attempts_per_gate", cfg.scene.max_attempts_per_gate);
      if (s.contains("bounds")) {
        const json& b = s.at("bounds");
        if (!b.contains("min")) throw ConfigError("'scene.bounds' is missing field 'min'");
        if (!b.contains("max")) throw ConfigError("'scene.bounds' is missing field 'max'");
        cfg.scene.bounds = {vec3(b.at("min"), "scene.bounds.min"), vec3(b.at("max"), "scene.bounds.max")};
      }
      if (s.contains("yaw_range")) {
        const json& y = s.at("yaw_range");
        if (!y.is_array() || y.size() != 2) throw ConfigError("'scene.yaw_range' must be [min, max]");
        cfg.scene.yaw_min = y[0].get<double>();
        cfg.scene.yaw_max = y[1].get<double>();
      }
      if (s.contains("gates")) cfg.gate_files = s.at("gates").get<std::vector<std::string>>();
    }
    if (doc.contains("blur")) {
      const json& b = doc.at("blur");
      if (b.contains("thresholds")) {
        const auto t = b.at("thresholds").get<std::vector<double>>();
        if (t.size() != 3) throw ConfigError("'blur.thresholds' needs exactly three values");
        cfg.blur.thresholds = {t[0], t[1], t[2]};
      }
      if (b.contains("kernels")) {
        const json& k = b.at("kernels");
        if (!k.is_array() || k.size() != 3) throw ConfigError("'blur.kernels' needs exactly three kernels");
        cfg.blur.kernels = {kernel_from_json(k[0]), kernel_from_json(k[1]), kernel_from_json(k[2])};
        cfg.blur.orient_to_background = false;
      } else if (b.contains("kernel_lengths")) {
        const auto l = b.at("kernel_lengths").get<std::vector<int>>();
        if (l.size() != 3) throw ConfigError("'blur.kernel_lengths' needs exactly three values");
        cfg.blur.kernels = {Kernel::motion(l[0], 0.0), Kernel::motion(l[1], 0.0), Kernel::motion(l[2], 0.0)};
      }
      cfg.blur.orient_to_background = b.value("orient_to_background", cfg.blur.orient_to_background);
    }
    cfg.noise_sigma = doc.value("noise_sigma", cfg.noise_sigma);
    cfg.png_compression = doc.value("png_compression", cfg.png_compression);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

GeneratorConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

void load_gate_specs(GeneratorConfig& cfg, const std::filesystem::path& mesh_dir) {
  std::vector<std::filesystem::path> files;
  if (!cfg.gate_files.empty()) {
    for (const auto& f : cfg.gate_files) files.push_back(mesh_dir / f);
  } else {
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(mesh_dir, ec)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    if (ec) throw ConfigError("cannot list mesh directory " + mesh_dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw ConfigError("no gate specs found in " + mesh_dir.string());
  cfg.scene.available_specs.clear();
  for (const auto& f : files) cfg.scene.available_specs.push_back(load_gate_spec_file(f));
}

}  // namespace gatesynth
