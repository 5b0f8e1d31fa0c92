#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "gatesynth/augment.hpp"
#include "gatesynth/camera.hpp"
#include "gatesynth/scene.hpp"

namespace gatesynth {

// Everything a generation run needs besides the background set. Loaded from a
// single JSON document:
//
//   {
//     "camera": {"fx": 300, "fy": 300, "cx": 320, "cy": 240, "width": 640, "height": 480,
//                "near": 0.05, "far": 50,
//                "mount": {"rotation": [1, 0, 0, 0], "translation": [0, 0, 0]}},
//     "scene":  {"max_gates": 3, "min_distance": 2.0,
//                "bounds": {"min": [-4, -4, 0], "max": [4, 4, 0]},
//                "yaw_range": [0, 6.283185307179586],
//                "gates": ["gate.json"]},
//     "blur":   {"thresholds": [100, 300, 1000], "kernel_lengths": [5, 9, 13],
//                "orient_to_background": true},
//     "noise_sigma": 5.0,
//     "png_compression": 1
//   }
//
// Every key is optional; "blur.kernels" may replace "kernel_lengths" with
// three explicit odd-sized coefficient matrices (rows of numbers).
struct GeneratorConfig {
  Intrinsics intrinsics;
  Viewport viewport;
  RigidTransform mount;
  SceneConfig scene;
  BlurPolicy blur;
  double noise_sigma = 5.0;
  int png_compression = 1;
  // Gate spec documents, resolved against the mesh directory.
  std::vector<std::string> gate_files;
  nlohmann::json snapshot;

  CameraModel camera_at(const CameraPose& pose) const;
  void validate() const;
};

GeneratorConfig parse_config(const nlohmann::json& doc);
GeneratorConfig load_config(const std::filesystem::path& path);

// Loads gate_files (or every *.json in `mesh_dir`, sorted, when none are
// listed) into cfg.scene.available_specs.
void load_gate_specs(GeneratorConfig& cfg, const std::filesystem::path& mesh_dir);

}  // namespace gatesynth
