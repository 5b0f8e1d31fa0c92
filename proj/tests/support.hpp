#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gatesynth/camera.hpp"
#include "gatesynth/config.hpp"
#include "gatesynth/dataset.hpp"
#include "gatesynth/image.hpp"
#include "gatesynth/mesh.hpp"

namespace testing {

// Directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const char* tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Smooth random texture with some oriented stripes, upsampled from a coarse
// grid; `coarse` controls how sharp it looks (smaller = sharper).
gatesynth::Image textured_image(int width, int height, std::uint64_t seed, int coarse = 8);

// Camera pose on a ring of `radius` around the origin, looking roughly at it.
gatesynth::CameraPose ring_pose(std::uint64_t seed, double radius = 7.0);

// Writes `count` backgrounds plus poses.csv into dir. Returns the pose log path.
std::filesystem::path write_background_set(const std::filesystem::path& dir, int count, int width, int height,
                                           std::uint64_t seed);

// 1.5 m frame gate standing on the ground (centre 0.75 m up), plus a raised
// variant with legs.
gatesynth::GateSpec ground_gate();
gatesynth::GateSpec raised_gate();

// Generator config matching the shipped example: 640x480, fx = fy = 300,
// bounds [-4, 4]^2 on the floor, both gate variants.
gatesynth::GeneratorConfig default_generator_config();

}  // namespace testing
