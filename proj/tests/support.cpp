#include "support.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "gatesynth/scene.hpp"

namespace testing {

namespace fs = std::filesystem;

TempDir::TempDir(const char* tag) {
  std::random_device rd;
  path_ = fs::temp_directory_path() / (std::string("gatesynth_") + tag + "_" + std::to_string(rd()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

gatesynth::Image textured_image(int width, int height, std::uint64_t seed, int coarse) {
  gatesynth::Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int gw = width / coarse + 2;
  const int gh = height / coarse + 2;
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh * 3);
  for (auto& g : grid) g = 40.0 + 170.0 * u(rng);
  const double stripe_angle = std::numbers::pi * u(rng);
  const double stripe_period = 6.0 + 30.0 * u(rng);
  const double ca = std::cos(stripe_angle);
  const double sa = std::sin(stripe_angle);

  gatesynth::Image img(width, height, 3);
  for (int y = 0; y < height; ++y) {
    const double gy = static_cast<double>(y) / coarse;
    const int y0 = static_cast<int>(gy);
    const double fy = gy - y0;
    for (int x = 0; x < width; ++x) {
      const double gx = static_cast<double>(x) / coarse;
      const int x0 = static_cast<int>(gx);
      const double fx = gx - x0;
      const double stripe = 25.0 * std::sin(2.0 * std::numbers::pi * (x * ca + y * sa) / stripe_period);
      for (int c = 0; c < 3; ++c) {
        auto g = [&](int ix, int iy) { return grid[(static_cast<std::size_t>(iy) * gw + ix) * 3 + c]; };
        const double v = (1 - fx) * (1 - fy) * g(x0, y0) + fx * (1 - fy) * g(x0 + 1, y0) +
                         (1 - fx) * fy * g(x0, y0 + 1) + fx * fy * g(x0 + 1, y0 + 1) + stripe;
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return img;
}

gatesynth::CameraPose ring_pose(std::uint64_t seed, double radius) {
  gatesynth::Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double theta = 2.0 * std::numbers::pi * u(rng);
  gatesynth::CameraPose pose;
  pose.r_w = gatesynth::Vec3(radius * std::cos(theta), radius * std::sin(theta), 1.0 + 0.8 * u(rng));
  const double yaw = theta + std::numbers::pi + 0.4 * (u(rng) - 0.5);
  const double pitch = 0.1 + 0.15 * u(rng);  // positive pitch about body y tilts the view down
  const double roll = 0.1 * (u(rng) - 0.5);
  pose.q_bw = gatesynth::Quat::from_yaw(yaw) * gatesynth::Quat::from_axis_angle(gatesynth::Vec3::UnitY(), pitch) *
              gatesynth::Quat::from_axis_angle(gatesynth::Vec3::UnitX(), roll);
  return pose;
}

fs::path write_background_set(const fs::path& dir, int count, int width, int height, std::uint64_t seed) {
  fs::create_directories(dir);
  const fs::path log = dir / "poses.csv";
  std::ofstream out(log);
  out << "filename,x,y,z,qw,qx,qy,qz\n";
  out.precision(17);
  for (int i = 0; i < count; ++i) {
    const std::string name = "bg_" + std::to_string(i) + ".png";
    // Cycle through sharp and soft textures so every blur band gets used.
    const int coarse = 1 << (i % 5);
    gatesynth::write_png(dir / name, textured_image(width, height, gatesynth::derive_seed(seed, i), coarse));
    const auto pose = ring_pose(gatesynth::derive_seed(seed ^ 0x5bd1e995ULL, i));
    out << name << ',' << pose.r_w.x() << ',' << pose.r_w.y() << ',' << pose.r_w.z() << ',' << pose.q_bw.w << ','
        << pose.q_bw.x << ',' << pose.q_bw.y << ',' << pose.q_bw.z << '\n';
  }
  return log;
}

gatesynth::GateSpec ground_gate() {
  auto spec = gatesynth::make_frame_gate(1.5, 1.5, 0.1, 0.75);
  spec.name = "gate";
  return spec;
}

gatesynth::GateSpec raised_gate() {
  auto spec = gatesynth::make_frame_gate(1.5, 1.5, 0.1, 1.5, {40, 90, 220});
  spec.name = "raised_gate";
  return spec;
}

gatesynth::GeneratorConfig default_generator_config() {
  gatesynth::GeneratorConfig cfg;
  cfg.scene.bounds = {gatesynth::Vec3(-4.0, -4.0, 0.0), gatesynth::Vec3(4.0, 4.0, 0.0)};
  cfg.scene.available_specs = {ground_gate(), raised_gate()};
  cfg.snapshot = {{"test", true}};
  return cfg;
}

}  // namespace testing
