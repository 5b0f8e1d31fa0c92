#pragma once

#include <array>
#include <optional>
#include <vector>

#include "gatesynth/image.hpp"
#include "gatesynth/render.hpp"
#include "gatesynth/scene.hpp"

namespace gatesynth {

// Odd-sized 2D convolution kernel, row-major coefficients.
class Kernel {
 public:
  Kernel() : Kernel(1, 1, {1.0}) {}
  Kernel(int width, int height, std::vector<double> coefficients);

  static Kernel identity() { return {}; }
  static Kernel box(int width, int height);
  // Normalized line of `length` taps through the centre at `angle` radians
  // (0 = horizontal, counter-clockwise as seen on screen). Taps are weighted by
  // max(0, 1 - perpendicular distance to the line).
  static Kernel motion(int length, double angle);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int x, int y) const { return coefficients_[static_cast<std::size_t>(y) * width_ + x]; }
  double sum() const;
  bool is_identity() const { return width_ == 1 && height_ == 1 && coefficients_[0] == 1.0; }
  const std::vector<double>& coefficients() const { return coefficients_; }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  int width_;
  int height_;
  std::vector<double> coefficients_;
};

struct BlurPolicy {
  // Ascending Laplacian-variance thresholds.
  std::array<double, 3> thresholds{100.0, 300.0, 1000.0};
  // Weakest to strongest.
  std::array<Kernel, 3> kernels{Kernel::motion(5, 0.0), Kernel::motion(9, 0.0), Kernel::motion(13, 0.0)};
  // Re-orient the selected kernel along the background's estimated smear direction.
  bool orient_to_background = true;

  void validate() const;
};

// Variance of the 4-neighbour Laplacian over interior pixels of the luma image.
double blur_score(const Image& img);

// score >= thresholds[2] -> identity; [t1, t2) -> weakest; [t0, t1) -> middle;
// below t0 -> strongest. A score equal to a threshold falls in the band above it.
Kernel select_kernel(double score, const BlurPolicy& policy);

// Orientation (radians, screen convention of Kernel::motion) along which the
// image varies least, taken from the luma structure tensor; 0 when isotropic.
double smear_orientation(const Image& img);

// Per-channel convolution with replicate-edge padding, rounded and clamped to [0, 255].
Image convolve(const Image& img, const Kernel& kernel);
// Float variant, no clamping. Only pixels inside [x0, x1) x [y0, y1) are written.
Plane convolve(const Plane& plane, const Kernel& kernel);
Plane convolve(const Plane& plane, const Kernel& kernel, int x0, int y0, int x1, int y1);

Image add_gaussian_noise(const Image& img, double sigma, Rng& rng);

struct CompositeOptions {
  double noise_sigma = 5.0;
  // Precomputed blur_score / smear_orientation of the background, if known.
  std::optional<double> background_score;
  std::optional<double> background_orientation;
};

// Blur the synthetic colour and coverage with the kernel chosen for the
// background, add noise where coverage > 0, then blend
// out = coverage * synthetic + (1 - coverage) * background.
Image composite(const Image& background, const FrameBuffers& fb, const BlurPolicy& policy,
                const CompositeOptions& options, Rng& rng);

}  // namespace gatesynth
