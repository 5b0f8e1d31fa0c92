#include "gatesynth/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "gatesynth/error.hpp"

namespace gatesynth {

Kernel::Kernel(int width, int height, std::vector<double> coefficients)
    : width_(width), height_(height), coefficients_(std::move(coefficients)) {
  if (width <= 0 || height <= 0 || width % 2 == 0 || height % 2 == 0) {
    throw ValidationError("kernel dimensions must be odd, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  if (coefficients_.size() != static_cast<std::size_t>(width) * height) {
    throw ValidationError("kernel coefficient count does not match its dimensions");
  }
}

Kernel Kernel::box(int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  return {width, height, std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

Kernel Kernel::motion(int length, double angle) {
  if (length <= 0 || length % 2 == 0) throw ValidationError("motion kernel length must be odd");
  const int r = length / 2;
  const int size = 2 * r + 1;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  std::vector<double> full(static_cast<std::size_t>(size) * size, 0.0);
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      // Screen rows grow downward, so the line direction is (cos a, -sin a).
      const double along = dx * c - dy * s;
      const double perp = dx * s + dy * c;
      if (std::abs(along) > r + 1e-9) continue;
      const double weight = 1.0 - std::abs(perp);
      // Snap rounding residue (cos(pi/2) is not exactly 0) so axis-aligned kernels stay 1 wide.
      full[static_cast<std::size_t>(dy + r) * size + dx + r] = weight > 1e-9 ? weight : 0.0;
    }
  }
  // Trim all-zero border rows and columns; the pattern is point-symmetric so
  // trimming the same amount on both sides keeps the centre.
  auto row_empty = [&](int y) {
    for (int x = 0; x < size; ++x) if (full[static_cast<std::size_t>(y) * size + x] > 0.0) return false;
    return true;
  };
  auto col_empty = [&](int x) {
    for (int y = 0; y < size; ++y) if (full[static_cast<std::size_t>(y) * size + x] > 0.0) return false;
    return true;
  };
  int trim_y = 0;
  while (trim_y < r && row_empty(trim_y) && row_empty(size - 1 - trim_y)) ++trim_y;
  int trim_x = 0;
  while (trim_x < r && col_empty(trim_x) && col_empty(size - 1 - trim_x)) ++trim_x;
  const int w = size - 2 * trim_x;
  const int h = size - 2 * trim_y;
  std::vector<double> coeffs;
  coeffs.reserve(static_cast<std::size_t>(w) * h);
  for (int y = trim_y; y < size - trim_y; ++y) {
    for (int x = trim_x; x < size - trim_x; ++x) coeffs.push_back(full[static_cast<std::size_t>(y) * size + x]);
  }
  const double total = std::accumulate(coeffs.begin(), coeffs.end(), 0.0);
  for (auto& v : coeffs) v /= total;
  return {w, h, std::move(coeffs)};
}

double Kernel::sum() const { return std::accumulate(coefficients_.begin(), coefficients_.end(), 0.0); }

void BlurPolicy::validate() const {
  if (!(thresholds[0] < thresholds[1] && thresholds[1] < thresholds[2])) {
    throw ValidationError("blur thresholds must be strictly ascending");
  }
  for (const auto& k : kernels) {
    if (std::abs(k.sum() - 1.0) > 1e-6) throw ValidationError("blur kernel coefficients must sum to 1");
  }
}

double blur_score(const Image& img) {
  if (img.width() < 3 || img.height() < 3) throw ValidationError("blur_score needs an image of at least 3x3");
  const auto f = luminance(img);
  const int w = img.width();
  const int h = img.height();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double lap = f[i - 1] + f[i + 1] + f[i - w] + f[i + w] - 4.0 * f[i];
      sum += lap;
      sum_sq += lap * lap;
    }
  }
  const double n = static_cast<double>(w - 2) * (h - 2);
  const double mean = sum / n;
  return std::max(0.0, sum_sq / n - mean * mean);
}

Kernel select_kernel(double score, const BlurPolicy& policy) {
  const auto& t = policy.thresholds;
  if (score >= t[2]) return Kernel::identity();
  if (score >= t[1]) return policy.kernels[0];
  if (score >= t[0]) return policy.kernels[1];
  return policy.kernels[2];
}

double smear_orientation(const Image& img) {
  const auto f = luminance(img);
  const int w = img.width();
  const int h = img.height();
  double jxx = 0.0;
  double jyy = 0.0;
  double jxy = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double gx = 0.5 * (f[i + 1] - f[i - 1]);
      const double gy = 0.5 * (f[i + w] - f[i - w]);
      jxx += gx * gx;
      jyy += gy * gy;
      jxy += gx * gy;
    }
  }
  const double trace = jxx + jyy;
  if (trace <= 0.0) return 0.0;
  const double coherence = std::hypot(jxx - jyy, 2.0 * jxy) / trace;
  if (coherence < 1e-3) return 0.0;
  // Dominant gradient direction in (x right, y down) coordinates; the smear
  // runs perpendicular to it. Negate to get the counter-clockwise screen angle.
  const double gradient = 0.5 * std::atan2(2.0 * jxy, jxx - jyy);
  double angle = -(gradient + std::numbers::pi / 2.0);
  angle = std::fmod(angle, std::numbers::pi);
  if (angle < 0.0) angle += std::numbers::pi;
  return angle;
}

namespace {

struct Tap {
  int dx;
  int dy;
  float weight;
};

std::vector<Tap> taps_of(const Kernel& k) {
  std::vector<Tap> taps;
  const int rx = k.width() / 2;
  const int ry = k.height() / 2;
  for (int y = 0; y < k.height(); ++y) {
    for (int x = 0; x < k.width(); ++x) {
      if (k.at(x, y) != 0.0) taps.push_back({x - rx, y - ry, static_cast<float>(k.at(x, y))});
    }
  }
  return taps;
}

}  // namespace

Plane convolve(const Plane& plane, const Kernel& kernel, int x0, int y0, int x1, int y1) {
  Plane out(plane.width, plane.height, 0.0f);
  const auto taps = taps_of(kernel);
  const int w = plane.width;
  const int h = plane.height;
  x0 = std::max(0, x0);
  y0 = std::max(0, y0);
  x1 = std::min(w, x1);
  y1 = std::min(h, y1);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      float acc = 0.0f;
      for (const Tap& t : taps) {
        const int sx = std::clamp(x + t.dx, 0, w - 1);
        const int sy = std::clamp(y + t.dy, 0, h - 1);
        acc += t.weight * plane.values[static_cast<std::size_t>(sy) * w + sx];
      }
      out.values[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

Plane convolve(const Plane& plane, const Kernel& kernel) {
  return convolve(plane, kernel, 0, 0, plane.width, plane.height);
}

Image convolve(const Image& img, const Kernel& kernel) {
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  Image out(w, h, ch);
  const auto taps = taps_of(kernel);
  const auto src = img.data();
  auto dst = out.data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (const Tap& t : taps) {
          const int sx = std::clamp(x + t.dx, 0, w - 1);
          const int sy = std::clamp(y + t.dy, 0, h - 1);
          acc += static_cast<double>(t.weight) * src[(static_cast<std::size_t>(sy) * w + sx) * ch + c];
        }
        dst[(static_cast<std::size_t>(y) * w + x) * ch + c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
      }
    }
  }
  return out;
}

Image add_gaussian_noise(const Image& img, double sigma, Rng& rng) {
  if (sigma < 0.0) throw ValidationError("noise sigma must be non-negative");
  Image out = img;
  if (sigma == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& v : out.data()) v = static_cast<std::uint8_t>(std::clamp(std::lround(v + noise(rng)), 0L, 255L));
  return out;
}

Image composite(const Image& background, const FrameBuffers& fb, const BlurPolicy& policy,
                const CompositeOptions& options, Rng& rng) {
  if (background.width() != fb.width() || background.height() != fb.height()) {
    throw ValidationError("background is " + std::to_string(background.width()) + "x" +
                          std::to_string(background.height()) + " but the render is " + std::to_string(fb.width()) +
                          "x" + std::to_string(fb.height()));
  }
  if (options.noise_sigma < 0.0) throw ValidationError("noise sigma must be non-negative");
  policy.validate();

  const int w = fb.width();
  const int h = fb.height();
  int bx0 = w, by0 = h, bx1 = -1, by1 = -1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (fb.coverage.at(x, y) > 0.0f) {
        bx0 = std::min(bx0, x);
        bx1 = std::max(bx1, x);
        by0 = std::min(by0, y);
        by1 = std::max(by1, y);
      }
    }
  }
  Image out = background;
  if (bx1 < 0) return out;

  const double score = options.background_score ? *options.background_score : blur_score(background);
  Kernel kernel = select_kernel(score, policy);
  if (policy.orient_to_background && !kernel.is_identity()) {
    const double angle =
        options.background_orientation ? *options.background_orientation : smear_orientation(background);
    kernel = Kernel::motion(std::max(kernel.width(), kernel.height()), angle);
  }

  // The kernel can only spread coverage by its radius.
  const int x0 = std::max(0, bx0 - kernel.width() / 2);
  const int x1 = std::min(w, bx1 + 1 + kernel.width() / 2);
  const int y0 = std::max(0, by0 - kernel.height() / 2);
  const int y1 = std::min(h, by1 + 1 + kernel.height() / 2);

  // Colour is zero wherever coverage is zero, so the colour planes are
  // already premultiplied by coverage.
  std::array<Plane, 3> premult;
  for (int c = 0; c < 3; ++c) {
    Plane p(w, h, 0.0f);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) p.at(x, y) = fb.color.at(x, y, c);
    }
    premult[c] = kernel.is_identity() ? std::move(p) : convolve(p, kernel, x0, y0, x1, y1);
  }
  const Plane coverage = kernel.is_identity() ? fb.coverage : convolve(fb.coverage, kernel, x0, y0, x1, y1);

  std::normal_distribution<double> noise(0.0, options.noise_sigma > 0.0 ? options.noise_sigma : 1.0);
  const bool noisy = options.noise_sigma > 0.0;
  const int out_channels = out.channels();
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double a = std::clamp(static_cast<double>(coverage.at(x, y)), 0.0, 1.0);
      if (a <= 0.0) continue;
      std::array<double, 3> syn{};
      for (int c = 0; c < 3; ++c) {
        syn[c] = premult[c].at(x, y) / a;
        if (noisy) syn[c] += noise(rng);
        syn[c] = std::clamp(syn[c], 0.0, 255.0);
      }
      if (out_channels == 3) {
        for (int c = 0; c < 3; ++c) {
          const double blended = a * syn[c] + (1.0 - a) * background.at(x, y, c);
          out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(blended), 0L, 255L));
        }
      } else {
        const double luma = 0.299 * syn[0] + 0.587 * syn[1] + 0.114 * syn[2];
        const double blended = a * luma + (1.0 - a) * background.at(x, y);
        out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(blended), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace gatesynth
