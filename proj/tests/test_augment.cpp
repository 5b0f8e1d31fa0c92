#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "gatesynth/augment.hpp"
#include "gatesynth/error.hpp"
#include "gatesynth/render.hpp"
#include "support.hpp"

using namespace gatesynth;

namespace {

Kernel gaussian_kernel(double sigma, int radius) {
  const int n = 2 * radius + 1;
  std::vector<double> c(static_cast<std::size_t>(n) * n);
  double total = 0.0;
  for (int y = -radius; y <= radius; ++y)
    for (int x = -radius; x <= radius; ++x) {
      const double v = std::exp(-(x * x + y * y) / (2 * sigma * sigma));
      c[static_cast<std::size_t>(y + radius) * n + x + radius] = v;
      total += v;
    }
  for (auto& v : c) v /= total;
  return {n, n, c};
}

// Direct Laplacian variance over interior pixels of a grey image.
double laplacian_variance_oracle(const Image& g) {
  std::vector<double> lap;
  for (int y = 1; y < g.height() - 1; ++y)
    for (int x = 1; x < g.width() - 1; ++x)
      lap.push_back(double(g.at(x - 1, y)) + g.at(x + 1, y) + g.at(x, y - 1) + g.at(x, y + 1) - 4.0 * g.at(x, y));
  double mean = 0.0;
  for (double v : lap) mean += v;
  mean /= lap.size();
  double var = 0.0;
  for (double v : lap) var += (v - mean) * (v - mean);
  return var / lap.size();
}

BlurPolicy fixed_policy() {
  BlurPolicy p;
  p.orient_to_background = false;
  return p;
}

}  // namespace

TEST_CASE("Kernel construction") {
  CHECK_THROWS_AS(Kernel(2, 1, {0.5, 0.5}), ValidationError);
  CHECK_THROWS_AS(Kernel(3, 2, std::vector<double>(6, 1.0 / 6)), ValidationError);
  CHECK_THROWS_AS(Kernel(3, 1, {1.0}), ValidationError);
  CHECK(Kernel::identity().is_identity());
  CHECK(Kernel::box(3, 3).sum() == doctest::Approx(1.0));

  const Kernel h = Kernel::motion(5, 0.0);
  CHECK(h.width() == 5);
  CHECK(h.height() == 1);
  for (int x = 0; x < 5; ++x) CHECK(h.at(x, 0) == doctest::Approx(0.2));
  const Kernel v = Kernel::motion(9, std::numbers::pi / 2);
  CHECK(v.width() == 1);
  CHECK(v.height() == 9);
  const Kernel d = Kernel::motion(13, 0.7);
  CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.width() % 2 == 1);
  CHECK(d.height() % 2 == 1);
  // Counter-clockwise on screen: a 45 degree line rises to the right, i.e.
  // the top-right tap is set and the top-left one is not.
  const Kernel diag = Kernel::motion(5, std::numbers::pi / 4);
  CHECK(diag.at(4, 0) > 0.0);
  CHECK(diag.at(0, 0) == 0.0);
  CHECK_THROWS_AS(Kernel::motion(4, 0.0), ValidationError);
}

TEST_CASE("BlurPolicy validation") {
  BlurPolicy p;
  CHECK_NOTHROW(p.validate());
  p.thresholds = {100, 100, 1000};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.kernels[1] = Kernel(3, 1, {1.0, 1.0, 1.0});
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("blur_score") {
  CHECK(blur_score(Image(10, 10, 1, 77)) == 0.0);
  CHECK(blur_score(Image(10, 10, 3, 200)) == 0.0);
  CHECK_THROWS_AS(blur_score(Image(2, 5, 1)), ValidationError);

  // Impulse of 100 in a 5x5 zero field: interior Laplacian values are -400
  // once, 100 four times and 0 four times; mean 0, variance 200000 / 9.
  Image impulse(5, 5, 1, 0);
  impulse.at(2, 2) = 100;
  CHECK(laplacian_variance_oracle(impulse) == doctest::Approx(200000.0 / 9.0).epsilon(1e-12));
  CHECK(blur_score(impulse) == doctest::Approx(200000.0 / 9.0).epsilon(1e-12));

  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image g = to_grey(testing::textured_image(64, 48, s, 2));
    CHECK(blur_score(g) == doctest::Approx(laplacian_variance_oracle(g)).epsilon(1e-9));
  }
}

TEST_CASE("blur_score is invariant to a constant offset") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> u(20, 200);
  for (int i = 0; i < 20; ++i) {
    Image a(50, 40, 1), b(50, 40, 1);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 50; ++x) {
        a.at(x, y) = static_cast<std::uint8_t>(u(rng));
        b.at(x, y) = static_cast<std::uint8_t>(a.at(x, y) + 37);
      }
    CHECK(blur_score(a) == doctest::Approx(blur_score(b)).epsilon(1e-12));
  }
}

TEST_CASE("Gaussian blur lowers the score") {
  const Kernel g = gaussian_kernel(1.0, 2);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Image img = testing::textured_image(96, 72, s, 1 + int(s % 4));
    CHECK(blur_score(convolve(img, g)) < blur_score(img));
  }
}

TEST_CASE("stronger motion kernels never raise the score") {
  const BlurPolicy p = fixed_policy();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Image img = testing::textured_image(96, 72, 100 + s, 1 + int(s % 3));
    const double s0 = blur_score(convolve(img, p.kernels[0]));
    const double s1 = blur_score(convolve(img, p.kernels[1]));
    const double s2 = blur_score(convolve(img, p.kernels[2]));
    CHECK(s1 <= s0);
    CHECK(s2 <= s1);
  }
}

TEST_CASE("select_kernel bands") {
  const BlurPolicy p = fixed_policy();
  CHECK(select_kernel(5000, p).is_identity());
  CHECK(select_kernel(1000, p).is_identity());
  CHECK(select_kernel(999.9, p) == p.kernels[0]);
  CHECK(select_kernel(300, p) == p.kernels[0]);
  CHECK(select_kernel(299, p) == p.kernels[1]);
  CHECK(select_kernel(100, p) == p.kernels[1]);
  CHECK(select_kernel(99, p) == p.kernels[2]);
  CHECK(select_kernel(0, p) == p.kernels[2]);
}

TEST_CASE("smear_orientation") {
  Image horizontal(64, 64, 1), vertical(64, 64, 1);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      horizontal.at(x, y) = static_cast<std::uint8_t>(128 + 100 * std::sin(y * 0.7));
      vertical.at(x, y) = static_cast<std::uint8_t>(128 + 100 * std::sin(x * 0.7));
    }
  // Rows of constant intensity smear along x.
  CHECK(smear_orientation(horizontal) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(smear_orientation(vertical) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-9));
  CHECK(smear_orientation(Image(16, 16, 1, 9)) == 0.0);

  // Stripes constant along a line rising to the right at 45 degrees.
  Image diag(64, 64, 1);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) diag.at(x, y) = static_cast<std::uint8_t>(128 + 100 * std::sin((x + y) * 0.5));
  CHECK(smear_orientation(diag) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-6));
}

TEST_CASE("convolve") {
  const Image img = testing::textured_image(40, 30, 3);
  CHECK(convolve(img, Kernel::identity()) == img);
  CHECK(convolve(Image(20, 20, 3, 93), Kernel::box(3, 3)) == Image(20, 20, 3, 93));

  // Vertical edge at x = 20 through a 1x9 box: the step becomes a ramp of
  // 255 k / 9, rounded, over columns 16..23.
  Image edge(40, 5, 1, 0);
  for (int y = 0; y < 5; ++y)
    for (int x = 20; x < 40; ++x) edge.at(x, y) = 255;
  const Image out = convolve(edge, Kernel::box(9, 1));
  const int ramp[] = {0, 28, 57, 85, 113, 142, 170, 198, 227, 255};
  for (int y = 0; y < 5; ++y) {
    for (int i = 0; i < 10; ++i) CHECK(out.at(15 + i, y) == ramp[i]);
    CHECK(out.at(0, y) == 0);
    CHECK(out.at(39, y) == 255);
  }

  // Replicate padding: a constant border stays constant.
  Image border(10, 10, 1, 50);
  CHECK(convolve(border, Kernel::motion(13, 0.3)) == border);
}

TEST_CASE("add_gaussian_noise") {
  const Image grey(1000, 1000, 1, 128);
  Rng rng(42);
  CHECK(add_gaussian_noise(grey, 0.0, rng) == grey);

  Rng a(7), b(7);
  const Image na = add_gaussian_noise(grey, 10.0, a);
  CHECK(na == add_gaussian_noise(grey, 10.0, b));

  double sum = 0.0, sum_sq = 0.0;
  for (auto v : na.data()) {
    sum += v - 128.0;
    sum_sq += (v - 128.0) * (v - 128.0);
  }
  const double n = 1e6;
  const double mean = sum / n;
  const double sd = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(mean) <= 0.1);
  // Rounding to integers adds 1/12 to the variance.
  CHECK(std::abs(sd - 10.0) <= 0.5);
  CHECK_THROWS_AS(add_gaussian_noise(grey, -1.0, rng), ValidationError);
}

TEST_CASE("composite") {
  const Image bg = testing::textured_image(64, 48, 11);
  Rng rng(1);

  SUBCASE("zero coverage returns the background") {
    FrameBuffers fb(64, 48);
    CHECK(composite(bg, fb, BlurPolicy{}, {}, rng) == bg);
  }
  SUBCASE("full coverage, identity kernel, no noise gives the synthetic colour") {
    FrameBuffers fb(64, 48);
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 64; ++x) {
        fb.coverage.at(x, y) = 1.0f;
        fb.depth.at(x, y) = 1.0f;
        for (int c = 0; c < 3; ++c) fb.color.at(x, y, c) = static_cast<std::uint8_t>(x + y + 40 * c);
      }
    CompositeOptions opt;
    opt.noise_sigma = 0.0;
    opt.background_score = 1e9;
    CHECK(composite(bg, fb, BlurPolicy{}, opt, rng) == fb.color);
  }
  SUBCASE("fractional coverage blends per channel") {
    FrameBuffers fb(64, 48);
    fb.coverage.at(10, 10) = 0.5f;
    fb.color.at(10, 10, 0) = 200;
    fb.color.at(10, 10, 1) = 0;
    fb.color.at(10, 10, 2) = 100;
    CompositeOptions opt;
    opt.noise_sigma = 0.0;
    opt.background_score = 1e9;
    const Image out = composite(bg, fb, BlurPolicy{}, opt, rng);
    // Colour in the buffer is premultiplied, so the synthetic value is colour / coverage.
    for (int c = 0; c < 3; ++c) {
      const double syn = std::min(255.0, fb.color.at(10, 10, c) / 0.5);
      const double want = 0.5 * syn + 0.5 * bg.at(10, 10, c);
      CHECK(std::abs(out.at(10, 10, c) - want) <= 0.5);
      const double lo = std::min(syn, double(bg.at(10, 10, c))), hi = std::max(syn, double(bg.at(10, 10, c)));
      CHECK(out.at(10, 10, c) >= std::floor(lo));
      CHECK(out.at(10, 10, c) <= std::ceil(hi));
    }
  }
  SUBCASE("dimension mismatch") {
    FrameBuffers fb(32, 48);
    CHECK_THROWS_AS(composite(bg, fb, BlurPolicy{}, {}, rng), ValidationError);
  }
  SUBCASE("grey backgrounds stay grey") {
    const Image grey = to_grey(bg);
    FrameBuffers fb(64, 48);
    fb.coverage.at(5, 5) = 1.0f;
    fb.color.at(5, 5, 0) = 255;
    CompositeOptions opt;
    opt.noise_sigma = 0.0;
    opt.background_score = 1e9;
    const Image out = composite(grey, fb, BlurPolicy{}, opt, rng);
    CHECK(out.channels() == 1);
    CHECK(out.at(5, 5) == 76);  // 0.299 * 255
  }
}

TEST_CASE("composite leaves pixels outside the dilated mask untouched") {
  CameraModel cam;
  cam.pose.r_w = Vec3(0, 0, 0.75);
  const GateSpec spec = testing::ground_gate();
  const std::vector<GateInstance> gates{{&spec, 0, Vec3(4, 0.5, 0), 3.0}};
  const FrameBuffers fb = render_scene(cam, gates);
  for (double score : {10.0, 200.0, 500.0, 5000.0}) {
    const Image bg = testing::textured_image(640, 480, 5, 4);
    CompositeOptions opt;
    opt.background_score = score;
    Rng rng(3);
    const Image out = composite(bg, fb, BlurPolicy{}, opt, rng);
    const Kernel k = select_kernel(score, BlurPolicy{});
    const int r = std::max(k.width(), k.height()) / 2;
    int changed_outside = 0, changed = 0;
    for (int y = 0; y < 480; ++y)
      for (int x = 0; x < 640; ++x) {
        bool near_cov = false;
        for (int dy = -r; dy <= r && !near_cov; ++dy)
          for (int dx = -r; dx <= r && !near_cov; ++dx) {
            const int sx = x + dx, sy = y + dy;
            near_cov = sx >= 0 && sy >= 0 && sx < 640 && sy < 480 && fb.coverage.at(sx, sy) > 0;
          }
        bool diff = false;
        for (int c = 0; c < 3; ++c) diff = diff || out.at(x, y, c) != bg.at(x, y, c);
        changed += diff;
        if (!near_cov && diff) ++changed_outside;
      }
    CHECK(changed > 1000);
    CHECK(changed_outside == 0);
  }
}

TEST_CASE("composite is deterministic per seed") {
  CameraModel cam;
  cam.pose.r_w = Vec3(0, 0, 0.75);
  const GateSpec spec = testing::ground_gate();
  const FrameBuffers fb = render_scene(cam, std::vector<GateInstance>{{&spec, 0, Vec3(4, 0, 0), 3.0}});
  const Image bg = testing::textured_image(640, 480, 9, 8);
  Rng a(5), b(5), c(6);
  const Image x = composite(bg, fb, BlurPolicy{}, {}, a);
  CHECK(x == composite(bg, fb, BlurPolicy{}, {}, b));
  CHECK_FALSE(x == composite(bg, fb, BlurPolicy{}, {}, c));
}
