// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gatesynth/augment.hpp"
#include "gatesynth/camera.hpp"
#include "gatesynth/dataset.hpp"
#include "gatesynth/guidance.hpp"
#include "gatesynth/metrics.hpp"
#include "gatesynth/render.hpp"
#include "gatesynth/scene.hpp"
#include "support.hpp"

using namespace gatesynth;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Quat random_unit_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quat{n(rng), n(rng), n(rng), n(rng)}.normalized();
}

// Body x forward, y left, z up; image x right, y down.
WindowPoint pinhole(const CameraPose& pose, const Intrinsics& k, const Vec3& p) {
  const Eigen::Quaterniond q(pose.q_bw.w, pose.q_bw.x, pose.q_bw.y, pose.q_bw.z);
  const Vec3 b = q.toRotationMatrix().transpose() * (p - pose.r_w);
  return {k.fx * -b.y() / b.x() + k.cx, k.fy * -b.z() / b.x() + k.cy};
}

GateSpec panel_only(const GateSpec& spec) {
  GateSpec out = spec;
  out.mesh.faces.clear();
  out.mesh.face_materials.clear();
  out.mesh.face_colors.clear();
  for (std::size_t f = 0; f < spec.mesh.faces.size(); ++f) {
    if (!spec.mesh.face_materials.empty() && spec.mesh.face_materials[f] == "leg") continue;
    out.mesh.faces.push_back(spec.mesh.faces[f]);
    if (!spec.mesh.face_materials.empty()) out.mesh.face_materials.push_back(spec.mesh.face_materials[f]);
    if (spec.mesh.face_colors.size() > 1) out.mesh.face_colors.push_back(spec.mesh.face_colors[f]);
  }
  if (spec.mesh.face_colors.size() == 1) out.mesh.face_colors = spec.mesh.face_colors;
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome projection_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240101);
  std::uniform_real_distribution<double> u(-10.0, 10.0), depth(0.5, 40.0), lateral(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    CameraModel cam;
    cam.pose = {Vec3(u(rng), u(rng), u(rng)), random_unit_quat(rng)};
    const double z = depth(rng);
    const Vec3 p = cam.pose.r_w + quat_rotate(cam.pose.q_bw, Vec3(z, lateral(rng) * z, lateral(rng) * z));
    const auto got = project_point(cam, p);
    const auto want = pinhole(cam.pose, cam.intrinsics, p);
    if (!got.in_front) return {false, "point reported behind the camera"};
    worst = std::max({worst, std::abs(got.pixel.x - want.x), std::abs(got.pixel.y - want.y)});
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 5.0, fmt("max error %.3g px, %.2f s", worst, t)};
}

Outcome viewport_anchors() {
  const Viewport vp{640, 480, 0, 0};
  const auto a = ndc_to_window(0, 0, vp), b = ndc_to_window(1, 1, vp), c = ndc_to_window(-1, 0, vp);
  const bool ok = a.x == 320 && a.y == 240 && b.x == 640 && b.y == 480 && c.x == 0 && c.y == 240;
  return {ok, fmt("(%g,%g) (%g,%g) (%g,%g)", a.x, a.y, b.x, b.y, c.x, c.y)};
}

Outcome render_annotation_agreement() {
  const auto t0 = Clock::now();
  SceneConfig scene;
  scene.max_gates = 1;
  scene.bounds = {Vec3(-4, -4, 0), Vec3(4, 4, 0)};
  scene.available_specs = {panel_only(testing::ground_gate()), panel_only(testing::raised_gate())};
  int scenes = 0, violations = 0;
  double worst = 0.0, steepest_violation = 0.0;
  for (std::uint64_t s = 0; scenes < 500 && s < 100000; ++s) {
    Rng rng(derive_seed(77, s));
    const auto gates = sample_gate_poses(scene, rng);
    CameraModel cam;
    cam.pose = testing::ring_pose(derive_seed(78, s));
    const auto ann = annotate_scene(cam, gates);
    if (ann.empty() || ann[0].visible_corners < 4) continue;  // gate fully in view
    const auto fb = render_scene(cam, gates);
    int x0 = fb.width(), y0 = fb.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < fb.height(); ++y)
      for (int x = 0; x < fb.width(); ++x)
        if (!fb.empty_at(x, y)) {
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x + 1);
          y1 = std::max(y1, y + 1);
        }
    ++scenes;
    const auto& b = ann[0].bbox;
    const double err = std::max({std::abs(x0 - b.x_min), std::abs(y0 - b.y_min), std::abs(x1 - b.x_max),
                                 std::abs(y1 - b.y_max)});
    worst = std::max(worst, err);
    if (err > 2.0) {
      ++violations;
      // Angle between the line of sight and the panel plane; 0 is edge-on.
      const Vec3 los = (gates[0].world_center() - cam.pose.r_w).normalized();
      const double grazing = std::asin(std::abs(los.dot(gates[0].world_normal()))) * 180.0 / std::numbers::pi;
      steepest_violation = std::max(steepest_violation, grazing);
    }
  }
  const double t = seconds_since(t0);
  return {scenes == 500 && violations == 0 && t < 60.0,
          fmt("%d scenes, %d outside +-2 px (all within %.1f deg of edge-on), worst %.2f px, %.1f s", scenes,
              violations, steepest_violation, worst, t)};
}

Outcome placement_invariants() {
  SceneConfig cfg;
  cfg.max_gates = 3;
  cfg.min_distance = 2.0;
  cfg.bounds = {Vec3(-4, -4, 0), Vec3(4, 4, 0)};
  cfg.available_specs = {testing::ground_gate(), testing::raised_gate()};
  int violations = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    Rng rng(derive_seed(3, s));
    const auto gates = sample_gate_poses(cfg, rng);
    if (gates.empty() || static_cast<int>(gates.size()) > cfg.max_gates) ++violations;
    for (std::size_t i = 0; i < gates.size(); ++i) {
      if (!cfg.bounds.contains(gates[i].position)) ++violations;
      for (std::size_t j = i + 1; j < gates.size(); ++j)
        if ((gates[i].world_center() - gates[j].world_center()).norm() < cfg.min_distance) ++violations;
    }
  }
  return {violations == 0, fmt("10000 scenes, %d violations", violations)};
}

Outcome determinism() {
  testing::TempDir dir("accept_det");
  const auto log = testing::write_background_set(dir.path() / "bg", 8, 640, 480, 11);
  auto backgrounds = load_backgrounds(log, dir.path() / "bg", Viewport{});
  prepare_backgrounds(backgrounds);
  const GeneratorConfig cfg = testing::default_generator_config();
  const auto a = generate_dataset(backgrounds, cfg, {0, 100, 42, 4}, dir.path() / "a");
  const auto b = generate_dataset(backgrounds, cfg, {0, 100, 42, 4}, dir.path() / "b");
  int differing = 0;
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir.path() / "a")) {
    ++files;
    const fs::path other = dir.path() / "b" / entry.path().filename();
    if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) ++differing;
  }
  const bool ok = differing == 0 && a.manifest.images.size() + a.skipped.size() == 100 &&
                  a.manifest.images.size() == b.manifest.images.size();
  return {ok, fmt("%zu files compared, %d differ", files, differing)};
}

Outcome laplacian_properties() {
  const Image flat(64, 48, 3, 137);
  const double flat_score = blur_score(flat);
  int not_lower = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Image img = testing::textured_image(160, 120, 1000 + i, 1 + static_cast<int>(i % 6));
    std::vector<double> g(9);
    double sum = 0.0;
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) sum += g[y * 3 + x] = std::exp(-((x - 1) * (x - 1) + (y - 1) * (y - 1)) / 2.0);
    for (auto& v : g) v /= sum;
    if (!(blur_score(convolve(img, Kernel(3, 3, g))) < blur_score(img))) ++not_lower;
  }
  const Image grey(1000, 1000, 1, 128);
  Rng rng(99);
  const Image noisy = add_gaussian_noise(grey, 10.0, rng);
  double sum = 0.0, sum_sq = 0.0;
  for (auto v : noisy.data()) {
    sum += v - 128.0;
    sum_sq += (v - 128.0) * (v - 128.0);
  }
  const double mean = sum / 1e6;
  const double sd = std::sqrt(sum_sq / 1e6 - mean * mean);
  const bool ok = flat_score == 0.0 && not_lower == 0 && std::abs(sd - 10.0) <= 0.5;
  return {ok, fmt("constant %g, %d of 100 blurred not lower, noise sd %.3f", flat_score, not_lower, sd)};
}

Outcome metrics_hand_cases() {
  using R = PixelRect;
  const double one_third = iou(R{0, 0, 10, 10}, R{5, 0, 15, 10});
  const std::vector<GroundTruth> gts{{1, Category::kTarget, R{0, 0, 10, 10}},
                                     {1, Category::kTarget, R{20, 0, 30, 10}},
                                     {1, Category::kTarget, R{40, 0, 50, 10}}};
  const std::vector<Detection> dets{{1, Category::kTarget, R{0, 0, 10, 10}, 0.9},
                                    {1, Category::kTarget, R{60, 0, 70, 10}, 0.8},
                                    {1, Category::kTarget, R{21, 0, 31, 10}, 0.7},
                                    {1, Category::kTarget, R{41, 41, 51, 51}, 0.6}};
  const std::vector<double> thresholds{0.5, 0.75, 0.9};
  const auto report = evaluate_detections(dets, gts, thresholds);
  // Ranked TP, FP, TP, FP over 3 ground truths: precision 1 to recall 1/3,
  // then 2/3 to recall 2/3.
  const double hand = 1.0 / 3.0 * 1.0 + 1.0 / 3.0 * 2.0 / 3.0;
  const double ap = report.thresholds[0].per_class.at(Category::kTarget).ap;

  // Monotonic across thresholds on random inputs.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 200), s(5, 60), jitter(-8, 8), score(0, 1);
  std::uniform_int_distribution<int> cat(0, 2), img(0, 9);
  int breaks = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GroundTruth> g;
    std::vector<Detection> d;
    for (int i = 0; i < 40; ++i) {
      const double x = u(rng), y = u(rng), w = s(rng), h = s(rng);
      const auto c = static_cast<Category>(cat(rng));
      const auto id = static_cast<std::uint64_t>(img(rng));
      g.push_back({id, c, R{x, y, x + w, y + h}});
      if (score(rng) < 0.8) {
        const double dx = jitter(rng), dy = jitter(rng);
        d.push_back({id, c, R{x + dx, y + dy, x + w + dx + jitter(rng), y + h + dy + jitter(rng)}, score(rng)});
      }
      if (score(rng) < 0.3) d.push_back({id, c, R{u(rng), u(rng), u(rng) + 200, u(rng) + 200}, score(rng)});
    }
    const auto r = evaluate_detections(d, g, thresholds);
    for (std::size_t k = 1; k < r.thresholds.size(); ++k) {
      for (const auto& [c, m] : r.thresholds[k].per_class) {
        const auto& prev = r.thresholds[k - 1].per_class.at(c);
        if (m.ap > prev.ap + 1e-12 || m.ar > prev.ar + 1e-12) ++breaks;
      }
    }
  }
  const bool ok = one_third == 1.0 / 3.0 && std::abs(ap - hand) <= 1e-9 && breaks == 0;
  return {ok, fmt("IoU %.17g, AP %.12f vs %.12f, %d monotonicity breaks", one_third, ap, hand, breaks)};
}

Outcome distance_report_cases() {
  const std::vector<double> truth{5.0, 5.0, 5.0}, pred{5.2, 5.6, 6.0}, thr{0.75};
  const auto r = distance_report(pred, truth, thr);
  const bool exact = std::abs(r.mae - 0.6) <= 1e-12 && std::abs(r.accuracy[0] - 2.0 / 3.0) <= 1e-12;

  const GateSpec spec = protocol_gate_spec();
  const GateInstance gate = protocol_gate(spec);
  CameraModel cam;
  cam.pose = {Vec3(-6, 0, 1.5), Quat::identity()};
  Rng rng(123);
  const PerceptionNoise noise{4.0, 0.660};
  const double d0 = perceive(cam, gate, {}, rng).distance;
  double abs_sum = 0.0;
  for (int i = 0; i < 100000; ++i) abs_sum += std::abs(perceive(cam, gate, noise, rng).distance - d0);
  const double mae = abs_sum / 100000;
  const bool calibrated = std::abs(mae - 0.660) <= 0.05 * 0.660;
  return {exact && calibrated, fmt("MAE %.12g, acc(0.75) %.12g, calibrated MAE %.4f", r.mae, r.accuracy[0], mae)};
}

Outcome guidance_protocol() {
  const GateSpec spec = protocol_gate_spec();
  const GateInstance gate = protocol_gate(spec);
  const auto t0 = Clock::now();
  const auto clean = run_protocol(gate, SimConfig{}, ProtocolOptions{});
  const double t = seconds_since(t0);
  const auto succeeded = std::count_if(clean.begin(), clean.end(), [](const SimRun& r) { return r.success; });

  SimConfig noisy;
  noisy.noise = {4.0, 0.660};
  ProtocolOptions opt;
  opt.speeds = {0.5, 2.0};
  opt.runs_per_cell = 10;
  opt.seed = 17;
  double sum[2] = {0, 0};
  int n[2] = {0, 0};
  for (const auto& r : run_protocol(gate, noisy, opt)) {
    if (!r.crossing) continue;
    const int k = r.cruise > 1.0 ? 1 : 0;
    sum[k] += r.crossing->euclidean();
    ++n[k];
  }
  const double slow = n[0] ? sum[0] / n[0] : 0.0, fast = n[1] ? sum[1] / n[1] : 0.0;
  const bool ok = clean.size() == 45 && succeeded == 45 && t < 120.0 && n[0] >= 30 && n[1] >= 30 && fast > slow;
  return {ok, fmt("%zu runs in %.1f s, %ld succeeded; noisy mean offset %.3f m at 0.5 (n=%d), %.3f m at 2 (n=%d)",
                  clean.size(), t, static_cast<long>(succeeded), slow, n[0], fast, n[1])};
}

Outcome throughput() {
  testing::TempDir dir("accept_tp");
  const auto log = testing::write_background_set(dir.path() / "bg", 16, 640, 480, 5);
  auto backgrounds = load_backgrounds(log, dir.path() / "bg", Viewport{});
  prepare_backgrounds(backgrounds);
  const GeneratorConfig cfg = testing::default_generator_config();
  const std::uint64_t count = 200;
  const auto t0 = Clock::now();
  const auto r = generate_dataset(backgrounds, cfg, {0, count, 9, 8}, dir.path() / "out");
  const double t = seconds_since(t0);
  const double rate = count / t;
  return {rate >= 20.0, fmt("%.1f samples/s (%zu written, %u hardware threads)", rate, r.manifest.images.size(),
                            std::thread::hardware_concurrency())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"projection oracle equivalence", projection_oracle},
      {"viewport transform anchors", viewport_anchors},
      {"render/annotation agreement", render_annotation_agreement},
      {"gate placement invariants", placement_invariants},
      {"dataset determinism", determinism},
      {"laplacian and noise properties", laplacian_properties},
      {"detection metric hand cases", metrics_hand_cases},
      {"distance report", distance_report_cases},
      {"guidance protocol", guidance_protocol},
      {"generation throughput", throughput},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
