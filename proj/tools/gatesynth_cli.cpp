#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gatesynth/config.hpp"
#include "gatesynth/dataset.hpp"
#include "gatesynth/error.hpp"
#include "gatesynth/guidance.hpp"
#include "gatesynth/image.hpp"
#include "gatesynth/metrics.hpp"

namespace fs = std::filesystem;
using namespace gatesynth;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kGenerationError = 2;

// Thrown for bad command-line values; reported like a config error.
struct UsageError : Error {
  using Error::Error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw UsageError("not a number: '" + s + "'");
  return v;
}

std::vector<double> number_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(to_double(item));
  if (out.empty()) throw UsageError("empty list");
  return out;
}

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct GenerateArgs {
  std::string config, backgrounds, poses, meshes, out, split;
  std::optional<std::uint64_t> count;
  std::uint64_t seed = 0;
  unsigned threads = default_threads();
};

int run_generate(const GenerateArgs& a) {
  GeneratorConfig cfg;
  std::vector<std::pair<std::string, std::uint64_t>> parts;  // (subdir, count)
  try {
    cfg = load_config(a.config);
    load_gate_specs(cfg, a.meshes);
    cfg.validate();
    if (!a.split.empty()) {
      const auto fields = split(a.split, ':');
      if (fields.size() != 2) throw UsageError("--split expects TRAIN:VAL");
      const auto train = static_cast<std::uint64_t>(to_double(fields[0]));
      const auto val = static_cast<std::uint64_t>(to_double(fields[1]));
      if (a.count && *a.count != train + val) throw UsageError("--count disagrees with --split");
      parts = {{"train", train}, {"val", val}};
    } else {
      if (!a.count) throw UsageError("--count or --split is required");
      parts = {{"", *a.count}};
    }
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    auto backgrounds = load_backgrounds(fs::path(a.poses), fs::path(a.backgrounds), cfg.viewport);
    if (backgrounds.empty()) throw IngestionError("no backgrounds listed in " + a.poses);
    prepare_backgrounds(backgrounds);
    std::uint64_t first = 0;
    for (const auto& [sub, n] : parts) {
      const fs::path dir = sub.empty() ? fs::path(a.out) : fs::path(a.out) / sub;
      const auto result = generate_dataset(backgrounds, cfg, {first, n, a.seed, a.threads}, dir);
      std::cout << dir.string() << ": " << result.manifest.images.size() << " samples";
      if (!result.skipped.empty()) std::cout << ", " << result.skipped.size() << " skipped";
      std::cout << '\n';
      first += n;
    }
  } catch (const Error& e) {
    std::cerr << "generation error: " << e.what() << '\n';
    return kGenerationError;
  }
  return kOk;
}

struct CropArgs {
  std::string image, bbox, out;
};

int run_crop(const CropArgs& a) {
  PixelRect r;
  try {
    const auto v = number_list(a.bbox);
    if (v.size() != 4) throw UsageError("--bbox expects x,y,w,h");
    r = {v[0], v[1], v[0] + v[2], v[1] + v[3]};
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    write_png(a.out, crop_to_bbox(read_png(a.image), r));
  } catch (const Error& e) {
    std::cerr << "crop failed: " << e.what() << '\n';
    return kGenerationError;
  }
  return kOk;
}

struct Prediction {
  Detection det;
  std::optional<double> distance;
};

Category category_of(const nlohmann::json& a) {
  if (a.contains("category_id")) return static_cast<Category>(a.at("category_id").get<int>());
  return category_from_name(a.at("category").get<std::string>());
}

// Predictions use the manifest layout: a top-level "annotations" array whose
// entries carry image_id, category_id (or category name), bbox [x, y, w, h],
// an optional score (default 1) and an optional distance.
std::vector<Prediction> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    const auto& anns = doc.is_array() ? doc : doc.at("annotations");
    std::vector<Prediction> out;
    for (const auto& a : anns) {
      const auto b = a.at("bbox").get<std::array<double, 4>>();
      Prediction p;
      p.det.image_id = a.at("image_id").get<std::uint64_t>();
      p.det.category = category_of(a);
      p.det.bbox = {b[0], b[1], b[0] + b[2], b[1] + b[3]};
      p.det.score = a.value("score", 1.0);
      if (a.contains("distance")) p.distance = a.at("distance").get<double>();
      out.push_back(p);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

struct EvaluateArgs {
  std::string gt, pred, iou = "0.5,0.75,0.9", distance_thresholds = "0.75,0.5,0.25";
};

int run_evaluate(const EvaluateArgs& a) {
  std::vector<double> ious, taus;
  std::vector<GroundTruth> gts;
  std::vector<double> gt_distance;
  std::vector<Prediction> preds;
  try {
    ious = number_list(a.iou);
    taus = number_list(a.distance_thresholds);
    const auto manifest = read_manifest(a.gt);
    for (const auto& img : manifest.images) {
      for (const auto& r : img.annotations) {
        gts.push_back({img.id, r.category, {r.bbox[0], r.bbox[1], r.bbox[0] + r.bbox[2], r.bbox[1] + r.bbox[3]}});
        gt_distance.push_back(r.distance);
      }
    }
    preds = read_predictions(a.pred);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    std::vector<Detection> dets;
    for (const auto& p : preds) dets.push_back(p.det);
    const auto report = evaluate_detections(dets, gts, ious);
    for (auto c : {Category::kTarget, Category::kFront, Category::kBack}) {
      std::cout << category_name(c) << '\n' << format_detection_table(report, c) << '\n';
    }
    std::cout << format_class_table(report) << '\n';

    // Distance pairs: each ground truth takes the best-scoring unused
    // prediction of its class in the same image with IoU >= 0.5.
    std::vector<std::size_t> order(preds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return preds[x].det.score > preds[y].det.score; });
    std::vector<bool> used_gt(gts.size(), false);
    std::vector<double> predicted, truth;
    for (std::size_t k : order) {
      const auto& p = preds[k];
      if (!p.distance) continue;
      std::optional<std::size_t> best;
      double best_iou = 0.5;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (used_gt[g] || gts[g].image_id != p.det.image_id || gts[g].category != p.det.category) continue;
        const double v = iou(gts[g].bbox, p.det.bbox);
        if (v >= best_iou) {
          best_iou = v;
          best = g;
        }
      }
      if (!best) continue;
      used_gt[*best] = true;
      predicted.push_back(*p.distance);
      truth.push_back(gt_distance[*best]);
    }
    if (!predicted.empty()) {
      std::cout << "distance (" << predicted.size() << " matched)\n"
                << format_distance_table(distance_report(predicted, truth, taus));
    }
  } catch (const Error& e) {
    std::cerr << "evaluation failed: " << e.what() << '\n';
    return kGenerationError;
  }
  return kOk;
}

struct SimulateArgs {
  std::string speeds = "0.5,1,2", starts = "left,centre,right", out;
  int runs = 5;
  std::uint64_t seed = 0;
  double pixel_noise = 4.0;
  double distance_mae = 0.660;
  unsigned threads = default_threads();
};

int run_simulate(const SimulateArgs& a) {
  ProtocolOptions opt;
  SimConfig cfg;
  try {
    opt.speeds = number_list(a.speeds);
    opt.starts.clear();
    for (const auto& s : split(a.starts, ',')) opt.starts.push_back(start_from_name(s));
    if (a.runs < 1) throw UsageError("--runs must be positive");
    opt.runs_per_cell = a.runs;
    opt.seed = a.seed;
    opt.threads = a.threads;
    cfg.noise = {a.pixel_noise, a.distance_mae};
    if (a.pixel_noise < 0 || a.distance_mae < 0) throw UsageError("noise levels must be non-negative");
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    const GateSpec spec = protocol_gate_spec();
    const auto runs = run_protocol(protocol_gate(spec), cfg, opt);
    const std::string table = format_crossing_table(crossing_stats(runs));
    std::cout << table;
    const fs::path dir(a.out);
    fs::create_directories(dir);
    std::ofstream(dir / "crossings.txt") << table;
    std::ofstream csv(dir / "trajectories.csv");
    write_trajectories_csv(csv, runs);
    if (!csv) throw IoError("failed writing " + (dir / "trajectories.csv").string());
  } catch (const Error& e) {
    std::cerr << "simulation failed: " << e.what() << '\n';
    return kGenerationError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "simulation failed: " << e.what() << '\n';
    return kGenerationError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-synthetic gate dataset generator, detector evaluation and guidance simulation"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Render and annotate a dataset");
  g->add_option("--config", gen.config, "Generator config (JSON)")->required();
  g->add_option("--backgrounds", gen.backgrounds, "Background image directory")->required();
  g->add_option("--poses", gen.poses, "Pose log CSV")->required();
  g->add_option("--meshes", gen.meshes, "Directory with gate specs and meshes")->required();
  g->add_option("--count", gen.count, "Number of samples");
  g->add_option("--seed", gen.seed, "Master seed")->required();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--split", gen.split, "TRAIN:VAL sample counts, written to out/train and out/val");
  g->add_option("--threads", gen.threads, "Worker threads")->check(CLI::PositiveNumber);

  CropArgs crop;
  auto* c = app.add_subcommand("crop", "Black out everything outside a box");
  c->add_option("--image", crop.image)->required();
  c->add_option("--bbox", crop.bbox, "x,y,w,h in pixels")->required();
  c->add_option("--out", crop.out)->required();

  EvaluateArgs eval;
  auto* e = app.add_subcommand("evaluate", "Score predictions against a manifest");
  e->add_option("--gt", eval.gt, "Ground-truth manifest")->required();
  e->add_option("--pred", eval.pred, "Predictions in manifest layout")->required();
  e->add_option("--iou", eval.iou, "IoU thresholds")->capture_default_str();
  e->add_option("--distance-thresholds", eval.distance_thresholds, "Distance error thresholds (m)")
      ->capture_default_str();

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run the gate-crossing protocol");
  s->add_option("--speeds", sim.speeds, "Cruise speeds (m/s)")->capture_default_str();
  s->add_option("--starts", sim.starts, "Start positions: left, centre, right")->capture_default_str();
  s->add_option("--runs", sim.runs, "Runs per speed and start")->capture_default_str();
  s->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  s->add_option("--out", sim.out, "Report directory")->required();
  s->add_option("--pixel-noise", sim.pixel_noise, "Detector centre noise sigma (px)")->capture_default_str();
  s->add_option("--distance-mae", sim.distance_mae, "Distance estimate mean absolute error (m)")
      ->capture_default_str();
  s->add_option("--threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kConfigError;
  }

  if (g->parsed()) return run_generate(gen);
  if (c->parsed()) return run_crop(crop);
  if (e->parsed()) return run_evaluate(eval);
  return run_simulate(sim);
}
