#include "gatesynth/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "gatesynth/augment.hpp"
#include "gatesynth/error.hpp"
#include "gatesynth/render.hpp"

namespace gatesynth {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return fields;
}

double parse_number(const std::string& s, std::size_t row, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IngestionError("pose log row " + std::to_string(row) + ": bad " + column + " value '" + s + "'");
  }
}

}  // namespace

std::shared_ptr<const Image> BackgroundRecord::load() const {
  if (image) return image;
  return std::make_shared<const Image>(read_png(image_path));
}

std::vector<BackgroundRecord> load_backgrounds(std::istream& pose_log, const std::filesystem::path& image_dir,
                                               const std::optional<Viewport>& viewport) {
  static const std::vector<std::string> kColumns{"filename", "x", "y", "z", "qw", "qx", "qy", "qz"};
  std::string line;
  if (!std::getline(pose_log, line)) throw IngestionError("pose log is empty");
  const auto header = split_csv(line);
  std::vector<std::size_t> column_of(kColumns.size());
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end()) throw IngestionError("pose log header is missing column '" + kColumns[c] + "'");
    column_of[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<BackgroundRecord> records;
  std::size_t row = 1;
  while (std::getline(pose_log, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (fields.size() < header.size()) {
      throw IngestionError("pose log row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                           " fields");
    }
    BackgroundRecord rec;
    rec.id = fields[column_of[0]];
    rec.image_path = image_dir / rec.id;
    rec.pose.r_w = {parse_number(fields[column_of[1]], row, "x"), parse_number(fields[column_of[2]], row, "y"),
                    parse_number(fields[column_of[3]], row, "z")};
    Quat q{parse_number(fields[column_of[4]], row, "qw"), parse_number(fields[column_of[5]], row, "qx"),
           parse_number(fields[column_of[6]], row, "qy"), parse_number(fields[column_of[7]], row, "qz")};
    if (std::abs(q.norm() - 1.0) > 1e-3) {
      throw ValidationError("pose log row " + std::to_string(row) + " (" + rec.id + "): quaternion norm " +
                            std::to_string(q.norm()) + " is not within 1e-3 of unit");
    }
    rec.pose.q_bw = q.normalized();

    if (!std::filesystem::is_regular_file(rec.image_path)) {
      throw IngestionError("pose log row " + std::to_string(row) + ": image '" + rec.image_path.string() +
                           "' does not exist");
    }
    if (viewport) {
      const auto [w, h] = read_png_size(rec.image_path);
      if (w != viewport->w || h != viewport->h) {
        throw IngestionError("pose log row " + std::to_string(row) + ": image '" + rec.id + "' is " +
                             std::to_string(w) + "x" + std::to_string(h) + ", expected " +
                             std::to_string(viewport->w) + "x" + std::to_string(viewport->h));
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<BackgroundRecord> load_backgrounds(const std::filesystem::path& pose_log,
                                               const std::filesystem::path& image_dir,
                                               const std::optional<Viewport>& viewport) {
  std::ifstream in(pose_log);
  if (!in) throw IngestionError("cannot open pose log " + pose_log.string());
  return load_backgrounds(in, image_dir, viewport);
}

void prepare_backgrounds(std::vector<BackgroundRecord>& backgrounds, std::size_t cache_bytes) {
  std::size_t used = 0;
  for (auto& bg : backgrounds) {
    auto img = bg.load();
    if (!bg.blur_score_cache) bg.blur_score_cache = blur_score(*img);
    if (!bg.orientation_cache) bg.orientation_cache = smear_orientation(*img);
    const std::size_t size = img->data().size();
    if (!bg.image && used + size <= cache_bytes) {
      bg.image = std::move(img);
      used += size;
    }
  }
}

AnnotatedSample generate_sample(std::span<const BackgroundRecord> backgrounds, const GeneratorConfig& cfg,
                                std::uint64_t seed) {
  if (backgrounds.empty()) throw ValidationError("no backgrounds to generate from");
  if (cfg.scene.available_specs.empty()) throw ValidationError("no gate specs to generate from");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, backgrounds.size() - 1);
  const BackgroundRecord& bg = backgrounds[pick(rng)];
  const CameraModel cam = cfg.camera_at(bg.pose);

  const std::vector<GateInstance> gates = sample_gate_poses(cfg.scene, rng);
  const FrameBuffers fb = render_scene(cam, gates);
  const auto background = bg.load();

  CompositeOptions opts;
  opts.noise_sigma = cfg.noise_sigma;
  opts.background_score = bg.blur_score_cache;
  opts.background_orientation = bg.orientation_cache;

  AnnotatedSample sample;
  sample.seed = seed;
  sample.image = composite(*background, fb, cfg.blur, opts, rng);
  sample.gates = annotate_scene(cam, gates);
  for (const auto& a : sample.gates) sample.gate_specs.push_back(gates[a.gate_index].spec_index);
  sample.background_id = bg.id;
  sample.camera = bg.pose;
  return sample;
}

std::string image_file_name(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu.png", static_cast<unsigned long long>(index));
  return buf;
}

ImageRecord make_record(const AnnotatedSample& sample, const std::string& file_name) {
  ImageRecord rec;
  rec.id = sample.index;
  rec.file_name = file_name;
  rec.width = sample.image.width();
  rec.height = sample.image.height();
  rec.seed = sample.seed;
  rec.background = sample.background_id;
  rec.camera_position = {sample.camera.r_w.x(), sample.camera.r_w.y(), sample.camera.r_w.z()};
  rec.camera_orientation = {sample.camera.q_bw.w, sample.camera.q_bw.x, sample.camera.q_bw.y, sample.camera.q_bw.z};
  for (std::size_t i = 0; i < sample.gates.size(); ++i) {
    const GateAnnotation& g = sample.gates[i];
    AnnotationRecord a;
    a.category = g.category;
    a.bbox = {g.bbox.x_min, g.bbox.y_min, g.bbox.width(), g.bbox.height()};
    a.distance = g.distance;
    a.visible_corners = g.visible_corners;
    a.gate_spec = i < sample.gate_specs.size() ? sample.gate_specs[i] : 0;
    rec.annotations.push_back(a);
  }
  return rec;
}

nlohmann::json manifest_to_json(const DatasetManifest& manifest) {
  using nlohmann::json;
  json doc;
  doc["info"] = {{"sample_count", manifest.sample_count}};
  json cats = json::array();
  for (std::size_t i = 0; i < manifest.categories.size(); ++i) {
    cats.push_back({{"id", i + 1}, {"name", manifest.categories[i]}});
  }
  doc["categories"] = cats;
  doc["config"] = manifest.config;
  json images = json::array();
  json annotations = json::array();
  std::uint64_t ann_id = 0;
  for (const auto& img : manifest.images) {
    images.push_back({{"id", img.id},
                      {"file_name", img.file_name},
                      {"width", img.width},
                      {"height", img.height},
                      {"seed", img.seed},
                      {"background", img.background},
                      {"camera", {{"position", img.camera_position}, {"orientation", img.camera_orientation}}}});
    for (const auto& a : img.annotations) {
      annotations.push_back({{"id", ann_id++},
                             {"image_id", img.id},
                             {"category_id", static_cast<int>(a.category)},
                             {"bbox", a.bbox},
                             {"distance", a.distance},
                             {"visible_corners", a.visible_corners},
                             {"gate_spec", a.gate_spec}});
    }
  }
  doc["images"] = images;
  doc["annotations"] = annotations;
  return doc;
}

DatasetManifest manifest_from_json(const nlohmann::json& doc) {
  DatasetManifest m;
  try {
    m.sample_count = doc.at("info").at("sample_count").get<std::size_t>();
    m.categories.clear();
    for (const auto& c : doc.at("categories")) m.categories.push_back(c.at("name").get<std::string>());
    m.config = doc.value("config", nlohmann::json::object());
    std::map<std::uint64_t, std::size_t> by_id;
    for (const auto& j : doc.at("images")) {
      ImageRecord rec;
      rec.id = j.at("id").get<std::uint64_t>();
      rec.file_name = j.at("file_name").get<std::string>();
      rec.width = j.at("width").get<int>();
      rec.height = j.at("height").get<int>();
      rec.seed = j.value("seed", std::uint64_t{0});
      rec.background = j.value("background", std::string());
      if (j.contains("camera")) {
        rec.camera_position = j.at("camera").at("position").get<std::array<double, 3>>();
        rec.camera_orientation = j.at("camera").at("orientation").get<std::array<double, 4>>();
      }
      by_id[rec.id] = m.images.size();
      m.images.push_back(std::move(rec));
    }
    for (const auto& j : doc.at("annotations")) {
      const auto image_id = j.at("image_id").get<std::uint64_t>();
      const auto it = by_id.find(image_id);
      if (it == by_id.end()) throw ValidationError("annotation refers to unknown image " + std::to_string(image_id));
      AnnotationRecord a;
      const int cat = j.at("category_id").get<int>();
      if (cat < 1 || cat > 3) throw ValidationError("unknown category id " + std::to_string(cat));
      a.category = static_cast<Category>(cat);
      a.bbox = j.at("bbox").get<std::array<double, 4>>();
      a.distance = j.value("distance", 0.0);
      a.visible_corners = j.value("visible_corners", 0);
      a.gate_spec = j.value("gate_spec", std::size_t{0});
      m.images[it->second].annotations.push_back(a);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << manifest_to_json(manifest).dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

DatasetManifest write_dataset(std::span<const AnnotatedSample> samples, const std::filesystem::path& out_dir,
                              const nlohmann::json& config_snapshot, int png_compression) {
  ensure_dir(out_dir);
  DatasetManifest manifest;
  manifest.config = config_snapshot;
  for (const auto& s : samples) {
    const std::string name = image_file_name(s.index);
    write_png(out_dir / name, s.image, png_compression);
    manifest.images.push_back(make_record(s, name));
  }
  manifest.sample_count = manifest.images.size();
  write_manifest(manifest, out_dir / kManifestName);
  return manifest;
}

BatchResult generate_dataset(std::span<const BackgroundRecord> backgrounds, const GeneratorConfig& cfg,
                             const BatchOptions& options, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  const std::size_t n = options.count;
  std::vector<std::optional<ImageRecord>> slots(n);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr failure;
  std::mutex log_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n) return;
      const std::uint64_t index = options.first_index + k;
      try {
        AnnotatedSample sample = generate_sample(backgrounds, cfg, derive_seed(options.master_seed, index));
        sample.index = index;
        const std::string name = image_file_name(index);
        write_png(out_dir / name, sample.image, cfg.png_compression);
        slots[k] = make_record(sample, name);
      } catch (const PlacementError& e) {
        std::lock_guard lock(log_mutex);
        std::cerr << "sample " << index << " skipped: " << e.what() << '\n';
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };

  const unsigned threads = std::max(1u, options.threads);
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);

  BatchResult result;
  result.manifest.config = cfg.snapshot;
  for (std::size_t k = 0; k < n; ++k) {
    if (slots[k]) {
      result.manifest.images.push_back(std::move(*slots[k]));
    } else {
      result.skipped.push_back(options.first_index + k);
    }
  }
  result.manifest.sample_count = result.manifest.images.size();
  write_manifest(result.manifest, out_dir / kManifestName);
  return result;
}

Image crop_to_bbox(const Image& img, const PixelRect& bbox) {
  // Pixel x is kept when x_min <= x + 0.5 < x_max.
  const int x0 = std::max(0, static_cast<int>(std::ceil(bbox.x_min - 0.5)));
  const int x1 = std::min(img.width(), static_cast<int>(std::ceil(bbox.x_max - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(bbox.y_min - 0.5)));
  const int y1 = std::min(img.height(), static_cast<int>(std::ceil(bbox.y_max - 0.5)));
  if (x0 >= x1 || y0 >= y1) throw ValidationError("crop box does not intersect the image");
  Image out(img.width(), img.height(), img.channels(), 0);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(x, y, c);
    }
  }
  return out;
}

}  // namespace gatesynth
