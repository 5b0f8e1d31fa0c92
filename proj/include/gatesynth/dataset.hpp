#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gatesynth/config.hpp"
#include "gatesynth/image.hpp"
#include "gatesynth/scene.hpp"

namespace gatesynth {

struct BackgroundRecord {
  std::string id;  // file name as written in the pose log
  std::filesystem::path image_path;
  CameraPose pose;
  std::optional<double> blur_score_cache;
  std::optional<double> orientation_cache;
  // Decoded pixels, shared read-only between workers once prepared.
  std::shared_ptr<const Image> image;

  // Cached image, or a fresh decode when none is held.
  std::shared_ptr<const Image> load() const;
};

// Pose log: CSV with header `filename,x,y,z,qw,qx,qy,qz`. Quaternions within
// 1e-3 of unit norm are renormalized, others rejected. When `viewport` is
// given every image must match its size.
std::vector<BackgroundRecord> load_backgrounds(std::istream& pose_log, const std::filesystem::path& image_dir,
                                               const std::optional<Viewport>& viewport = std::nullopt);
std::vector<BackgroundRecord> load_backgrounds(const std::filesystem::path& pose_log,
                                               const std::filesystem::path& image_dir,
                                               const std::optional<Viewport>& viewport = std::nullopt);

// Decodes every background and fills the blur caches. Images stay resident
// while their total size is under `cache_bytes`.
void prepare_backgrounds(std::vector<BackgroundRecord>& backgrounds, std::size_t cache_bytes = std::size_t{1} << 30);

struct AnnotatedSample {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  Image image;
  std::vector<GateAnnotation> gates;
  std::vector<std::size_t> gate_specs;  // spec index per annotation
  std::string background_id;
  CameraPose camera;
};

// One pass of the generation procedure, driven entirely by `seed`: pick a
// background, place gates, render, composite, annotate.
AnnotatedSample generate_sample(std::span<const BackgroundRecord> backgrounds, const GeneratorConfig& cfg,
                                std::uint64_t seed);

struct AnnotationRecord {
  Category category = Category::kFront;
  std::array<double, 4> bbox{};  // x_min, y_min, width, height
  double distance = 0.0;
  int visible_corners = 0;
  std::size_t gate_spec = 0;
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct ImageRecord {
  std::uint64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
  std::string background;
  std::array<double, 3> camera_position{};
  std::array<double, 4> camera_orientation{};  // w, x, y, z
  std::vector<AnnotationRecord> annotations;
  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DatasetManifest {
  std::size_t sample_count = 0;
  std::vector<std::string> categories{"target", "front", "back"};
  nlohmann::json config;
  std::vector<ImageRecord> images;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

inline constexpr const char* kManifestName = "manifest.json";

ImageRecord make_record(const AnnotatedSample& sample, const std::string& file_name);
std::string image_file_name(std::uint64_t index);

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& doc);
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Writes each sample as a zero-padded PNG plus manifest.json into out_dir.
DatasetManifest write_dataset(std::span<const AnnotatedSample> samples, const std::filesystem::path& out_dir,
                              const nlohmann::json& config_snapshot = nlohmann::json::object(),
                              int png_compression = 1);

struct BatchOptions {
  std::uint64_t first_index = 0;
  std::uint64_t count = 0;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
};

struct BatchResult {
  DatasetManifest manifest;
  std::vector<std::uint64_t> skipped;  // indices that failed placement
};

// Generates indices [first_index, first_index + count) in parallel and writes
// them to out_dir. Samples whose gate placement fails are skipped and logged;
// the manifest lists the rest in index order.
BatchResult generate_dataset(std::span<const BackgroundRecord> backgrounds, const GeneratorConfig& cfg,
                             const BatchOptions& options, const std::filesystem::path& out_dir);

// Black out everything outside `bbox`; pixels whose centres fall inside it are kept.
Image crop_to_bbox(const Image& img, const PixelRect& bbox);

}  // namespace gatesynth
