#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gatesynth/scene.hpp"

namespace gatesynth {

double iou(const PixelRect& a, const PixelRect& b);

struct Detection {
  std::uint64_t image_id = 0;
  Category category = Category::kTarget;
  PixelRect bbox;
  double score = 0.0;
};

struct GroundTruth {
  std::uint64_t image_id = 0;
  Category category = Category::kTarget;
  PixelRect bbox;
};

struct ClassMetrics {
  double ap = 0.0;
  double ar = 0.0;
  std::size_t support = 0;     // ground-truth count
  std::size_t detections = 0;  // detection count
};

struct ThresholdMetrics {
  double iou_threshold = 0.0;
  std::map<Category, ClassMetrics> per_class;
  // Mean AP over categories with at least one ground truth; 0 when none has.
  double map = 0.0;
};

struct EvalReport {
  std::vector<ThresholdMetrics> thresholds;
};

// Per threshold and category: detections are sorted by descending score
// (stable), each is matched greedily to the unmatched ground truth in the
// same image with the highest IoU >= threshold. AP is the area under the
// all-points interpolated precision/recall curve; AR is the final recall.
// A category without ground truth scores AP = AR = 0 and is left out of mAP.
EvalReport evaluate_detections(std::span<const Detection> detections, std::span<const GroundTruth> ground_truth,
                               std::span<const double> iou_thresholds);

// Area under the precision envelope for a ranked list of match flags.
double average_precision(const std::vector<bool>& true_positive_ranked, std::size_t ground_truth_count);

struct DistanceReport {
  double mae = 0.0;
  std::vector<double> thresholds;
  std::vector<double> accuracy;  // fraction with |pred - truth| <= threshold
};

DistanceReport distance_report(std::span<const double> predicted, std::span<const double> truth,
                               std::span<const double> thresholds);

// Text tables laid out like the detection (AP/AR per IoU), per-class AP and
// distance (MAE/accuracy per error threshold) tables.
std::string format_detection_table(const EvalReport& report, Category category);
std::string format_class_table(const EvalReport& report);
std::string format_distance_table(const DistanceReport& report);

}  // namespace gatesynth
