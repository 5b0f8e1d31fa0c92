#include "gatesynth/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "gatesynth/error.hpp"

namespace gatesynth {

double iou(const PixelRect& a, const PixelRect& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (area_a + area_b - inter);
}

double average_precision(const std::vector<bool>& true_positive_ranked, std::size_t ground_truth_count) {
  if (ground_truth_count == 0 || true_positive_ranked.empty()) return 0.0;
  const std::size_t n = true_positive_ranked.size();
  std::vector<double> precision(n);
  std::vector<double> recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (true_positive_ranked[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(ground_truth_count);
  }
  for (std::size_t i = n - 1; i > 0; --i) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

EvalReport evaluate_detections(std::span<const Detection> detections, std::span<const GroundTruth> ground_truth,
                               std::span<const double> iou_thresholds) {
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw ValidationError("IoU thresholds must lie in (0, 1]");
  }
  static constexpr std::array<Category, 3> kCategories{Category::kTarget, Category::kFront, Category::kBack};

  EvalReport report;
  for (double threshold : iou_thresholds) {
    ThresholdMetrics tm;
    tm.iou_threshold = threshold;
    double ap_sum = 0.0;
    std::size_t ap_count = 0;
    for (Category cat : kCategories) {
      std::vector<std::size_t> gts;
      for (std::size_t i = 0; i < ground_truth.size(); ++i) {
        if (ground_truth[i].category == cat) gts.push_back(i);
      }
      std::vector<std::size_t> dets;
      for (std::size_t i = 0; i < detections.size(); ++i) {
        if (detections[i].category == cat) dets.push_back(i);
      }
      std::stable_sort(dets.begin(), dets.end(),
                       [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });

      std::vector<bool> matched(gts.size(), false);
      std::vector<bool> tp_flags;
      tp_flags.reserve(dets.size());
      std::size_t tp = 0;
      for (std::size_t d : dets) {
        const Detection& det = detections[d];
        double best = -1.0;
        std::size_t best_k = gts.size();
        for (std::size_t k = 0; k < gts.size(); ++k) {
          const GroundTruth& gt = ground_truth[gts[k]];
          if (matched[k] || gt.image_id != det.image_id) continue;
          const double o = iou(det.bbox, gt.bbox);
          if (o >= threshold && o > best) {
            best = o;
            best_k = k;
          }
        }
        const bool hit = best_k < gts.size();
        if (hit) {
          matched[best_k] = true;
          ++tp;
        }
        tp_flags.push_back(hit);
      }

      ClassMetrics cm;
      cm.support = gts.size();
      cm.detections = dets.size();
      if (!gts.empty()) {
        cm.ap = average_precision(tp_flags, gts.size());
        cm.ar = static_cast<double>(tp) / static_cast<double>(gts.size());
        ap_sum += cm.ap;
        ++ap_count;
      }
      tm.per_class[cat] = cm;
    }
    tm.map = ap_count > 0 ? ap_sum / static_cast<double>(ap_count) : 0.0;
    report.thresholds.push_back(std::move(tm));
  }
  return report;
}

DistanceReport distance_report(std::span<const double> predicted, std::span<const double> truth,
                               std::span<const double> thresholds) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("distance report needs equal-length inputs (" + std::to_string(predicted.size()) + " vs " +
                          std::to_string(truth.size()) + ")");
  }
  if (predicted.empty()) throw ValidationError("distance report needs at least one pair");
  DistanceReport r;
  r.thresholds.assign(thresholds.begin(), thresholds.end());
  std::vector<double> err(predicted.size());
  for (std::size_t i = 0; i < err.size(); ++i) err[i] = std::abs(predicted[i] - truth[i]);
  r.mae = std::accumulate(err.begin(), err.end(), 0.0) / static_cast<double>(err.size());
  for (double t : thresholds) {
    const auto hits = std::count_if(err.begin(), err.end(), [&](double e) { return e <= t; });
    r.accuracy.push_back(static_cast<double>(hits) / static_cast<double>(err.size()));
  }
  return r;
}

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string format_detection_table(const EvalReport& report, Category category) {
  std::ostringstream out;
  out << "IoU threshold | AP    | AR\n";
  out << "--------------+-------+------\n";
  for (const auto& t : report.thresholds) {
    const auto it = t.per_class.find(category);
    const ClassMetrics cm = it == t.per_class.end() ? ClassMetrics{} : it->second;
    out << "         " << fmt2(t.iou_threshold) << " | " << fmt3(cm.ap) << " | " << fmt3(cm.ar) << '\n';
  }
  return out.str();
}

std::string format_class_table(const EvalReport& report) {
  std::ostringstream out;
  out << "Class         ";
  for (const auto& t : report.thresholds) out << "| AP_" << fmt2(t.iou_threshold) << ' ';
  out << '\n';
  out << "--------------";
  for (std::size_t i = 0; i < report.thresholds.size(); ++i) out << "+---------";
  out << '\n';
  static constexpr std::array<std::pair<Category, const char*>, 3> kRows{
      {{Category::kTarget, "Target gate  "}, {Category::kFront, "Forward gate "}, {Category::kBack, "Backward gate"}}};
  for (const auto& [cat, label] : kRows) {
    out << label << ' ';
    for (const auto& t : report.thresholds) out << "| " << fmt3(t.per_class.at(cat).ap) << "   ";
    out << '\n';
  }
  out << "--------------";
  for (std::size_t i = 0; i < report.thresholds.size(); ++i) out << "+---------";
  out << '\n';
  out << "mAP           ";
  for (const auto& t : report.thresholds) out << "| " << fmt3(t.map) << "   ";
  out << '\n';
  return out.str();
}

std::string format_distance_table(const DistanceReport& report) {
  std::ostringstream out;
  out << "Error threshold (m) | MAE   | Accuracy\n";
  out << "--------------------+-------+---------\n";
  for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
    out << "               " << fmt2(report.thresholds[i]) << " | " << fmt3(report.mae) << " | "
        << fmt3(report.accuracy[i]) << '\n';
  }
  return out.str();
}

}  // namespace gatesynth
