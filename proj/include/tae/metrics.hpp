#pragma once

// One-pass evaluation metrics: success (IoU) curve and AUC, center-error
// precision at 20 px, and size-normalized precision summarized as the mean
// of its curve over [0, 0.5].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tae/bbox.hpp"

namespace tae {

inline constexpr std::size_t kSuccessBins = 21;        // IoU thresholds 0..1 step 0.05
inline constexpr std::size_t kPrecisionBins = 51;      // center error 0..50 px step 1
inline constexpr std::size_t kNormPrecisionBins = 51;  // normalized error 0..0.5 step 0.01
inline constexpr double kPrecisionAtPx = 20.0;

inline double success_threshold(std::size_t i) { return static_cast<double>(i) / 20.0; }
inline double precision_threshold(std::size_t i) { return static_cast<double>(i); }
inline double norm_precision_threshold(std::size_t i) { return static_cast<double>(i) / 100.0; }

inline double iou(const BBox& a, const BBox& b) {
  require_valid(a, "iou");
  require_valid(b, "iou");
  const double x1 = std::max(a.x, b.x);
  const double y1 = std::max(a.y, b.y);
  const double x2 = std::min(a.x + a.w, b.x + b.w);
  const double y2 = std::min(a.y + a.h, b.y + b.h);
  const double iw = x2 - x1, ih = y2 - y1;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

inline double center_error(const BBox& a, const BBox& b) {
  const auto [ax, ay] = box_center(a);
  const auto [bx, by] = box_center(b);
  return std::hypot(ax - bx, ay - by);
}

// Center error with each axis scaled by the ground-truth extents.
inline double norm_center_error(const BBox& pred, const BBox& gt) {
  require_valid(gt, "norm_center_error");
  const auto [px, py] = box_center(pred);
  const auto [gx, gy] = box_center(gt);
  return std::hypot((px - gx) / gt.w, (py - gy) / gt.h);
}

struct TrackRun {
  std::string sequence_id;
  std::vector<BBox> boxes;
  std::vector<double> frame_ms;
};

struct SequenceMetrics {
  std::string sequence_id;
  std::vector<double> success = std::vector<double>(kSuccessBins, 0.0);
  std::vector<double> precision = std::vector<double>(kPrecisionBins, 0.0);
  std::vector<double> norm_precision = std::vector<double>(kNormPrecisionBins, 0.0);
  double auc = 0.0;
  double p20 = 0.0;
  double normp = 0.0;
  std::size_t frames = 0;  // frames with a present ground-truth box
};

struct MetricReport {
  std::vector<SequenceMetrics> per_sequence;
  std::vector<double> success = std::vector<double>(kSuccessBins, 0.0);
  std::vector<double> precision = std::vector<double>(kPrecisionBins, 0.0);
  std::vector<double> norm_precision = std::vector<double>(kNormPrecisionBins, 0.0);
  double auc = 0.0;
  double p20 = 0.0;
  double normp = 0.0;
};

// Success uses strict IoU > t; precision curves use error <= t. Frames with
// an absent ground-truth box are excluded. Aggregation is the unweighted
// mean over sequences.
inline MetricReport compute_metrics(const std::vector<TrackRun>& runs,
                                    const std::vector<std::pair<std::string, std::vector<std::optional<BBox>>>>& gt) {
  if (runs.empty()) throw std::invalid_argument("compute_metrics: empty run set");
  if (runs.size() != gt.size()) {
    throw std::invalid_argument("compute_metrics: run/ground-truth sequence count mismatch");
  }
  MetricReport report;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const auto& run = runs[s];
    const auto& [gt_id, gt_boxes] = gt[s];
    if (run.sequence_id != gt_id) {
      throw std::invalid_argument("compute_metrics: sequence order mismatch '" + run.sequence_id +
                                  "' vs '" + gt_id + "'");
    }
    if (run.boxes.size() != gt_boxes.size()) {
      throw std::invalid_argument("compute_metrics: sequence '" + run.sequence_id +
                                  "' has " + std::to_string(run.boxes.size()) + " predictions for " +
                                  std::to_string(gt_boxes.size()) + " frames");
    }
    SequenceMetrics m;
    m.sequence_id = run.sequence_id;
    for (std::size_t f = 0; f < run.boxes.size(); ++f) {
      if (!gt_boxes[f]) continue;
      ++m.frames;
      const double ov = iou(run.boxes[f], *gt_boxes[f]);
      const double err = center_error(run.boxes[f], *gt_boxes[f]);
      const double nerr = norm_center_error(run.boxes[f], *gt_boxes[f]);
      for (std::size_t i = 0; i < kSuccessBins; ++i)
        if (ov > success_threshold(i)) m.success[i] += 1.0;
      for (std::size_t i = 0; i < kPrecisionBins; ++i)
        if (err <= precision_threshold(i)) m.precision[i] += 1.0;
      for (std::size_t i = 0; i < kNormPrecisionBins; ++i)
        if (nerr <= norm_precision_threshold(i)) m.norm_precision[i] += 1.0;
    }
    if (m.frames == 0) {
      throw std::invalid_argument("compute_metrics: sequence '" + run.sequence_id +
                                  "' has no annotated frames");
    }
    const double inv = 1.0 / static_cast<double>(m.frames);
    for (auto& v : m.success) v *= inv;
    for (auto& v : m.precision) v *= inv;
    for (auto& v : m.norm_precision) v *= inv;
    for (double v : m.success) m.auc += v;
    m.auc /= static_cast<double>(kSuccessBins);
    m.p20 = m.precision[static_cast<std::size_t>(kPrecisionAtPx)];
    for (double v : m.norm_precision) m.normp += v;
    m.normp /= static_cast<double>(kNormPrecisionBins);
    report.per_sequence.push_back(std::move(m));
  }

  const double inv_s = 1.0 / static_cast<double>(report.per_sequence.size());
  for (const auto& m : report.per_sequence) {
    for (std::size_t i = 0; i < kSuccessBins; ++i) report.success[i] += m.success[i] * inv_s;
    for (std::size_t i = 0; i < kPrecisionBins; ++i) report.precision[i] += m.precision[i] * inv_s;
    for (std::size_t i = 0; i < kNormPrecisionBins; ++i)
      report.norm_precision[i] += m.norm_precision[i] * inv_s;
  }
  for (double v : report.success) report.auc += v;
  report.auc /= static_cast<double>(kSuccessBins);
  report.p20 = report.precision[static_cast<std::size_t>(kPrecisionAtPx)];
  for (double v : report.norm_precision) report.normp += v;
  report.normp /= static_cast<double>(kNormPrecisionBins);
  return report;
}

inline nlohmann::ordered_json metrics_to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["conventions"] = {{"success", "fraction of frames with IoU > t, t in {0, 0.05, ..., 1}"},
                      {"auc", "mean of the success curve"},
                      {"precision", "fraction of frames with center error <= t px, t in 0..50"},
                      {"p", "precision at 20 px"},
                      {"norm_precision", "center error scaled by gt extents, t in 0..0.5"},
                      {"normp", "mean of the normalized precision curve"},
                      {"aggregation", "unweighted mean over sequences"}};
  j["scalars"] = {{"s_auc", r.auc}, {"p", r.p20}, {"normp", r.normp}};
  auto curve = [](auto thr_fn, const std::vector<double>& vals) {
    nlohmann::ordered_json c = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < vals.size(); ++i)
      c.push_back({{"threshold", thr_fn(i)}, {"value", vals[i]}});
    return c;
  };
  j["curves"] = {{"success", curve(success_threshold, r.success)},
                 {"precision", curve(precision_threshold, r.precision)},
                 {"norm_precision", curve(norm_precision_threshold, r.norm_precision)}};
  j["per_sequence"] = nlohmann::ordered_json::array();
  for (const auto& m : r.per_sequence) {
    j["per_sequence"].push_back({{"id", m.sequence_id},
                                 {"frames", m.frames},
                                 {"s_auc", m.auc},
                                 {"p", m.p20},
                                 {"normp", m.normp}});
  }
  return j;
}

}  // namespace tae
