#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "refexp/dataset.hpp"
#include "refexp/geometry.hpp"

namespace refexp {

struct PredictionRecord {
  std::string sample_id;
  BBox bbox;
  std::optional<double> score;
};

/// Aggregates over M samples: precision at each IoU threshold (fraction of
/// samples with IoU >= tau), mean of per-sample I/U, and sum(I) / sum(U).
struct MetricSummary {
  std::map<double, double> precision_at;
  double mean_iou = 0.0;
  double cum_iou = 0.0;
  double sum_intersection = 0.0;
  double sum_union = 0.0;
  std::size_t count = 0;
  std::size_t missing = 0;

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

struct EvalReport {
  MetricSummary overall;
  std::map<std::string, MetricSummary> per_category;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline const std::vector<double> kDefaultThresholds = {0.5, 0.6, 0.7, 0.8, 0.9};

/// Scores predictions against ground truth. A sample without a prediction
/// counts with I = 0 and U = its ground-truth area. Per-sample terms are
/// summed in sample_id order, so the report does not depend on input order.
/// Throws InvalidInput on a duplicate or unknown prediction sample_id, or on
/// a threshold outside (0, 1].
EvalReport evaluate_predictions(const std::vector<PredictionRecord>& predictions,
                                const std::vector<GroundingSample>& truth,
                                const std::vector<double>& thresholds = kDefaultThresholds);

std::vector<PredictionRecord> load_predictions_jsonl(const std::filesystem::path& path);
void write_predictions_jsonl(const std::filesystem::path& path,
                             const std::vector<PredictionRecord>& predictions);

std::string eval_report_to_json(const EvalReport& report);

/// report.json plus per_category.csv (one row per category, then "all").
void write_eval_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace refexp
