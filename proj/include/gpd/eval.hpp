#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpd/image.hpp"

namespace gpd {

/// Positive class = ground / road.
struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Pixels where `ignore` is nonzero are not counted.
ConfusionCounts confusion(const Mask& pred, const Mask& gt, const Mask* ignore = nullptr);

/// Precision/recall are 0 when their denominator is 0; f1 is 0 when p + r = 0.
/// Throws on empty counts.
Metrics metrics(const ConfusionCounts& c);

struct MethodPrediction {
  std::string method;
  Mask pred;
};

struct SceneResult {
  std::string scene;
  Mask gt;
  std::vector<MethodPrediction> predictions;
};

struct ReportRow {
  std::string scene;  // "ALL" for the aggregate rows
  std::string method;
  ConfusionCounts counts;
  Metrics values;
};

struct Report {
  std::vector<ReportRow> rows;

  /// Aggregate row of a method (pixel counts pooled over scenes).
  std::optional<ReportRow> aggregate(const std::string& method) const;
  std::string to_text() const;
  /// Header: scene,method,tp,fp,tn,fn,accuracy,precision,recall,f1
  std::string to_csv() const;
};

/// Per-scene rows in input order, then one pooled "ALL" row per method. Every scene
/// must list the same methods in the same order.
Report compare_report(const std::vector<SceneResult>& scenes);

}  // namespace gpd
