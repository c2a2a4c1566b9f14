#include "gpd/eval.hpp"

#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace gpd {

ConfusionCounts confusion(const Mask& pred, const Mask& gt, const Mask* ignore) {
  require_same_shape(pred, gt, "confusion");
  if (ignore) require_same_shape(pred, *ignore, "confusion (ignore mask)");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (ignore && ignore->data()[i]) continue;
    const bool p = pred.data()[i] != 0;
    const bool g = gt.data()[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Metrics metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw std::invalid_argument("metrics of empty confusion counts");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

Report compare_report(const std::vector<SceneResult>& scenes) {
  if (scenes.empty()) throw std::invalid_argument("compare_report: no scenes");
  const auto& first = scenes.front().predictions;
  if (first.empty()) throw std::invalid_argument("compare_report: empty method list");

  Report report;
  std::vector<ConfusionCounts> pooled(first.size());
  for (const SceneResult& s : scenes) {
    if (s.predictions.size() != first.size()) throw std::invalid_argument("compare_report: method lists differ");
    for (std::size_t m = 0; m < s.predictions.size(); ++m) {
      if (s.predictions[m].method != first[m].method) {
        throw std::invalid_argument("compare_report: method lists differ at scene " + s.scene);
      }
      const ConfusionCounts c = confusion(s.predictions[m].pred, s.gt);
      pooled[m] += c;
      report.rows.push_back(ReportRow{s.scene, s.predictions[m].method, c, metrics(c)});
    }
  }
  for (std::size_t m = 0; m < first.size(); ++m) {
    report.rows.push_back(ReportRow{"ALL", first[m].method, pooled[m], metrics(pooled[m])});
  }
  return report;
}

std::optional<ReportRow> Report::aggregate(const std::string& method) const {
  for (const auto& r : rows)
    if (r.scene == "ALL" && r.method == method) return r;
  return std::nullopt;
}

std::string Report::to_text() const {
  std::size_t scene_w = 5, method_w = 6;
  for (const auto& r : rows) {
    scene_w = std::max(scene_w, r.scene.size());
    method_w = std::max(method_w, r.method.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(scene_w)) << "scene" << "  " << std::setw(static_cast<int>(method_w))
      << "method" << std::right << std::setw(10) << "accuracy" << std::setw(11) << "precision" << std::setw(8)
      << "recall" << std::setw(8) << "f1" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(scene_w)) << r.scene << "  " << std::setw(static_cast<int>(method_w))
        << r.method << std::right << std::setw(10) << r.values.accuracy << std::setw(11) << r.values.precision
        << std::setw(8) << r.values.recall << std::setw(8) << r.values.f1 << '\n';
  }
  return out.str();
}

std::string Report::to_csv() const {
  std::ostringstream out;
  out << "scene,method,tp,fp,tn,fn,accuracy,precision,recall,f1\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.scene << ',' << r.method << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.tn << ','
        << r.counts.fn << ',' << r.values.accuracy << ',' << r.values.precision << ',' << r.values.recall << ','
        << r.values.f1 << '\n';
  }
  return out.str();
}

}  // namespace gpd
