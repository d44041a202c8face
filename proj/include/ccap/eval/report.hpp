#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "ccap/eval/metrics.hpp"
#include "json.hpp"

namespace ccap::eval {

// One row of a model-comparison report.
struct ModelReport {
  std::string model;
  double threshold = 0.5;
  ConfusionMatrix confusion;
  ClassificationMetrics metrics;
  double auc = 0.0;
  std::vector<CurvePoint> roc;
  std::vector<CurvePoint> pr;
};

inline ModelReport evaluate_model(const std::string& name, std::span<const int> y, std::span<const double> scores,
                                  double threshold = 0.5) {
  ModelReport r;
  r.model = name;
  r.threshold = threshold;
  r.confusion = confusion(y, scores, threshold);
  r.metrics = classification_metrics(r.confusion);
  r.auc = auc(y, scores);
  r.roc = curve_points(y, scores, CurveKind::roc);
  r.pr = curve_points(y, scores, CurveKind::pr);
  return r;
}

struct EvalReport {
  std::vector<ModelReport> rows;
  nlohmann::ordered_json context;  // free-form run facts (row counts, dropped columns, ...)

  const ModelReport* find(std::string_view model) const {
    for (const auto& r : rows) {
      if (r.model == model) return &r;
    }
    return nullptr;
  }
};

inline nlohmann::ordered_json to_json(const ModelReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["precision"] = r.metrics.precision;
  j["recall"] = r.metrics.recall;
  j["f1"] = r.metrics.f1;
  j["auc"] = r.auc;
  j["kappa"] = r.metrics.kappa;
  j["threshold"] = r.threshold;
  j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}};
  nlohmann::ordered_json undefined = nlohmann::ordered_json::array();
  if (!r.metrics.precision_defined) undefined.push_back("precision");
  if (!r.metrics.recall_defined) undefined.push_back("recall");
  if (!r.metrics.f1_defined) undefined.push_back("f1");
  if (!r.metrics.kappa_defined) undefined.push_back("kappa");
  j["undefined_metrics"] = undefined;
  return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["context"] = report.context.is_null() ? nlohmann::ordered_json::object() : report.context;
  j["models"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) j["models"].push_back(to_json(r));
  return j;
}

// Aligned text table: Model | Precision | Recall | F1-Score | AUC | Kappa.
inline std::string format_table(const EvalReport& report) {
  std::size_t width = 5;
  for (const auto& r : report.rows) width = std::max(width, r.model.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %9s  %9s\n", int(width), "Model", "Precision", "Recall",
                "F1-Score", "AUC", "Kappa");
  out += buf;
  out += std::string(width + 5 * 11, '-') + "\n";
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.4f  %9.4f  %9.4f  %9.4f  %9.4f%s\n", int(width), r.model.c_str(),
                  r.metrics.precision, r.metrics.recall, r.metrics.f1, r.auc, r.metrics.kappa,
                  r.metrics.degenerate() ? "  *" : "");
    out += buf;
  }
  return out;
}

// Two-column plot-ready text: header line, then "x,y" per point.
inline std::string format_curve(std::span<const CurvePoint> points, CurveKind kind) {
  std::string out = kind == CurveKind::roc ? "fpr,tpr\n" : "recall,precision\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", p.x, p.y);
    out += buf;
  }
  return out;
}

}  // namespace ccap::eval
