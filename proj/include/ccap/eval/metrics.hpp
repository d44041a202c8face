#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ccap/core/error.hpp"

namespace ccap::eval {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Predicts positive when score >= threshold.
inline ConfusionMatrix confusion(std::span<const int> y, std::span<const double> scores, double threshold = 0.5) {
  if (y.size() != scores.size()) throw DataError("labels and scores differ in length");
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("threshold must be in (0, 1)");
  ConfusionMatrix c;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (y[i]) {
      ++(predicted ? c.tp : c.fn);
    } else {
      ++(predicted ? c.fp : c.tn);
    }
  }
  return c;
}

// A 0/0 metric is reported as 0 with its `_defined` flag cleared.
struct ClassificationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
  bool f1_defined = true;
  bool kappa_defined = true;

  bool degenerate() const { return !(precision_defined && recall_defined && f1_defined && kappa_defined); }
};

inline ClassificationMetrics classification_metrics(const ConfusionMatrix& c) {
  ClassificationMetrics m;
  const double tp = double(c.tp), fp = double(c.fp), tn = double(c.tn), fn = double(c.fn);
  const double n = tp + fp + tn + fn;
  if (c.tp + c.fp > 0) {
    m.precision = tp / (tp + fp);
  } else {
    m.precision_defined = false;
  }
  if (c.tp + c.fn > 0) {
    m.recall = tp / (tp + fn);
  } else {
    m.recall_defined = false;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1_defined = false;
  }
  if (n > 0.0) {
    const double po = (tp + tn) / n;
    const double pe = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n);
    if (pe < 1.0) {
      m.kappa = (po - pe) / (1.0 - pe);
    } else {
      m.kappa_defined = false;
    }
  } else {
    m.kappa_defined = false;
  }
  return m;
}

namespace detail {

inline void require_both_classes(std::span<const int> y, std::span<const double> scores) {
  if (y.size() != scores.size()) throw DataError("labels and scores differ in length");
  const auto pos = std::count(y.begin(), y.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) {
    throw DataError("AUC is undefined when only one class is present");
  }
}

// Row indices ordered by descending score.
inline std::vector<std::size_t> by_descending_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace detail

// Tie-adjusted Mann-Whitney statistic: P(s+ > s-) + 1/2 P(s+ = s-). Equal to
// the trapezoidal area under the ROC curve over all distinct thresholds.
inline double auc(std::span<const int> y, std::span<const double> scores) {
  detail::require_both_classes(y, scores);
  const auto idx = detail::by_descending_score(scores);
  double pos_total = 0.0, neg_total = 0.0;
  for (int v : y) (v ? pos_total : neg_total) += 1.0;

  // Walk groups of tied scores from the top; each positive beats every
  // negative below its group and ties half of those inside it.
  double wins = 0.0;
  double neg_seen = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    double pos_group = 0.0, neg_group = 0.0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (y[idx[j]] ? pos_group : neg_group) += 1.0;
      ++j;
    }
    const double neg_below = neg_total - neg_seen - neg_group;
    wins += pos_group * neg_below + 0.5 * pos_group * neg_group;
    neg_seen += neg_group;
    i = j;
  }
  return wins / (pos_total * neg_total);
}

enum class CurveKind { roc, pr };

struct CurvePoint {
  double x = 0.0;  // FPR (roc) or recall (pr)
  double y = 0.0;  // TPR (roc) or precision (pr)
  double threshold = 0.0;
};

// One point per distinct score, thresholds descending. ROC curves also start
// at (0, 0) with an infinite threshold; their last point is (1, 1).
inline std::vector<CurvePoint> curve_points(std::span<const int> y, std::span<const double> scores, CurveKind kind) {
  detail::require_both_classes(y, scores);
  const auto idx = detail::by_descending_score(scores);
  double pos_total = 0.0, neg_total = 0.0;
  for (int v : y) (v ? pos_total : neg_total) += 1.0;

  std::vector<CurvePoint> out;
  if (kind == CurveKind::roc) out.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double thr = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == thr) {
      (y[idx[i]] ? tp : fp) += 1.0;
      ++i;
    }
    if (kind == CurveKind::roc) {
      out.push_back({fp / neg_total, tp / pos_total, thr});
    } else {
      out.push_back({tp / pos_total, tp / (tp + fp), thr});
    }
  }
  return out;
}

inline double trapezoid_area(std::span<const CurvePoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].x - points[i - 1].x) * (points[i].y + points[i - 1].y) * 0.5;
  }
  return area;
}

}  // namespace ccap::eval
