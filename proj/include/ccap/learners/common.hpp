#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ccap/core/error.hpp"
#include "ccap/core/matrix.hpp"
#include "ccap/data/labels.hpp"

namespace ccap::learners {

using data::Labels;

// Never exponentiates a large positive argument.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Binary cross-entropy of a logit.
inline double logit_loss(double z, int y) { return softplus(z) - (y ? z : 0.0); }

struct ClassCounts {
  double negatives = 0.0;
  double positives = 0.0;
  double total() const { return negatives + positives; }
};

// Base-2 entropy of a two-class distribution; 0 log 0 = 0.
inline double entropy(ClassCounts c) {
  const double n = c.total();
  if (!(n > 0.0)) throw UsageError("entropy of an empty distribution");
  double h = 0.0;
  for (double k : {c.negatives, c.positives}) {
    if (k > 0.0) {
      const double p = k / n;
      h -= p * std::log2(p);
    }
  }
  return h;
}

inline double info_gain(ClassCounts parent, ClassCounts left, ClassCounts right) {
  const double tol = 1e-9 * std::max(1.0, parent.total());
  if (std::abs(left.negatives + right.negatives - parent.negatives) > tol ||
      std::abs(left.positives + right.positives - parent.positives) > tol) {
    throw UsageError("info_gain: child counts do not add up to the parent");
  }
  const double n = parent.total();
  double children = 0.0;
  if (left.total() > 0.0) children += left.total() / n * entropy(left);
  if (right.total() > 0.0) children += right.total() / n * entropy(right);
  return entropy(parent) - children;
}

inline void check_training_input(const Matrix& x, const Labels& y, bool need_both_classes) {
  if (x.rows() != y.size()) throw DataError("feature and label row counts differ");
  if (x.rows() == 0) throw DataError("cannot fit on zero rows");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("feature matrix contains non-finite values");
  }
  if (need_both_classes && !y.has_both_classes()) throw TrainingError("training labels contain a single class");
}

}  // namespace ccap::learners
