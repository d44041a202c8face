#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ccap/core/matrix.hpp"
#include "ccap/core/random.hpp"
#include "ccap/data/labels.hpp"

namespace ccap::resample {

struct SmoteConfig {
  std::size_t k_neighbors = 5;
  double target_ratio = 1.0;  // minority:majority after resampling
  std::uint64_t seed = 0;
};

// x + lambda * (neighbor - x)
inline std::vector<double> smote_sample(std::span<const double> x, std::span<const double> neighbor,
                                        double lambda) {
  if (x.size() != neighbor.size()) throw UsageError("smote_sample: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + lambda * (neighbor[i] - x[i]);
  return out;
}

// k nearest rows (Euclidean) among `candidates` for each candidate, excluding
// itself; distance ties go to the lower row index. Returned indices are rows
// of `x`.
inline std::vector<std::vector<std::size_t>> nearest_within(const Matrix& x,
                                                            std::span<const std::size_t> candidates,
                                                            std::size_t k) {
  std::vector<std::vector<std::size_t>> out(candidates.size());
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    dist.clear();
    for (std::size_t b = 0; b < candidates.size(); ++b) {
      if (a == b) continue;
      dist.emplace_back(squared_distance(x.row(candidates[a]), x.row(candidates[b])), candidates[b]);
    }
    const std::size_t kk = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    for (std::size_t i = 0; i < kk; ++i) out[a].push_back(dist[i].second);
  }
  return out;
}

// Where each synthetic row came from (row indices into the input).
struct SyntheticOrigin {
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double lambda = 0.0;
};

struct SmoteResult {
  Matrix features;     // input rows first, verbatim, then synthetic rows
  data::Labels labels;
  std::vector<SyntheticOrigin> origins;  // one per synthetic row
  int minority_label = 1;
};

// Number of synthetic rows needed to reach the target ratio.
inline std::size_t synthetic_count(std::size_t minority, std::size_t majority, double target_ratio) {
  const auto target = static_cast<std::size_t>(std::ceil(target_ratio * double(majority) - 1e-9));
  return target > minority ? target - minority : 0;
}

inline SmoteResult smote(const Matrix& x, const data::Labels& y, const SmoteConfig& cfg) {
  if (x.rows() != y.size()) throw DataError("smote: feature and label row counts differ");
  if (!y.has_both_classes()) throw DataError("smote: both classes must be present");
  if (cfg.k_neighbors < 1) throw UsageError("smote: k_neighbors must be at least 1");
  if (!(cfg.target_ratio > 0.0 && cfg.target_ratio <= 1.0)) {
    throw UsageError("smote: target_ratio must be in (0, 1]");
  }

  const int minority_label = y.positive_count() <= y.negative_count() ? 1 : 0;
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == minority_label) minority.push_back(i);
  }
  const std::size_t majority = y.size() - minority.size();
  const std::size_t n_new = synthetic_count(minority.size(), majority, cfg.target_ratio);

  SmoteResult out;
  out.minority_label = minority_label;
  if (n_new == 0) {
    out.features = x;
    out.labels = y;
    return out;
  }
  if (minority.size() <= cfg.k_neighbors) {
    throw DataError("smote: minority class has " + std::to_string(minority.size()) +
                    " rows, need more than k_neighbors = " + std::to_string(cfg.k_neighbors) +
                    "; lower k_neighbors");
  }

  const auto neighbors = nearest_within(x, minority, cfg.k_neighbors);
  Rng rng(cfg.seed);
  std::vector<double> values = x.data();
  values.reserve(values.size() + n_new * x.cols());
  std::vector<int> labels = y.values();
  out.origins.reserve(n_new);
  for (std::size_t s = 0; s < n_new; ++s) {
    const std::size_t a = rng.below(minority.size());
    const std::size_t nb = neighbors[a][rng.below(neighbors[a].size())];
    const double lambda = rng.uniform();
    const auto sample = smote_sample(x.row(minority[a]), x.row(nb), lambda);
    values.insert(values.end(), sample.begin(), sample.end());
    labels.push_back(minority_label);
    out.origins.push_back({minority[a], nb, lambda});
  }
  out.features = Matrix(y.size() + n_new, x.cols(), std::move(values));
  out.labels = data::Labels(std::move(labels));
  return out;
}

}  // namespace ccap::resample
