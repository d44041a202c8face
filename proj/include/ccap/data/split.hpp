#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ccap/core/random.hpp"
#include "ccap/data/labels.hpp"

namespace ccap::data {

struct TrainTestSplit {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

// Seeded uniform permutation; the first round(n * test_fraction) indices form
// the test set.
inline TrainTestSplit split(std::size_t n_rows, double test_fraction, std::uint64_t seed) {
  if (n_rows < 2) throw DataError("cannot split fewer than 2 rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw UsageError("test fraction must be in (0, 1)");
  std::vector<std::size_t> perm(n_rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(perm));
  const auto n_test = static_cast<std::size_t>(std::llround(double(n_rows) * test_fraction));
  TrainTestSplit out;
  out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

// Fold assignment over a list of rows. assignment[i] is the fold of the i-th
// row of the list the plan was built from (not of the global table).
struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<int> assignment;
  bool stratified = true;
  std::vector<std::string> warnings;

  std::size_t size() const { return assignment.size(); }

  std::vector<std::size_t> rows_in(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (assignment[i] == fold) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> rows_not_in(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (assignment[i] != fold) out.push_back(i);
    }
    return out;
  }
};

// Stratified k-fold plan for `labels` (one entry per row of the training
// list). Positives are dealt round-robin after a seeded shuffle, negatives
// continue the same cycle, so fold sizes differ by at most one and each
// fold's positive count is within one of proportional. Falls back to an
// unstratified plan when either class has fewer than k rows.
inline FoldPlan make_folds(const Labels& labels, std::size_t k, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (k < 2) throw UsageError("fold count must be at least 2");
  if (k > n) throw DataError("fold count " + std::to_string(k) + " exceeds row count " + std::to_string(n));

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignment.assign(n, -1);
  Rng rng(seed);

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) (labels[i] ? pos : neg).push_back(i);

  std::vector<std::size_t> order;
  if (std::min(pos.size(), neg.size()) < k) {
    plan.stratified = false;
    plan.warnings.push_back("fewer than " + std::to_string(k) +
                            " rows in the minority class; folds are not stratified");
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
  } else {
    rng.shuffle(std::span(pos));
    rng.shuffle(std::span(neg));
    order = pos;
    order.insert(order.end(), neg.begin(), neg.end());
  }
  for (std::size_t i = 0; i < order.size(); ++i) plan.assignment[order[i]] = static_cast<int>(i % k);
  return plan;
}

// Unlabelled variant: a plain shuffled round-robin.
inline FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  FoldPlan plan = make_folds(Labels(std::vector<int>(n, 0)), k, seed);
  plan.warnings.clear();
  return plan;
}

}  // namespace ccap::data
