#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "ccap/core/matrix.hpp"
#include "ccap/core/random.hpp"
#include "ccap/learners/common.hpp"

namespace ccap::learners {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output; kept on internal nodes for inspection
  double weight = 0.0;  // training weight that reached the node
  double gain = 0.0;    // gain of the accepted split (internal nodes)
  int depth = 0;

  bool is_leaf() const { return feature < 0; }
};

// Binary tree; rows with x[feature] <= threshold go left.
struct Tree {
  std::vector<TreeNode> nodes;

  std::size_t leaf_index(std::span<const double> x) const {
    std::size_t n = 0;
    while (!nodes[n].is_leaf()) {
      const auto& node = nodes[n];
      n = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                  : node.right);
    }
    return n;
  }

  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }

  int depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
  }

  friend bool operator==(const Tree& a, const Tree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
      const auto& x = a.nodes[i];
      const auto& y = b.nodes[i];
      if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left || x.right != y.right ||
          x.value != y.value) {
        return false;
      }
    }
    return true;
  }
};

// Row indices sorted by (value, row) for every feature, computed once per
// training matrix and shared by all trees grown on it.
struct SortedFeatures {
  std::vector<std::vector<std::uint32_t>> order;

  explicit SortedFeatures(const Matrix& x) : order(x.cols()) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      auto& o = order[j];
      o.resize(x.rows());
      std::iota(o.begin(), o.end(), std::uint32_t{0});
      std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, j) < x(b, j); });
    }
  }
};

struct GrowParams {
  int max_depth = 6;
  double min_split_weight = 2.0;
  std::size_t max_features = 0;  // features tried per node; 0 = all
  std::uint64_t seed = 0;        // drives per-node feature subsets
};

// Splitting rule for classification trees: entropy information gain over
// (weighted) class counts; leaves hold the positive fraction.
struct EntropyCriterion {
  using Stats = ClassCounts;

  std::span<const int> labels;

  Stats sample(std::size_t i, double w) const {
    return labels[i] ? Stats{0.0, w} : Stats{w, 0.0};
  }
  static void add(Stats& a, const Stats& b) {
    a.negatives += b.negatives;
    a.positives += b.positives;
  }
  static Stats minus(const Stats& a, const Stats& b) { return {a.negatives - b.negatives, a.positives - b.positives}; }
  static double weight(const Stats& s) { return s.total(); }
  bool splittable(const Stats& s) const { return s.negatives > 0.0 && s.positives > 0.0; }
  bool child_ok(const Stats& s) const { return s.total() > 0.0; }
  static double gain(const Stats& parent, const Stats& left, const Stats& right) {
    const double n = parent.total();
    return entropy(parent) - left.total() / n * entropy(left) - right.total() / n * entropy(right);
  }
  static double leaf_value(const Stats& s) { return s.positives / s.total(); }
};

// Second-order splitting rule for boosted regression trees on the log-loss:
// gain = 1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)], leaf = -G/(H+l).
struct NewtonCriterion {
  struct Stats {
    double g = 0.0;
    double h = 0.0;
    double w = 0.0;
  };

  std::span<const double> gradients;
  std::span<const double> hessians;
  double l2 = 0.0;
  double min_child_weight = 1.0;

  Stats sample(std::size_t i, double w) const { return {w * gradients[i], w * hessians[i], w}; }
  static void add(Stats& a, const Stats& b) {
    a.g += b.g;
    a.h += b.h;
    a.w += b.w;
  }
  static Stats minus(const Stats& a, const Stats& b) { return {a.g - b.g, a.h - b.h, a.w - b.w}; }
  static double weight(const Stats& s) { return s.w; }
  bool splittable(const Stats&) const { return true; }
  bool child_ok(const Stats& s) const { return s.w > 0.0 && s.h >= min_child_weight; }
  double score(const Stats& s) const {
    const double d = s.h + l2;
    return d > 0.0 ? s.g * s.g / d : 0.0;
  }
  double gain(const Stats& parent, const Stats& left, const Stats& right) const {
    return 0.5 * (score(left) + score(right) - score(parent));
  }
  double leaf_value(const Stats& s) const {
    const double d = s.h + l2;
    return d > 0.0 ? -s.g / d : 0.0;
  }
};

inline constexpr double kMinSplitGain = 1e-12;

// Grows one tree breadth-first. Each level scans every feature's presorted
// order once, so a level costs O(features x rows). Rows with weight 0 are
// ignored. Candidate thresholds are midpoints between consecutive distinct
// values inside a node; the first strictly best split wins, which means the
// lowest feature index and then the lowest threshold on ties.
template <typename Criterion>
Tree grow_tree(const Matrix& x, const SortedFeatures& sorted, std::span<const double> weights,
               const Criterion& crit, const GrowParams& params) {
  using Stats = typename Criterion::Stats;
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();

  std::vector<Stats> per_row(n);
  std::vector<int> node_of(n, -1);
  Stats root{};
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] <= 0.0) continue;
    per_row[i] = crit.sample(i, weights[i]);
    Criterion::add(root, per_row[i]);
    node_of[i] = 0;
  }

  Tree tree;
  std::vector<Stats> node_stats{root};
  tree.nodes.push_back({});
  tree.nodes[0].value = crit.leaf_value(root);
  tree.nodes[0].weight = Criterion::weight(root);

  std::vector<int> open{0};
  std::vector<int> slot_of;
  while (!open.empty()) {
    // Nodes that may still split at this depth.
    std::vector<int> active;
    for (int id : open) {
      const auto& node = tree.nodes[static_cast<std::size_t>(id)];
      const Stats& s = node_stats[static_cast<std::size_t>(id)];
      if (node.depth < params.max_depth && Criterion::weight(s) >= params.min_split_weight && crit.splittable(s)) {
        active.push_back(id);
      }
    }
    if (active.empty()) break;

    slot_of.assign(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < active.size(); ++s) slot_of[static_cast<std::size_t>(active[s])] = static_cast<int>(s);

    const std::size_t m = params.max_features == 0 || params.max_features >= c ? c : params.max_features;
    std::vector<std::vector<char>> allowed;
    if (m < c) {
      allowed.assign(active.size(), std::vector<char>(c, 0));
      std::vector<std::size_t> feats(c);
      for (std::size_t s = 0; s < active.size(); ++s) {
        std::iota(feats.begin(), feats.end(), std::size_t{0});
        Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(active[s])}));
        for (std::size_t k = 0; k < m; ++k) {
          std::swap(feats[k], feats[k + rng.below(c - k)]);
          allowed[s][feats[k]] = 1;
        }
      }
    }

    struct Best {
      double gain = kMinSplitGain;
      int feature = -1;
      double threshold = 0.0;
    };
    std::vector<Best> best(active.size());
    std::vector<Stats> left(active.size());
    std::vector<double> last(active.size());
    std::vector<char> has_last(active.size());

    for (std::size_t j = 0; j < c; ++j) {
      std::fill(left.begin(), left.end(), Stats{});
      std::fill(has_last.begin(), has_last.end(), 0);
      for (std::uint32_t i : sorted.order[j]) {
        const int node = node_of[i];
        if (node < 0) continue;
        const int s = slot_of[static_cast<std::size_t>(node)];
        if (s < 0) continue;
        const auto su = static_cast<std::size_t>(s);
        if (!allowed.empty() && !allowed[su][j]) continue;
        const double v = x(i, j);
        if (has_last[su] && v > last[su]) {
          const Stats& total = node_stats[static_cast<std::size_t>(node)];
          const Stats right = Criterion::minus(total, left[su]);
          if (crit.child_ok(left[su]) && crit.child_ok(right)) {
            const double g = crit.gain(total, left[su], right);
            if (g > best[su].gain) {
              double thr = last[su] + 0.5 * (v - last[su]);
              if (!(thr < v)) thr = last[su];
              best[su] = {g, static_cast<int>(j), thr};
            }
          }
        }
        Criterion::add(left[su], per_row[i]);
        last[su] = v;
        has_last[su] = 1;
      }
    }

    // Create children for accepted splits and route rows.
    std::vector<int> next_open;
    for (std::size_t s = 0; s < active.size(); ++s) {
      if (best[s].feature < 0) continue;
      const auto id = static_cast<std::size_t>(active[s]);
      const int depth = tree.nodes[id].depth + 1;
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      node_stats.push_back({});
      node_stats.push_back({});
      auto& node = tree.nodes[id];
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.gain = best[s].gain;
      node.left = l;
      node.right = l + 1;
      tree.nodes[static_cast<std::size_t>(l)].depth = depth;
      tree.nodes[static_cast<std::size_t>(l) + 1].depth = depth;
      next_open.push_back(l);
      next_open.push_back(l + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int node = node_of[i];
      if (node < 0) continue;
      const auto& parent = tree.nodes[static_cast<std::size_t>(node)];
      if (parent.is_leaf()) continue;
      const int child = x(i, static_cast<std::size_t>(parent.feature)) <= parent.threshold ? parent.left : parent.right;
      node_of[i] = child;
      Criterion::add(node_stats[static_cast<std::size_t>(child)], per_row[i]);
    }
    for (int id : next_open) {
      const auto& s = node_stats[static_cast<std::size_t>(id)];
      tree.nodes[static_cast<std::size_t>(id)].value = crit.leaf_value(s);
      tree.nodes[static_cast<std::size_t>(id)].weight = Criterion::weight(s);
    }
    open = std::move(next_open);
  }
  return tree;
}

}  // namespace ccap::learners
