#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ccap/core/matrix.hpp"
#include "ccap/core/random.hpp"
#include "ccap/learners/common.hpp"
#include "ccap/learners/tree.hpp"

namespace ccap::learners {

// ---------------------------------------------------------------------------
// Hyperparameters, one struct per learner kind.

struct LogisticParams {
  double learning_rate = 0.5;
  int epochs = 300;
  double l2 = 1e-4;
};

// Soft-margin linear SVM.
struct SvmParams {
  double c = 0.001;
  int epochs = 20;
  std::uint64_t seed = 0;
};

struct KnnParams {
  int k = 25;
};

struct TreeParams {
  int max_depth = 8;
  int min_samples_split = 20;
};

struct ForestParams {
  int n_trees = 60;
  int max_depth = 12;
  int min_samples_split = 10;
  int max_features = 0;  // per split; 0 = round(sqrt(columns))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct BoostParams {
  int n_rounds = 150;
  double learning_rate = 0.1;
  int max_depth = 3;
  double l2_leaf = 0.0;
  double min_child_weight = 1.0;
  int min_samples_split = 2;
  double subsample = 1.0;  // row fraction per round
  std::uint64_t seed = 0;
};

// Always predicts `value`. Diagnostic stand-in used to probe ensembles.
struct ConstantParams {
  double value = 0.5;
};

using LearnerSpec =
    std::variant<LogisticParams, SvmParams, KnnParams, TreeParams, ForestParams, BoostParams, ConstantParams>;

enum class LearnerKind { lr, svm, knn, dt, rf, gb, constant };

inline LearnerKind kind_of(const LearnerSpec& spec) { return static_cast<LearnerKind>(spec.index()); }

inline const char* kind_name(LearnerKind k) {
  switch (k) {
    case LearnerKind::lr: return "lr";
    case LearnerKind::svm: return "svm";
    case LearnerKind::knn: return "knn";
    case LearnerKind::dt: return "dt";
    case LearnerKind::rf: return "rf";
    case LearnerKind::gb: return "gb";
    case LearnerKind::constant: return "constant";
  }
  return "?";
}

// Replaces the seed of seeded learner kinds; others are returned unchanged.
inline LearnerSpec with_seed(LearnerSpec spec, std::uint64_t seed) {
  std::visit(
      [&](auto& p) {
        if constexpr (requires { p.seed; }) p.seed = seed;
      },
      spec);
  return spec;
}

inline void validate(const LearnerSpec& spec) {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("hyperparameter out of range: ") + what);
  };
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LogisticParams>) {
          positive(p.learning_rate > 0 && p.epochs >= 1 && p.l2 >= 0, "lr");
        } else if constexpr (std::is_same_v<P, SvmParams>) {
          positive(p.c > 0 && p.epochs >= 1, "svm");
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          positive(p.k >= 1, "knn.k");
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          positive(p.max_depth >= 0 && p.min_samples_split >= 1, "dt");
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          positive(p.n_trees >= 1 && p.max_depth >= 0 && p.min_samples_split >= 1 && p.max_features >= 0, "rf");
        } else if constexpr (std::is_same_v<P, BoostParams>) {
          positive(p.n_rounds >= 1 && p.learning_rate >= 0 && p.max_depth >= 0 && p.l2_leaf >= 0 &&
                       p.min_child_weight >= 0 && p.subsample > 0 && p.subsample <= 1,
                   "gb");
        } else if constexpr (std::is_same_v<P, ConstantParams>) {
          positive(p.value >= 0 && p.value <= 1, "constant.value");
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// Fitted parameters.

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  std::vector<double> loss_history;  // objective before each epoch's step
};

struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
};

struct KnnModel {
  int k = 1;
  Matrix points;
  std::vector<int> labels;
};

struct TreeModel {
  Tree tree;
};

struct ForestModel {
  std::vector<Tree> trees;
  std::vector<std::uint64_t> tree_seeds;
};

struct BoostModel {
  double base_score = 0.0;  // initial log-odds
  double learning_rate = 0.1;
  std::vector<Tree> trees;
};

struct ConstantModel {
  double value = 0.5;
};

using ModelParams =
    std::variant<LogisticModel, SvmModel, KnnModel, TreeModel, ForestModel, BoostModel, ConstantModel>;

struct FittedModel {
  LearnerSpec spec;
  std::size_t n_features = 0;
  ModelParams params;

  LearnerKind kind() const { return kind_of(spec); }
};

// ---------------------------------------------------------------------------
// Logistic regression

// Mean binary cross-entropy + l2/2 * |w|^2 (intercept unpenalized).
inline double logistic_objective(const Matrix& x, const Labels& y, std::span<const double> w, double b,
                                 double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) loss += logit_loss(dot(x.row(i), w) + b, y[i]);
  return loss / double(x.rows()) + 0.5 * l2 * dot(w, w);
}

inline void logistic_gradient(const Matrix& x, const Labels& y, std::span<const double> w, double b, double l2,
                              std::span<double> grad_w, double& grad_b) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0.0;
  const double inv_n = 1.0 / double(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double r = (sigmoid(dot(row, w) + b) - y[i]) * inv_n;
    for (std::size_t j = 0; j < row.size(); ++j) grad_w[j] += r * row[j];
    grad_b += r;
  }
  for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += l2 * w[j];
}

inline LogisticModel fit_logistic(const LogisticParams& p, const Matrix& x, const Labels& y) {
  LogisticModel m;
  m.weights.assign(x.cols(), 0.0);
  std::vector<double> gw(x.cols());
  double gb = 0.0;
  for (int e = 0; e < p.epochs; ++e) {
    m.loss_history.push_back(logistic_objective(x, y, m.weights, m.intercept, p.l2));
    logistic_gradient(x, y, m.weights, m.intercept, p.l2, gw, gb);
    for (std::size_t j = 0; j < gw.size(); ++j) m.weights[j] -= p.learning_rate * gw[j];
    m.intercept -= p.learning_rate * gb;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Linear SVM

// Pegasos-style stochastic subgradient descent on
//   1/2 |w|^2 + C * sum_i max(0, 1 - y_i (w.x_i + b)),  y in {-1, +1},
// i.e. lambda = 1 / (C n) with step 1 / (lambda t). The bias is treated as the
// weight of a constant feature.
inline SvmModel fit_svm(const SvmParams& p, const Matrix& x, const Labels& y) {
  const std::size_t n = x.rows();
  const double lambda = 1.0 / (p.c * double(n));
  SvmModel m;
  m.weights.assign(x.cols(), 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t t = 0;
  for (int e = 0; e < p.epochs; ++e) {
    Rng rng(derive_seed(p.seed, {static_cast<std::uint64_t>(e)}));
    rng.shuffle(std::span(order));
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * double(t));
      const double yi = y[i] ? 1.0 : -1.0;
      const auto row = x.row(i);
      const double margin = yi * (dot(row, m.weights) + m.bias);
      const double shrink = 1.0 - eta * lambda;
      for (auto& w : m.weights) w *= shrink;
      m.bias *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < row.size(); ++j) m.weights[j] += eta * yi * row[j];
        m.bias += eta * yi;
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// k-nearest neighbours

// Fraction of positives among the k nearest training rows; distance ties go
// to the lower training-row index.
inline double knn_score(const KnnModel& m, std::span<const double> q,
                        std::vector<std::pair<double, std::size_t>>& scratch) {
  const std::size_t n = m.points.rows();
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = {squared_distance(q, m.points.row(i)), i};
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.k), n);
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
  int positives = 0;
  for (std::size_t i = 0; i < k; ++i) positives += m.labels[scratch[i].second];
  return double(positives) / double(k);
}

// ---------------------------------------------------------------------------
// Trees

inline Tree fit_tree(const TreeParams& p, const Matrix& x, const Labels& y, const SortedFeatures& sorted,
                     std::span<const double> weights) {
  EntropyCriterion crit{y.values()};
  GrowParams gp{p.max_depth, double(p.min_samples_split), 0, 0};
  return grow_tree(x, sorted, weights, crit, gp);
}

inline std::size_t forest_features(const ForestParams& p, std::size_t cols) {
  if (p.max_features > 0) return std::min<std::size_t>(static_cast<std::size_t>(p.max_features), cols);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(double(cols)))));
}

inline ForestModel fit_forest(const ForestParams& p, const Matrix& x, const Labels& y) {
  const SortedFeatures sorted(x);
  const std::size_t n = x.rows();
  ForestModel m;
  EntropyCriterion crit{y.values()};
  std::vector<double> weights(n);
  for (int t = 0; t < p.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(p.seed, {static_cast<std::uint64_t>(t)});
    if (p.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0.0);
      Rng rng(tree_seed);
      for (std::size_t i = 0; i < n; ++i) weights[rng.below(n)] += 1.0;
    } else {
      std::fill(weights.begin(), weights.end(), 1.0);
    }
    GrowParams gp{p.max_depth, double(p.min_samples_split), forest_features(p, x.cols()),
                  derive_seed(tree_seed, {1})};
    m.trees.push_back(grow_tree(x, sorted, weights, crit, gp));
    m.tree_seeds.push_back(tree_seed);
  }
  return m;
}

inline double forest_score(const ForestModel& m, std::span<const double> q) {
  double s = 0.0;
  for (const auto& t : m.trees) s += t.predict(q);
  return s / double(m.trees.size());
}

// ---------------------------------------------------------------------------
// Gradient boosting on the log-loss with Newton leaf weights.

inline BoostModel fit_boost(const BoostParams& p, const Matrix& x, const Labels& y) {
  const std::size_t n = x.rows();
  const SortedFeatures sorted(x);
  BoostModel m;
  m.learning_rate = p.learning_rate;
  m.base_score = std::log(double(y.positive_count()) / double(y.negative_count()));

  std::vector<double> score(n, m.base_score), grad(n), hess(n), weights(n, 1.0);
  for (int round = 0; round < p.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = sigmoid(score[i]);
      grad[i] = prob - y[i];
      hess[i] = prob * (1.0 - prob);
    }
    if (p.subsample < 1.0) {
      Rng rng(derive_seed(p.seed, {static_cast<std::uint64_t>(round)}));
      for (auto& w : weights) w = rng.uniform() < p.subsample ? 1.0 : 0.0;
    }
    NewtonCriterion crit{grad, hess, p.l2_leaf, p.min_child_weight};
    GrowParams gp{p.max_depth, double(p.min_samples_split), 0, 0};
    Tree tree = grow_tree(x, sorted, weights, crit, gp);
    for (std::size_t i = 0; i < n; ++i) score[i] += p.learning_rate * tree.predict(x.row(i));
    m.trees.push_back(std::move(tree));
  }
  return m;
}

inline double boost_margin(const BoostModel& m, std::span<const double> q) {
  double s = m.base_score;
  for (const auto& t : m.trees) s += m.learning_rate * t.predict(q);
  return s;
}

// ---------------------------------------------------------------------------
// Uniform contract

inline FittedModel fit(const LearnerSpec& spec, const Matrix& x, const Labels& y) {
  validate(spec);
  const auto kind = kind_of(spec);
  check_training_input(x, y, kind != LearnerKind::knn && kind != LearnerKind::constant);
  FittedModel out{spec, x.cols(), ConstantModel{}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LogisticParams>) {
          out.params = fit_logistic(p, x, y);
        } else if constexpr (std::is_same_v<P, SvmParams>) {
          out.params = fit_svm(p, x, y);
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          out.params = KnnModel{p.k, x, y.values()};
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          std::vector<double> ones(x.rows(), 1.0);
          out.params = TreeModel{fit_tree(p, x, y, SortedFeatures(x), ones)};
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          out.params = fit_forest(p, x, y);
        } else if constexpr (std::is_same_v<P, BoostParams>) {
          out.params = fit_boost(p, x, y);
        } else {
          out.params = ConstantModel{p.value};
        }
      },
      spec);
  return out;
}

inline std::vector<double> predict_proba(const FittedModel& model, const Matrix& x) {
  if (x.cols() != model.n_features) {
    throw DataError("model expects " + std::to_string(model.n_features) + " features, got " +
                    std::to_string(x.cols()));
  }
  std::vector<double> out(x.rows());
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, KnnModel>) {
          std::vector<std::pair<double, std::size_t>> scratch;
          for (std::size_t i = 0; i < x.rows(); ++i) out[i] = knn_score(m, x.row(i), scratch);
        } else {
          for (std::size_t i = 0; i < x.rows(); ++i) {
            const auto q = x.row(i);
            if constexpr (std::is_same_v<M, LogisticModel>) {
              out[i] = sigmoid(dot(q, m.weights) + m.intercept);
            } else if constexpr (std::is_same_v<M, SvmModel>) {
              out[i] = sigmoid(dot(q, m.weights) + m.bias);
            } else if constexpr (std::is_same_v<M, TreeModel>) {
              out[i] = m.tree.predict(q);
            } else if constexpr (std::is_same_v<M, ForestModel>) {
              out[i] = forest_score(m, q);
            } else if constexpr (std::is_same_v<M, BoostModel>) {
              out[i] = sigmoid(boost_margin(m, q));
            } else {
              out[i] = m.value;
            }
          }
        }
      },
      model.params);
  return out;
}

}  // namespace ccap::learners
