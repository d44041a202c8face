#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccap/core/matrix.hpp"
#include "ccap/core/parallel.hpp"
#include "ccap/core/random.hpp"
#include "ccap/data/encode.hpp"
#include "ccap/data/split.hpp"
#include "ccap/learners/learner.hpp"
#include "ccap/neural/mlp.hpp"
#include "ccap/resample/smote.hpp"

namespace ccap::ensemble {

using data::Labels;

struct NamedLearner {
  std::string name;
  learners::LearnerSpec spec;
};

// LR, SVM, KNN, DCT, RF, GB and the L2-regularized boosted variant (XGB).
inline std::vector<NamedLearner> default_bases() {
  learners::BoostParams xgb;
  xgb.l2_leaf = 1.0;
  return {
      {"LR", learners::LogisticParams{}},  {"SVM", learners::SvmParams{}},
      {"KNN", learners::KnnParams{}},      {"DCT", learners::TreeParams{}},
      {"RF", learners::ForestParams{}},    {"GB", learners::BoostParams{}},
      {"XGB", xgb},
  };
}

inline neural::MlpSpec default_meta_spec() {
  neural::MlpSpec s;
  s.epochs = 20;
  return s;
}

struct StackSpec {
  std::vector<NamedLearner> bases = default_bases();
  neural::MlpSpec meta = default_meta_spec();  // embeddings are filled in from cat_cardinalities
  std::size_t folds = 5;
  std::optional<data::FoldPlan> fold_plan;  // overrides `folds` when set
  bool include_dense = true;
  bool include_embeddings = true;
  bool smote_enabled = true;
  resample::SmoteConfig smote;
  std::vector<std::size_t> cat_cardinalities;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

// Which rows trained the models of one fold and which rows they scored.
struct FoldProvenance {
  int fold = 0;
  std::vector<std::size_t> training_rows;  // rows handed to SMOTE and the base fits
  std::vector<std::size_t> scored_rows;
  std::size_t synthetic_rows = 0;
};

struct OofResult {
  Matrix scores;                        // rows x bases, level-1 predictions
  std::vector<int> fold_of_row;         // fold whose models scored the row
  std::vector<FoldProvenance> folds;
  // Identifier of the fitted model that produced scores(r, b): fold * bases + b.
  std::vector<std::vector<std::size_t>> model_id;
};

inline learners::LearnerSpec task_spec(const StackSpec& spec, std::size_t fold, std::size_t base) {
  return learners::with_seed(spec.bases[base].spec, derive_seed(spec.seed, SeedStream::learner, {fold, base}));
}

// SMOTE-balanced copy of `rows` (or the plain subset when SMOTE is off).
inline resample::SmoteResult balanced_subset(const StackSpec& spec, const Matrix& x, const Labels& y,
                                             std::span<const std::size_t> rows, std::uint64_t stream) {
  Matrix xs = x.select_rows(rows);
  Labels ys = y.select(rows);
  if (!spec.smote_enabled) return {std::move(xs), std::move(ys), {}, 1};
  auto cfg = spec.smote;
  cfg.seed = derive_seed(spec.seed, SeedStream::smote, {stream});
  return resample::smote(xs, ys, cfg);
}

inline data::FoldPlan resolve_folds(const StackSpec& spec, const Labels& y) {
  if (spec.fold_plan) {
    if (spec.fold_plan->size() != y.size()) throw DataError("fold plan does not cover the training rows");
    return *spec.fold_plan;
  }
  return data::make_folds(y, spec.folds, derive_seed(spec.seed, SeedStream::folds));
}

// Level-1 matrix: every row is scored by each base model fitted on the
// SMOTE-balanced rows of the other folds.
inline OofResult oof_predictions(const StackSpec& spec, const Matrix& x, const Labels& y,
                                 const data::FoldPlan& plan) {
  if (spec.bases.size() < 2) throw UsageError("stacking needs at least two base learners");
  if (plan.size() != x.rows()) throw DataError("fold plan does not cover the training rows");
  const std::size_t k = plan.k;
  const std::size_t nb = spec.bases.size();

  OofResult out;
  out.scores = Matrix(x.rows(), nb);
  out.fold_of_row.assign(plan.assignment.begin(), plan.assignment.end());
  out.model_id.assign(x.rows(), std::vector<std::size_t>(nb));
  out.folds.resize(k);

  std::vector<resample::SmoteResult> train_sets(k);
  parallel_for(k, spec.threads, [&](std::size_t f) {
    auto& prov = out.folds[f];
    prov.fold = static_cast<int>(f);
    prov.training_rows = plan.rows_not_in(static_cast<int>(f));
    prov.scored_rows = plan.rows_in(static_cast<int>(f));
    train_sets[f] = balanced_subset(spec, x, y, prov.training_rows, f);
    prov.synthetic_rows = train_sets[f].origins.size();
  });

  parallel_for(k * nb, spec.threads, [&](std::size_t task) {
    const std::size_t f = task / nb;
    const std::size_t b = task % nb;
    const auto& prov = out.folds[f];
    std::vector<double> scores;
    try {
      auto model = learners::fit(task_spec(spec, f, b), train_sets[f].features, train_sets[f].labels);
      scores = learners::predict_proba(model, x.select_rows(prov.scored_rows));
    } catch (const std::exception& e) {
      throw TrainingError("base learner '" + spec.bases[b].name + "' failed on fold " + std::to_string(f) + ": " +
                          e.what());
    }
    for (std::size_t i = 0; i < prov.scored_rows.size(); ++i) {
      const std::size_t r = prov.scored_rows[i];
      out.scores(r, b) = scores[i];
      out.model_id[r][b] = f * nb + b;
    }
  });
  return out;
}

struct StackModel {
  std::vector<std::string> base_names;
  std::vector<learners::FittedModel> bases;  // refit on the full balanced training set
  neural::MlpModel meta;
  std::size_t n_features = 0;
  std::vector<std::size_t> dense_columns;  // feature columns appended after the base scores
  bool uses_embeddings = false;
};

inline Matrix meta_dense_input(const Matrix& base_scores, const Matrix& x, std::span<const std::size_t> dense_columns) {
  if (dense_columns.empty()) return base_scores;
  return base_scores.hcat(x.select_cols(dense_columns));
}

struct StackFit {
  StackModel model;
  OofResult oof;
  data::FoldPlan plan;
  std::size_t refit_synthetic_rows = 0;
};

// Out-of-fold level-1 scores, meta network on [scores | dense] plus
// categorical embeddings, then every base refit on the full balanced set.
inline StackFit fit_stack(const StackSpec& spec, const data::FeatureMatrix& m, const IdMatrix& cat_ids,
                          const Labels& y) {
  if (m.rows() != y.size()) throw DataError("feature and label row counts differ");
  if (spec.include_embeddings && cat_ids.cols() != spec.cat_cardinalities.size()) {
    throw DataError("categorical id columns do not match the configured cardinalities");
  }
  StackFit fit;
  fit.plan = resolve_folds(spec, y);
  fit.oof = oof_predictions(spec, m.values, y, fit.plan);

  StackModel& model = fit.model;
  model.n_features = m.cols();
  for (const auto& b : spec.bases) model.base_names.push_back(b.name);
  if (spec.include_dense) model.dense_columns = m.dense_columns();
  model.uses_embeddings = spec.include_embeddings && !spec.cat_cardinalities.empty();

  neural::MlpSpec meta = spec.meta;
  meta.seed = derive_seed(spec.seed, SeedStream::meta);
  meta.embeddings.clear();
  if (model.uses_embeddings) {
    for (auto card : spec.cat_cardinalities) meta.embeddings.push_back({card, neural::default_embedding_width(card)});
  }
  const Matrix meta_x = meta_dense_input(fit.oof.scores, m.values, model.dense_columns);
  model.meta = neural::train(meta, meta_x, model.uses_embeddings ? cat_ids : IdMatrix{}, y);

  std::vector<std::size_t> all(m.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::size_t refit = fit.plan.k;
  const auto full = balanced_subset(spec, m.values, y, all, refit);
  fit.refit_synthetic_rows = full.origins.size();
  model.bases.resize(spec.bases.size());
  parallel_for(spec.bases.size(), spec.threads, [&](std::size_t b) {
    try {
      model.bases[b] = learners::fit(task_spec(spec, refit, b), full.features, full.labels);
    } catch (const std::exception& e) {
      throw TrainingError("base learner '" + spec.bases[b].name + "' failed on refit: " + e.what());
    }
  });
  return fit;
}

inline Matrix base_scores(const StackModel& model, const Matrix& x, std::size_t threads = 1) {
  Matrix scores(x.rows(), model.bases.size());
  std::vector<std::vector<double>> cols(model.bases.size());
  parallel_for(model.bases.size(), threads, [&](std::size_t b) { cols[b] = learners::predict_proba(model.bases[b], x); });
  for (std::size_t b = 0; b < cols.size(); ++b) {
    for (std::size_t r = 0; r < x.rows(); ++r) scores(r, b) = cols[b][r];
  }
  return scores;
}

inline std::vector<double> predict_stack(const StackModel& model, const Matrix& x, const IdMatrix& cat_ids,
                                         std::size_t threads = 1) {
  if (x.cols() != model.n_features) {
    throw DataError("stack expects " + std::to_string(model.n_features) + " features, got " +
                    std::to_string(x.cols()));
  }
  if (model.uses_embeddings && (cat_ids.rows() != x.rows() || cat_ids.cols() != model.meta.embeddings.size())) {
    throw DataError("categorical ids do not match the stack's embedding contract");
  }
  const Matrix meta_x = meta_dense_input(base_scores(model, x, threads), x, model.dense_columns);
  return neural::predict_proba(model.meta, meta_x, model.uses_embeddings ? cat_ids : IdMatrix{});
}

}  // namespace ccap::ensemble
