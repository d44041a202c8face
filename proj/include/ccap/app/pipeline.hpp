#pragma once

#include <map>
#include <numeric>
#include <unordered_map>
#include <string>
#include <vector>

#include "ccap/app/config.hpp"
#include "ccap/app/search.hpp"
#include "ccap/data/encode.hpp"
#include "ccap/data/labels.hpp"
#include "ccap/data/merge.hpp"
#include "ccap/data/missing.hpp"
#include "ccap/data/split.hpp"
#include "ccap/data/table.hpp"
#include "ccap/ensemble/stack.hpp"
#include "ccap/eval/report.hpp"
#include "ccap/features/features.hpp"
#include "ccap/neural/mlp.hpp"

namespace ccap::app {

// Rows (indices into the labelled applicant table) read by each fitting stage.
struct AccessAudit {
  std::map<std::string, std::vector<std::size_t>> stages;

  void record(const std::string& stage, std::span<const std::size_t> rows) {
    auto& v = stages[stage];
    v.insert(v.end(), rows.begin(), rows.end());
  }

  // Stages that read any of `rows`.
  std::vector<std::string> touching(std::span<const std::size_t> rows) const {
    std::vector<char> mark;
    for (auto r : rows) {
      if (r >= mark.size()) mark.resize(r + 1, 0);
      mark[r] = 1;
    }
    std::vector<std::string> out;
    for (const auto& [stage, read] : stages) {
      for (auto r : read) {
        if (r < mark.size() && mark[r]) {
          out.push_back(stage);
          break;
        }
      }
    }
    return out;
  }
};

// Runs `f`, prefixing any failure with the stage name. Foreign exceptions
// become errors of kind `fallback`.
template <typename F>
auto run_stage(const std::string& stage, ErrorKind fallback, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    raise(e.kind(), stage + ": " + e.what());
  } catch (const std::exception& e) {
    raise(fallback, stage + ": " + e.what());
  }
}

struct ExpectedColumn {
  std::string name;
  data::ColumnKind kind = data::ColumnKind::numeric;
};

// Everything fitted on the training split that turns an applicant table into
// model inputs.
struct Preprocessor {
  std::vector<ExpectedColumn> columns;  // applicant columns after the drop, in order
  std::vector<std::string> dropped;
  data::ImputerParams imputer;
  data::OneHotVocabulary vocab;
  data::ScalerParams scaler;             // raw numeric columns
  data::ScalerParams engineered_scaler;  // interaction and polynomial columns
  features::FeatureRecipe recipe;
};

struct ModelInputs {
  data::FeatureMatrix features;
  IdMatrix category_ids;
};

// Reorders and type-checks an applicant table against the expected columns.
// Extra columns are ignored; categorical columns read back as numbers are
// turned into text.
inline data::Table conform(const data::Table& t, const std::vector<ExpectedColumn>& columns) {
  std::vector<std::string> missing;
  for (const auto& c : columns) {
    if (t.find(c.name) == nullptr) missing.push_back(c.name);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError("input is missing columns: " + list);
  }
  data::Table out;
  for (const auto& c : columns) {
    const data::Column& src = t.column(c.name);
    if (src.kind == c.kind) {
      out.add_column(src);
    } else if (c.kind != data::ColumnKind::numeric && src.kind == data::ColumnKind::numeric) {
      std::vector<std::optional<std::string>> tokens(src.size());
      for (std::size_t r = 0; r < src.size(); ++r) {
        if (!src.missing(r)) tokens[r] = src.text(r);
      }
      out.add_column(data::Column::categorical(c.name, std::move(tokens), c.kind));
    } else {
      throw DataError("column '" + c.name + "' should be " + data::to_string(c.kind) + " but is " +
                      data::to_string(src.kind));
    }
  }
  return out;
}

inline ModelInputs transform(const Preprocessor& prep, const data::Table& app) {
  const data::Table t = data::apply_imputer(conform(app, prep.columns), prep.imputer);
  data::FeatureMatrix m = data::transform_one_hot(t, prep.vocab);
  m = data::apply_scaler(std::move(m), prep.scaler);
  m = features::apply_recipe(std::move(m), prep.recipe);
  m = data::apply_scaler(std::move(m), prep.engineered_scaler);
  if (!m.all_finite()) throw DataError("feature matrix has non-finite values");
  return {std::move(m), data::category_ids(t, prep.vocab)};
}

// Fits every preprocessing statistic on `train` rows of the post-drop table.
inline Preprocessor fit_preprocessor(const PipelineConfig& cfg, const data::Table& t,
                                     std::span<const std::size_t> train, AccessAudit* audit = nullptr) {
  Preprocessor prep;
  for (const auto& c : t.columns()) prep.columns.push_back({c.name, c.kind});
  prep.recipe = cfg.recipe;
  prep.imputer = data::fit_imputer(t, train, cfg.numeric_impute);
  const data::Table imputed = data::apply_imputer(t, prep.imputer);
  prep.vocab = data::fit_vocabulary(imputed, train);
  data::FeatureMatrix m = data::transform_one_hot(imputed, prep.vocab);
  prep.scaler = data::fit_scaler(m, train, m.dense_columns());
  m = features::apply_recipe(data::apply_scaler(std::move(m), prep.scaler), prep.recipe);
  prep.engineered_scaler = data::fit_scaler(m, train, features::engineered_columns(m));
  if (audit != nullptr) {
    audit->record("impute", train);
    audit->record("vocabulary", train);
    audit->record("scaler", train);
    audit->record("engineered_scaler", train);
  }
  return prep;
}

inline features::TemporalConfig temporal_config(const PipelineConfig& cfg) {
  return {cfg.schema.months, cfg.schema.status, cfg.label.bad_tokens, cfg.temporal_window};
}

inline data::LabelPolicy label_policy(const PipelineConfig& cfg) {
  data::LabelPolicy p = cfg.label;
  p.status_column = cfg.schema.status;
  p.months_column = cfg.schema.months;
  return p;
}

// Applicants with credit history, their labels, and the temporal feature
// computed from the months before the label window.
struct LabelledData {
  data::Table application;
  Labels labels;
  std::vector<std::string> ids;
  std::size_t input_rows = 0;
  std::size_t merged_rows = 0;
};

inline LabelledData label_applicants(const PipelineConfig& cfg, const data::Table& app, const data::Table& credit) {
  LabelledData out;
  out.input_rows = app.row_count();
  out.merged_rows = run_stage("merge", ErrorKind::data, [&] { return data::merged_row_count(app, credit); });
  if (out.merged_rows == 0) throw DataError("merge: no application ID has credit history");
  const auto rows = data::rows_with_history(app, credit);
  data::Table kept = app.select_rows(rows);

  const data::LabelPolicy policy = label_policy(cfg);
  const auto id_labels = run_stage("label", ErrorKind::data, [&] { return data::derive_label(credit, policy); });
  std::unordered_map<std::string, int> by_id;
  for (std::size_t i = 0; i < id_labels.ids.size(); ++i) by_id[id_labels.ids[i]] = id_labels.labels[i];
  std::vector<int> y;
  const data::Column& ids = *kept.identifier();
  for (std::size_t r = 0; r < kept.row_count(); ++r) {
    out.ids.push_back(*ids.tokens[r]);
    y.push_back(by_id.at(*ids.tokens[r]));
  }
  out.labels = Labels(std::move(y));

  if (cfg.recipe.temporal_enabled) {
    kept = run_stage("temporal", ErrorKind::data, [&] {
      const auto tsld = features::time_since_last_default(data::observation_window(credit, policy),
                                                          temporal_config(cfg));
      return features::attach_temporal(kept, tsld, cfg.temporal_window);
    });
  }
  out.application = std::move(kept);
  return out;
}

// Fitted pipeline: what the artifact stores.
struct TrainedPipeline {
  PipelineConfig config;
  Preprocessor prep;
  ensemble::StackModel stack;
  neural::MlpModel nn;
};

inline const char* kNnName = "NN";
inline const char* kStackName = "NN+Ensemble";

// Scores of every model: bases in order, then the standalone network and the
// stack.
inline std::vector<std::pair<std::string, std::vector<double>>> score_all(const TrainedPipeline& model,
                                                                         const ModelInputs& in, std::size_t threads) {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  const Matrix bases = ensemble::base_scores(model.stack, in.features.values, threads);
  for (std::size_t b = 0; b < model.stack.base_names.size(); ++b) {
    out.emplace_back(model.stack.base_names[b], bases.column(b));
  }
  out.emplace_back(kNnName, neural::predict_proba(model.nn, in.features.values, IdMatrix{}));
  const Matrix meta_x = ensemble::meta_dense_input(bases, in.features.values, model.stack.dense_columns);
  out.emplace_back(kStackName, neural::predict_proba(model.stack.meta, meta_x,
                                                     model.stack.uses_embeddings ? in.category_ids : IdMatrix{}));
  return out;
}

inline eval::EvalReport make_report(const std::vector<std::pair<std::string, std::vector<double>>>& scores,
                                    const Labels& y, double threshold) {
  eval::EvalReport report;
  for (const auto& [name, s] : scores) {
    report.rows.push_back(run_stage("evaluate " + name, ErrorKind::data,
                                    [&] { return eval::evaluate_model(name, y.values(), s, threshold); }));
  }
  return report;
}

struct TrainOutcome {
  TrainedPipeline model;
  eval::EvalReport report;
  AccessAudit audit;
  data::TrainTestSplit split;
  ensemble::OofResult oof;
  std::vector<SearchResult> searches;
};

inline TrainOutcome train_pipeline(PipelineConfig cfg, const data::Table& app, const data::Table& credit) {
  validate(cfg);
  TrainOutcome out;
  LabelledData ld = label_applicants(cfg, app, credit);
  const auto drop = run_stage("drop", ErrorKind::data,
                              [&] { return data::drop_high_missing(ld.application, cfg.drop_threshold); });
  const std::size_t n = drop.table.row_count();
  out.split = run_stage("split", ErrorKind::data,
                        [&] { return data::split(n, cfg.test_fraction, derive_seed(cfg.seed, SeedStream::split)); });
  const auto& train = out.split.train;
  const auto& test = out.split.test;
  const Labels y_train = ld.labels.select(train);
  const Labels y_test = ld.labels.select(test);
  if (!y_train.has_both_classes()) throw DataError("split: the training split has a single class");
  if (!y_test.has_both_classes()) throw DataError("split: the test split has a single class");

  Preprocessor prep = run_stage("preprocess", ErrorKind::data,
                                [&] { return fit_preprocessor(cfg, drop.table, train, &out.audit); });
  prep.dropped = drop.dropped;
  const ModelInputs all = run_stage("features", ErrorKind::data, [&] { return transform(prep, drop.table); });
  const data::FeatureMatrix x_train = all.features.select_rows(train);
  const IdMatrix ids_train = all.category_ids.select_rows(train);

  if (cfg.search.enabled) {
    auto tuned = run_stage("search", ErrorKind::training, [&] { return tune_learners(cfg, x_train.values, y_train); });
    cfg.learners = tuned.learners;
    out.searches = std::move(tuned.searches);
    out.audit.record("search", train);
  }

  ensemble::StackSpec spec;
  spec.bases = cfg.learners;
  spec.meta = cfg.meta;
  spec.folds = cfg.folds;
  spec.include_dense = cfg.include_dense;
  spec.include_embeddings = cfg.include_embeddings;
  spec.smote_enabled = cfg.smote_enabled;
  spec.smote = cfg.smote;
  spec.cat_cardinalities = data::category_cardinalities(prep.vocab);
  spec.seed = cfg.seed;
  spec.threads = cfg.threads;
  auto fit = run_stage("ensemble", ErrorKind::training, [&] { return ensemble::fit_stack(spec, x_train, ids_train, y_train); });
  if (cfg.smote_enabled) {
    for (const auto& f : fit.oof.folds) {
      std::vector<std::size_t> rows;
      for (auto i : f.training_rows) rows.push_back(train[i]);
      out.audit.record("smote:fold" + std::to_string(f.fold), rows);
    }
    out.audit.record("smote:refit", train);
  }

  neural::MlpModel nn = run_stage("network", ErrorKind::training, [&] {
    std::vector<std::size_t> every(train.size());
    std::iota(every.begin(), every.end(), std::size_t{0});
    const auto balanced = ensemble::balanced_subset(spec, x_train.values, y_train, every, fit.plan.k + 1);
    neural::MlpSpec s = cfg.mlp;
    s.seed = derive_seed(cfg.seed, SeedStream::mlp);
    s.embeddings.clear();
    return neural::train(s, balanced.features, IdMatrix{}, balanced.labels);
  });
  if (cfg.smote_enabled) out.audit.record("smote:nn", train);

  out.model = {cfg, std::move(prep), std::move(fit.model), std::move(nn)};
  out.oof = std::move(fit.oof);

  const ModelInputs test_in{all.features.select_rows(test), all.category_ids.select_rows(test)};
  out.report = make_report(score_all(out.model, test_in, cfg.threads), y_test, cfg.threshold);

  auto& ctx = out.report.context;
  ctx["application_rows"] = ld.input_rows;
  ctx["merged_rows"] = ld.merged_rows;
  ctx["labelled_rows"] = n;
  ctx["positives"] = ld.labels.positive_count();
  ctx["train_rows"] = train.size();
  ctx["test_rows"] = test.size();
  ctx["test_positives"] = y_test.positive_count();
  ctx["dropped_columns"] = out.model.prep.dropped;
  ctx["features"] = all.features.cols();
  ctx["smote_synthetic_rows"] = fit.refit_synthetic_rows;
  if (!out.searches.empty()) {
    json s = json::array();
    for (const auto& r : out.searches) {
      s.push_back({{"learner", r.learner}, {"best_trial", r.best_trial}, {"best_score", r.best_score}});
    }
    ctx["search"] = s;
  }
  ctx["config"] = to_json(cfg);
  return out;
}

// Scores a labelled dataset with a trained pipeline, using the same label and
// temporal protocol as training.
inline eval::EvalReport evaluate_pipeline(const TrainedPipeline& model, const data::Table& app,
                                          const data::Table& credit, double threshold, std::size_t threads) {
  const LabelledData ld = label_applicants(model.config, app, credit);
  if (!ld.labels.has_both_classes()) throw DataError("evaluate: the labelled data has a single class");
  const ModelInputs in = run_stage("features", ErrorKind::data, [&] { return transform(model.prep, ld.application); });
  auto report = make_report(score_all(model, in, threads), ld.labels, threshold);
  report.context["labelled_rows"] = ld.labels.size();
  report.context["positives"] = ld.labels.positive_count();
  return report;
}

struct Prediction {
  std::string id;
  double probability = 0.0;
  int decision = 0;
};

// Scores every applicant with the stack. The temporal feature uses the whole
// credit history up to month 0.
inline std::vector<Prediction> predict_pipeline(const TrainedPipeline& model, const data::Table& app,
                                                const data::Table& credit, double threshold, std::size_t threads) {
  const PipelineConfig& cfg = model.config;
  data::Table t = app;
  if (cfg.recipe.temporal_enabled) {
    t = run_stage("temporal", ErrorKind::data, [&] {
      return features::attach_temporal(app, features::time_since_last_default(credit, temporal_config(cfg)),
                                       cfg.temporal_window);
    });
  }
  const data::Column* id = t.identifier();
  if (id == nullptr) throw DataError("application table has no identifier column");
  const ModelInputs in = run_stage("features", ErrorKind::data, [&] { return transform(model.prep, t); });
  const auto p = ensemble::predict_stack(model.stack, in.features.values, in.category_ids, threads);
  std::vector<Prediction> out(p.size());
  for (std::size_t r = 0; r < p.size(); ++r) {
    out[r] = {id->text(r), p[r], p[r] >= threshold ? 1 : 0};
  }
  return out;
}

}  // namespace ccap::app
