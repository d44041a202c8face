#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ccap/app/config.hpp"
#include "ccap/core/parallel.hpp"
#include "ccap/core/random.hpp"
#include "ccap/data/split.hpp"
#include "ccap/ensemble/stack.hpp"
#include "ccap/eval/metrics.hpp"

namespace ccap::app {

inline std::vector<ParamRange> default_space(learners::LearnerKind kind) {
  using K = learners::LearnerKind;
  const auto log_r = [](const char* n, double lo, double hi) { return ParamRange{n, RangeKind::log_uniform, lo, hi, {}}; };
  const auto int_r = [](const char* n, double lo, double hi) { return ParamRange{n, RangeKind::integer, lo, hi, {}}; };
  switch (kind) {
    case K::lr: return {log_r("learning_rate", 0.05, 2.0), log_r("l2", 1e-6, 0.1), int_r("epochs", 100, 500)};
    case K::svm: return {log_r("c", 0.01, 10.0), int_r("epochs", 5, 30)};
    case K::knn: return {int_r("k", 5, 100)};
    case K::dt: return {int_r("max_depth", 2, 12), int_r("min_samples_split", 2, 100)};
    case K::rf: return {int_r("n_trees", 20, 100), int_r("max_depth", 4, 16), int_r("min_samples_split", 2, 50)};
    case K::gb:
      return {int_r("n_rounds", 50, 300), log_r("learning_rate", 0.02, 0.3), int_r("max_depth", 1, 6),
              log_r("l2_leaf", 0.1, 10.0)};
    case K::constant: return {};
  }
  return {};
}

// Spaces from the config, or the default space of every non-constant learner.
inline std::vector<LearnerSpace> resolve_spaces(const PipelineConfig& cfg) {
  if (!cfg.search.spaces.empty()) return cfg.search.spaces;
  std::vector<LearnerSpace> out;
  for (const auto& l : cfg.learners) {
    auto params = default_space(learners::kind_of(l.spec));
    if (!params.empty()) out.push_back({l.name, std::move(params)});
  }
  return out;
}

inline json sample_params(const std::vector<ParamRange>& space, Rng& rng) {
  json p = json::object();
  for (const auto& r : space) {
    switch (r.kind) {
      case RangeKind::uniform: p[r.name] = rng.uniform(r.low, r.high); break;
      case RangeKind::log_uniform: p[r.name] = std::exp(rng.uniform(std::log(r.low), std::log(r.high))); break;
      case RangeKind::integer: {
        const auto lo = std::int64_t(std::ceil(r.low));
        const auto hi = std::int64_t(std::floor(r.high));
        p[r.name] = lo + std::int64_t(rng.below(std::uint64_t(hi - lo + 1)));
        break;
      }
      case RangeKind::categorical: p[r.name] = r.values[rng.below(r.values.size())]; break;
    }
  }
  return p;
}

inline ensemble::NamedLearner apply_params(const ensemble::NamedLearner& base, const json& params) {
  json j = learner_to_json(base);
  for (const auto& [key, value] : params.items()) {
    if (!j.contains(key)) throw UsageError("search: learner '" + base.name + "' has no parameter '" + key + "'");
    // Integer parameters sampled from continuous ranges are rounded.
    j[key] = j[key].is_number_integer() && value.is_number_float() ? json(std::llround(value.get<double>())) : value;
  }
  return learner_from_json(j);
}

struct SearchOptions {
  int budget = 25;
  std::size_t folds = 5;
  bool smote_enabled = true;
  resample::SmoteConfig smote;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct Trial {
  int index = 0;
  json params;
  double score = std::numeric_limits<double>::quiet_NaN();  // mean CV AUC
  std::string error;
};

struct SearchResult {
  std::string learner;
  ensemble::NamedLearner best;
  int best_trial = -1;
  double best_score = 0.0;
  std::vector<Trial> trials;
};

inline json to_json(const SearchResult& r) {
  json trials = json::array();
  for (const auto& t : r.trials) {
    json j{{"trial", t.index}, {"params", t.params}};
    if (t.error.empty()) {
      j["score"] = t.score;
    } else {
      j["error"] = t.error;
    }
    trials.push_back(j);
  }
  return {{"learner", r.learner}, {"best_trial", r.best_trial}, {"best_score", r.best_score},
          {"best", learner_to_json(r.best)}, {"trials", trials}};
}

// Cross-validation folds with their SMOTE-balanced training portions, shared
// by every trial.
struct CvPlan {
  data::FoldPlan plan;
  std::vector<resample::SmoteResult> train_sets;
  std::vector<std::vector<std::size_t>> held_out;
};

inline CvPlan make_cv_plan(const Matrix& x, const Labels& y, const SearchOptions& opt) {
  CvPlan cv;
  cv.plan = data::make_folds(y, opt.folds, derive_seed(opt.seed, SeedStream::folds, {1}));
  ensemble::StackSpec s;
  s.smote_enabled = opt.smote_enabled;
  s.smote = opt.smote;
  s.seed = derive_seed(opt.seed, SeedStream::search);
  cv.train_sets.resize(opt.folds);
  cv.held_out.resize(opt.folds);
  parallel_for(opt.folds, opt.threads, [&](std::size_t f) {
    cv.held_out[f] = cv.plan.rows_in(int(f));
    cv.train_sets[f] = ensemble::balanced_subset(s, x, y, cv.plan.rows_not_in(int(f)), f);
  });
  return cv;
}

// Random search over one learner's space. Trials are scored by mean k-fold
// AUC; the earliest trial wins ties.
inline SearchResult random_search(const ensemble::NamedLearner& base, const std::vector<ParamRange>& space,
                                  const Matrix& x, const Labels& y, const SearchOptions& opt,
                                  const CvPlan* shared = nullptr) {
  if (opt.budget < 1) throw UsageError("search budget must be at least 1");
  for (const auto& r : space) validate_range(r);
  CvPlan local;
  if (shared == nullptr) {
    local = make_cv_plan(x, y, opt);
    shared = &local;
  }
  const CvPlan& cv = *shared;
  const std::size_t k = cv.train_sets.size();

  SearchResult out;
  out.learner = base.name;
  out.trials.resize(std::size_t(opt.budget));
  std::vector<ensemble::NamedLearner> candidates(out.trials.size());
  for (std::size_t t = 0; t < out.trials.size(); ++t) {
    Rng rng(derive_seed(opt.seed, SeedStream::search, {t}));
    out.trials[t].index = int(t);
    out.trials[t].params = sample_params(space, rng);
    candidates[t] = apply_params(base, out.trials[t].params);
  }

  std::vector<double> fold_auc(out.trials.size() * k, 0.0);
  std::vector<std::string> fold_error(out.trials.size() * k);
  parallel_for(out.trials.size() * k, opt.threads, [&](std::size_t task) {
    const std::size_t t = task / k;
    const std::size_t f = task % k;
    try {
      const auto spec = learners::with_seed(candidates[t].spec, derive_seed(opt.seed, SeedStream::learner, {t, f}));
      const auto model = learners::fit(spec, cv.train_sets[f].features, cv.train_sets[f].labels);
      const auto scores = learners::predict_proba(model, x.select_rows(cv.held_out[f]));
      const Labels held = y.select(cv.held_out[f]);
      fold_auc[task] = eval::auc(held.values(), scores);
    } catch (const std::exception& e) {
      fold_error[task] = e.what();
    }
  });

  std::string causes;
  for (std::size_t t = 0; t < out.trials.size(); ++t) {
    auto& trial = out.trials[t];
    double sum = 0.0;
    for (std::size_t f = 0; f < k && trial.error.empty(); ++f) {
      if (!fold_error[t * k + f].empty()) {
        trial.error = "fold " + std::to_string(f) + ": " + fold_error[t * k + f];
      }
      sum += fold_auc[t * k + f];
    }
    if (!trial.error.empty()) {
      causes += "\n  trial " + std::to_string(t) + ": " + trial.error;
      continue;
    }
    trial.score = sum / double(k);
    if (out.best_trial < 0 || trial.score > out.best_score) {
      out.best_trial = int(t);
      out.best_score = trial.score;
      out.best = candidates[t];
    }
  }
  if (out.best_trial < 0) throw TrainingError("search for '" + base.name + "': every trial failed:" + causes);
  return out;
}

// Searches every configured space and returns the tuned learner list.
struct TuneResult {
  std::vector<ensemble::NamedLearner> learners;
  std::vector<SearchResult> searches;
};

inline TuneResult tune_learners(const PipelineConfig& cfg, const Matrix& x, const Labels& y) {
  SearchOptions opt;
  opt.budget = cfg.search.budget;
  opt.folds = cfg.search.folds;
  opt.smote_enabled = cfg.smote_enabled;
  opt.smote = cfg.smote;
  opt.threads = cfg.threads;
  opt.seed = derive_seed(cfg.seed, SeedStream::search);
  const CvPlan cv = make_cv_plan(x, y, opt);

  TuneResult out;
  out.learners = cfg.learners;
  for (const auto& space : resolve_spaces(cfg)) {
    auto it = std::find_if(out.learners.begin(), out.learners.end(),
                           [&](const auto& l) { return l.name == space.learner; });
    if (it == out.learners.end()) throw UsageError("search space names unknown learner '" + space.learner + "'");
    SearchOptions o = opt;
    o.seed = derive_seed(opt.seed, {std::uint64_t(it - out.learners.begin())});
    auto result = random_search(*it, space.params, x, y, o, &cv);
    *it = result.best;
    out.searches.push_back(std::move(result));
  }
  return out;
}

}  // namespace ccap::app
