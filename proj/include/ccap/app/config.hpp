#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ccap/core/error.hpp"
#include "ccap/data/labels.hpp"
#include "ccap/data/missing.hpp"
#include "ccap/ensemble/stack.hpp"
#include "ccap/features/features.hpp"
#include "ccap/learners/learner.hpp"
#include "ccap/neural/mlp.hpp"
#include "ccap/resample/smote.hpp"
#include "json.hpp"

namespace ccap::app {

using data::Labels;

using json = nlohmann::ordered_json;

struct SchemaConfig {
  std::string id = "ID";
  std::string status = "STATUS";
  std::string months = "MONTHS_BALANCE";
};

// Continuous ranges may be uniform or log-uniform; integer ranges are
// inclusive; categorical parameters pick from `values`.
enum class RangeKind { uniform, log_uniform, integer, categorical };

struct ParamRange {
  std::string name;
  RangeKind kind = RangeKind::uniform;
  double low = 0.0;
  double high = 1.0;
  std::vector<json> values;
};

struct LearnerSpace {
  std::string learner;  // base learner name, e.g. "GB"
  std::vector<ParamRange> params;
};

struct SearchConfig {
  bool enabled = false;  // apply the search inside `train`
  int budget = 25;
  std::size_t folds = 5;
  std::vector<LearnerSpace> spaces;  // empty = default_spaces()
};

struct OutputConfig {
  std::string dir = "ccap-out";
  std::string report = "report.json";
  std::string table = "report.txt";
  std::string artifact = "model.ccap";
  bool curves = true;
};

struct PipelineConfig {
  SchemaConfig schema;
  data::LabelPolicy label = [] {
    data::LabelPolicy p;
    p.performance_months = 6;
    return p;
  }();
  double drop_threshold = 0.30;
  data::NumericImpute numeric_impute = data::NumericImpute::mean;
  features::FeatureRecipe recipe;
  int temporal_window = 18;
  bool smote_enabled = true;
  resample::SmoteConfig smote;
  std::vector<ensemble::NamedLearner> learners = ensemble::default_bases();
  neural::MlpSpec mlp;
  neural::MlpSpec meta = ensemble::default_meta_spec();
  bool include_dense = true;
  bool include_embeddings = true;
  double test_fraction = 0.2;
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  double threshold = 0.5;
  SearchConfig search;

  // Runtime settings; they never change results and stay out of snapshots.
  std::size_t threads = 1;
  OutputConfig output;
};

// ---------------------------------------------------------------------------
// JSON helpers

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw UsageError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw UsageError("config: unknown key '" + key + "' in '" + where + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config: '" + where + "." + key + "' has the wrong type");
  }
}

}  // namespace detail

// Learner hyperparameters as {"name": ..., "kind": ..., <params>}.
inline json learner_to_json(const ensemble::NamedLearner& l) {
  json j;
  j["name"] = l.name;
  j["kind"] = learners::kind_name(learners::kind_of(l.spec));
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, learners::LogisticParams>) {
          j["learning_rate"] = p.learning_rate;
          j["epochs"] = p.epochs;
          j["l2"] = p.l2;
        } else if constexpr (std::is_same_v<P, learners::SvmParams>) {
          j["c"] = p.c;
          j["epochs"] = p.epochs;
        } else if constexpr (std::is_same_v<P, learners::KnnParams>) {
          j["k"] = p.k;
        } else if constexpr (std::is_same_v<P, learners::TreeParams>) {
          j["max_depth"] = p.max_depth;
          j["min_samples_split"] = p.min_samples_split;
        } else if constexpr (std::is_same_v<P, learners::ForestParams>) {
          j["n_trees"] = p.n_trees;
          j["max_depth"] = p.max_depth;
          j["min_samples_split"] = p.min_samples_split;
          j["max_features"] = p.max_features;
          j["bootstrap"] = p.bootstrap;
        } else if constexpr (std::is_same_v<P, learners::BoostParams>) {
          j["n_rounds"] = p.n_rounds;
          j["learning_rate"] = p.learning_rate;
          j["max_depth"] = p.max_depth;
          j["l2_leaf"] = p.l2_leaf;
          j["min_child_weight"] = p.min_child_weight;
          j["min_samples_split"] = p.min_samples_split;
          j["subsample"] = p.subsample;
        } else {
          j["value"] = p.value;
        }
      },
      l.spec);
  return j;
}

inline ensemble::NamedLearner learner_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw UsageError("config: every learner needs a 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  ensemble::NamedLearner out;
  out.name = j.value("name", kind);
  const std::string where = "learners." + out.name;
  using detail::read;
  if (kind == "lr") {
    learners::LogisticParams p;
    detail::reject_unknown(j, {"name", "kind", "learning_rate", "epochs", "l2"}, where);
    read(j, "learning_rate", p.learning_rate, where);
    read(j, "epochs", p.epochs, where);
    read(j, "l2", p.l2, where);
    out.spec = p;
  } else if (kind == "svm") {
    learners::SvmParams p;
    detail::reject_unknown(j, {"name", "kind", "c", "epochs"}, where);
    read(j, "c", p.c, where);
    read(j, "epochs", p.epochs, where);
    out.spec = p;
  } else if (kind == "knn") {
    learners::KnnParams p;
    detail::reject_unknown(j, {"name", "kind", "k"}, where);
    read(j, "k", p.k, where);
    out.spec = p;
  } else if (kind == "dt") {
    learners::TreeParams p;
    detail::reject_unknown(j, {"name", "kind", "max_depth", "min_samples_split"}, where);
    read(j, "max_depth", p.max_depth, where);
    read(j, "min_samples_split", p.min_samples_split, where);
    out.spec = p;
  } else if (kind == "rf") {
    learners::ForestParams p;
    detail::reject_unknown(j, {"name", "kind", "n_trees", "max_depth", "min_samples_split", "max_features", "bootstrap"},
                           where);
    read(j, "n_trees", p.n_trees, where);
    read(j, "max_depth", p.max_depth, where);
    read(j, "min_samples_split", p.min_samples_split, where);
    read(j, "max_features", p.max_features, where);
    read(j, "bootstrap", p.bootstrap, where);
    out.spec = p;
  } else if (kind == "gb") {
    learners::BoostParams p;
    detail::reject_unknown(j,
                           {"name", "kind", "n_rounds", "learning_rate", "max_depth", "l2_leaf", "min_child_weight",
                            "min_samples_split", "subsample"},
                           where);
    read(j, "n_rounds", p.n_rounds, where);
    read(j, "learning_rate", p.learning_rate, where);
    read(j, "max_depth", p.max_depth, where);
    read(j, "l2_leaf", p.l2_leaf, where);
    read(j, "min_child_weight", p.min_child_weight, where);
    read(j, "min_samples_split", p.min_samples_split, where);
    read(j, "subsample", p.subsample, where);
    out.spec = p;
  } else if (kind == "constant") {
    learners::ConstantParams p;
    detail::reject_unknown(j, {"name", "kind", "value"}, where);
    read(j, "value", p.value, where);
    out.spec = p;
  } else {
    throw UsageError("config: unknown learner kind '" + kind + "'");
  }
  learners::validate(out.spec);
  return out;
}

inline json mlp_to_json(const neural::MlpSpec& s) {
  return {{"hidden", s.hidden}, {"learning_rate", s.learning_rate}, {"epochs", s.epochs}, {"batch_size", s.batch_size}};
}

inline void mlp_from_json(const json& j, neural::MlpSpec& s, const std::string& where,
                          std::set<std::string> extra = {}) {
  extra.insert({"hidden", "learning_rate", "epochs", "batch_size"});
  detail::reject_unknown(j, extra, where);
  detail::read(j, "hidden", s.hidden, where);
  detail::read(j, "learning_rate", s.learning_rate, where);
  detail::read(j, "epochs", s.epochs, where);
  detail::read(j, "batch_size", s.batch_size, where);
  if (s.hidden.empty() || s.batch_size == 0 || s.epochs < 1 || !(s.learning_rate >= 0.0)) {
    throw UsageError("config: invalid network settings in '" + where + "'");
  }
  for (auto h : s.hidden) {
    if (h == 0) throw UsageError("config: hidden layer sizes in '" + where + "' must be at least 1");
  }
}

inline const char* range_kind_name(RangeKind k) {
  switch (k) {
    case RangeKind::uniform: return "uniform";
    case RangeKind::log_uniform: return "log_uniform";
    case RangeKind::integer: return "int";
    case RangeKind::categorical: return "categorical";
  }
  return "?";
}

inline json space_to_json(const LearnerSpace& s) {
  json params = json::object();
  for (const auto& r : s.params) {
    json p{{"type", range_kind_name(r.kind)}};
    if (r.kind == RangeKind::categorical) {
      p["values"] = r.values;
    } else {
      p["low"] = r.low;
      p["high"] = r.high;
    }
    params[r.name] = p;
  }
  return {{"learner", s.learner}, {"params", params}};
}

inline void validate_range(const ParamRange& r) {
  const bool ok = r.kind == RangeKind::categorical
                      ? !r.values.empty()
                      : (std::isfinite(r.low) && std::isfinite(r.high) && r.low <= r.high &&
                         (r.kind != RangeKind::log_uniform || r.low > 0.0) &&
                         (r.kind != RangeKind::integer || std::ceil(r.low) <= std::floor(r.high)));
  if (!ok) throw UsageError("config: empty or invalid search range for '" + r.name + "'");
}

inline LearnerSpace space_from_json(const json& j) {
  detail::reject_unknown(j, {"learner", "params"}, "search.spaces");
  LearnerSpace s;
  s.learner = j.at("learner").get<std::string>();
  for (const auto& [name, p] : j.at("params").items()) {
    detail::reject_unknown(p, {"type", "low", "high", "values"}, "search.spaces." + name);
    ParamRange r;
    r.name = name;
    const std::string type = p.value("type", "uniform");
    if (type == "uniform") {
      r.kind = RangeKind::uniform;
    } else if (type == "log_uniform") {
      r.kind = RangeKind::log_uniform;
    } else if (type == "int") {
      r.kind = RangeKind::integer;
    } else if (type == "categorical") {
      r.kind = RangeKind::categorical;
    } else {
      throw UsageError("config: unknown range type '" + type + "' for '" + name + "'");
    }
    if (r.kind == RangeKind::categorical) {
      r.values = p.value("values", std::vector<json>{});
    } else {
      r.low = p.value("low", 0.0);
      r.high = p.value("high", 0.0);
    }
    validate_range(r);
    s.params.push_back(std::move(r));
  }
  return s;
}

inline const char* impute_name(data::NumericImpute s) {
  return s == data::NumericImpute::mean ? "mean" : "median";
}

// Everything that determines a run's results. Threads and output paths are
// runtime settings and are left out, so snapshots match across them.
inline json to_json(const PipelineConfig& c) {
  json j;
  j["schema"] = {{"id", c.schema.id}, {"status", c.schema.status}, {"months", c.schema.months}};
  j["label"] = {{"bad_tokens", c.label.bad_tokens},
                {"alphabet", c.label.alphabet},
                {"performance_months", c.label.performance_months}};
  j["missing"] = {{"drop_threshold", c.drop_threshold}, {"numeric", impute_name(c.numeric_impute)}};
  json pairs = json::array();
  for (const auto& [a, b] : c.recipe.interaction_pairs) pairs.push_back({a, b});
  j["features"] = {{"interactions", pairs},
                   {"polynomial_degree", c.recipe.polynomial_degree},
                   {"temporal", c.recipe.temporal_enabled},
                   {"temporal_window", c.temporal_window}};
  j["smote"] = {{"enabled", c.smote_enabled},
                {"k_neighbors", c.smote.k_neighbors},
                {"target_ratio", c.smote.target_ratio}};
  j["learners"] = json::array();
  for (const auto& l : c.learners) j["learners"].push_back(learner_to_json(l));
  j["mlp"] = mlp_to_json(c.mlp);
  j["meta"] = mlp_to_json(c.meta);
  j["meta"]["include_dense"] = c.include_dense;
  j["meta"]["include_embeddings"] = c.include_embeddings;
  j["split"] = {{"test_fraction", c.test_fraction}, {"folds", c.folds}};
  j["seed"] = c.seed;
  j["threshold"] = c.threshold;
  json spaces = json::array();
  for (const auto& s : c.search.spaces) spaces.push_back(space_to_json(s));
  j["search"] = {{"enabled", c.search.enabled}, {"budget", c.search.budget}, {"folds", c.search.folds},
                 {"spaces", spaces}};
  return j;
}

inline void validate(const PipelineConfig& c) {
  if (!(c.drop_threshold > 0.0 && c.drop_threshold <= 1.0)) throw UsageError("config: drop_threshold must be in (0, 1]");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw UsageError("config: test_fraction must be in (0, 1)");
  if (c.folds < 2) throw UsageError("config: folds must be at least 2");
  if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw UsageError("config: threshold must be in (0, 1)");
  if (c.smote.k_neighbors < 1) throw UsageError("config: smote.k_neighbors must be at least 1");
  if (!(c.smote.target_ratio > 0.0 && c.smote.target_ratio <= 1.0)) {
    throw UsageError("config: smote.target_ratio must be in (0, 1]");
  }
  if (c.learners.size() < 2) throw UsageError("config: at least two base learners are required");
  std::set<std::string> names;
  for (const auto& l : c.learners) {
    if (!names.insert(l.name).second) throw UsageError("config: duplicate learner name '" + l.name + "'");
    learners::validate(l.spec);
  }
  if (c.recipe.polynomial_degree != 1 && c.recipe.polynomial_degree != 2) {
    throw UsageError("config: polynomial_degree must be 1 or 2");
  }
  if (c.temporal_window < 1) throw UsageError("config: temporal_window must be at least 1");
  if (c.label.performance_months < 0) throw UsageError("config: performance_months must be non-negative");
  if (c.search.budget < 1) throw UsageError("config: search.budget must be at least 1");
  if (c.search.folds < 2) throw UsageError("config: search.folds must be at least 2");
}

// Every key is optional; absent keys keep their defaults.
inline PipelineConfig config_from_json(const json& j) {
  using detail::read;
  using detail::reject_unknown;
  PipelineConfig c;
  if (j.is_null()) return c;
  reject_unknown(j, {"schema", "label", "missing", "features", "smote", "learners", "mlp", "meta", "split", "seed",
                     "threshold", "search", "threads", "output"},
                 "config");
  if (j.contains("schema")) {
    const auto& s = j["schema"];
    reject_unknown(s, {"id", "status", "months"}, "schema");
    read(s, "id", c.schema.id, "schema");
    read(s, "status", c.schema.status, "schema");
    read(s, "months", c.schema.months, "schema");
  }
  if (j.contains("label")) {
    const auto& s = j["label"];
    reject_unknown(s, {"bad_tokens", "alphabet", "performance_months"}, "label");
    read(s, "bad_tokens", c.label.bad_tokens, "label");
    read(s, "alphabet", c.label.alphabet, "label");
    read(s, "performance_months", c.label.performance_months, "label");
  }
  if (j.contains("missing")) {
    const auto& s = j["missing"];
    reject_unknown(s, {"drop_threshold", "numeric"}, "missing");
    read(s, "drop_threshold", c.drop_threshold, "missing");
    std::string numeric = impute_name(c.numeric_impute);
    read(s, "numeric", numeric, "missing");
    if (numeric == "mean") {
      c.numeric_impute = data::NumericImpute::mean;
    } else if (numeric == "median") {
      c.numeric_impute = data::NumericImpute::median;
    } else {
      throw UsageError("config: missing.numeric must be 'mean' or 'median'");
    }
  }
  if (j.contains("features")) {
    const auto& s = j["features"];
    reject_unknown(s, {"interactions", "polynomial_degree", "temporal", "temporal_window"}, "features");
    if (s.contains("interactions")) {
      c.recipe.interaction_pairs.clear();
      for (const auto& p : s["interactions"]) {
        if (!p.is_array() || p.size() != 2) throw UsageError("config: interactions are [column, column] pairs");
        c.recipe.interaction_pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
      }
    }
    read(s, "polynomial_degree", c.recipe.polynomial_degree, "features");
    read(s, "temporal", c.recipe.temporal_enabled, "features");
    read(s, "temporal_window", c.temporal_window, "features");
  }
  if (j.contains("smote")) {
    const auto& s = j["smote"];
    reject_unknown(s, {"enabled", "k_neighbors", "target_ratio"}, "smote");
    read(s, "enabled", c.smote_enabled, "smote");
    read(s, "k_neighbors", c.smote.k_neighbors, "smote");
    read(s, "target_ratio", c.smote.target_ratio, "smote");
  }
  if (j.contains("learners")) {
    c.learners.clear();
    for (const auto& l : j["learners"]) c.learners.push_back(learner_from_json(l));
  }
  if (j.contains("mlp")) mlp_from_json(j["mlp"], c.mlp, "mlp");
  if (j.contains("meta")) {
    mlp_from_json(j["meta"], c.meta, "meta", {"include_dense", "include_embeddings"});
    read(j["meta"], "include_dense", c.include_dense, "meta");
    read(j["meta"], "include_embeddings", c.include_embeddings, "meta");
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    reject_unknown(s, {"test_fraction", "folds"}, "split");
    read(s, "test_fraction", c.test_fraction, "split");
    read(s, "folds", c.folds, "split");
  }
  read(j, "seed", c.seed, "config");
  read(j, "threshold", c.threshold, "config");
  read(j, "threads", c.threads, "config");
  if (j.contains("search")) {
    const auto& s = j["search"];
    reject_unknown(s, {"enabled", "budget", "folds", "spaces"}, "search");
    read(s, "enabled", c.search.enabled, "search");
    read(s, "budget", c.search.budget, "search");
    read(s, "folds", c.search.folds, "search");
    if (s.contains("spaces")) {
      for (const auto& sp : s["spaces"]) c.search.spaces.push_back(space_from_json(sp));
    }
  }
  if (j.contains("output")) {
    const auto& s = j["output"];
    reject_unknown(s, {"dir", "report", "table", "artifact", "curves"}, "output");
    read(s, "dir", c.output.dir, "output");
    read(s, "report", c.output.report, "output");
    read(s, "table", c.output.table, "output");
    read(s, "artifact", c.output.artifact, "output");
    read(s, "curves", c.output.curves, "output");
  }
  validate(c);
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace ccap::app
