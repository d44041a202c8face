// Command-line front end: synth, train, evaluate, predict, tune, profile.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ccap/ccap.hpp"

namespace fs = std::filesystem;
using namespace ccap;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> threshold;
  std::optional<std::size_t> threads;
};

app::PipelineConfig resolve_config(const Common& c) {
  app::PipelineConfig cfg = c.config.empty() ? app::PipelineConfig{} : app::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threshold) cfg.threshold = *c.threshold;
  if (c.threads) cfg.threads = *c.threads;
  if (!c.out.empty()) cfg.output.dir = c.out;
  app::validate(cfg);
  return cfg;
}

// Files are first written next to their targets and renamed only once every
// output exists; any failure removes what was written.
class Outputs {
 public:
  void add(const fs::path& path, std::string content) { files_.push_back({path, std::move(content)}); }

  void commit() {
    std::vector<fs::path> written;
    try {
      for (const auto& [path, content] : files_) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        const fs::path tmp = path.string() + ".partial";
        written.push_back(tmp);
        std::ofstream out(tmp, std::ios::binary);
        out.write(content.data(), std::streamsize(content.size()));
        if (!out) throw DataError("cannot write '" + path.string() + "'");
      }
      for (const auto& [path, content] : files_) fs::rename(path.string() + ".partial", path);
    } catch (...) {
      std::error_code ec;
      for (const auto& p : written) fs::remove(p, ec);
      throw;
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

std::string curve_file(const std::string& model, const char* kind) {
  std::string name;
  for (char ch : model) name.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
  return name + "." + kind + ".csv";
}

void add_report(Outputs& out, const app::PipelineConfig& cfg, const eval::EvalReport& report) {
  const fs::path dir = cfg.output.dir;
  out.add(dir / cfg.output.report, eval::to_json(report).dump(2) + "\n");
  out.add(dir / cfg.output.table, eval::format_table(report));
  if (cfg.output.curves) {
    for (const auto& r : report.rows) {
      out.add(dir / "curves" / curve_file(r.model, "roc"), eval::format_curve(r.roc, eval::CurveKind::roc));
      out.add(dir / "curves" / curve_file(r.model, "pr"), eval::format_curve(r.pr, eval::CurveKind::pr));
    }
  }
}

std::pair<data::Table, data::Table> load_inputs(const app::PipelineConfig& cfg, const std::string& app_path,
                                                const std::string& credit_path) {
  return app::run_stage("load", ErrorKind::data,
                        [&] { return data::load_tables(app_path, credit_path, cfg.schema.id); });
}

int cmd_synth(std::size_t rows, double imbalance, const Common& c) {
  app::SynthConfig s;
  s.rows = rows;
  s.imbalance = imbalance;
  if (c.seed) s.seed = *c.seed;
  if (!c.config.empty()) s.performance_months = app::load_config(c.config).label.performance_months;
  const auto d = app::synth(s);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  std::ostringstream a, cr;
  data::write_csv(a, d.application);
  data::write_csv(cr, d.credit);
  Outputs out;
  out.add(dir / "application.csv", a.str());
  out.add(dir / "credit.csv", cr.str());
  out.commit();
  std::printf("wrote %zu applicants (%zu credit rows) to %s\n", d.application.row_count(), d.credit.row_count(),
              dir.string().c_str());
  return 0;
}

int cmd_train(const Common& c, const std::string& app_path, const std::string& credit_path) {
  const auto cfg = resolve_config(c);
  const auto [app_table, credit] = load_inputs(cfg, app_path, credit_path);
  const auto result = app::train_pipeline(cfg, app_table, credit);
  Outputs out;
  add_report(out, cfg, result.report);
  out.add(fs::path(cfg.output.dir) / cfg.output.artifact, app::serialize(result.model));
  if (!result.searches.empty()) {
    app::json s = app::json::array();
    for (const auto& r : result.searches) s.push_back(app::to_json(r));
    out.add(fs::path(cfg.output.dir) / "search.json", s.dump(2) + "\n");
  }
  out.commit();
  std::fputs(eval::format_table(result.report).c_str(), stdout);
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& model_path, const std::string& app_path,
                 const std::string& credit_path) {
  const auto model = app::load_artifact(model_path);
  app::PipelineConfig cfg = model.config;
  if (c.threshold) cfg.threshold = *c.threshold;
  if (c.threads) cfg.threads = *c.threads;
  if (!c.out.empty()) cfg.output.dir = c.out;
  app::validate(cfg);
  const auto [app_table, credit] = load_inputs(cfg, app_path, credit_path);
  const auto report = app::evaluate_pipeline(model, app_table, credit, cfg.threshold, cfg.threads);
  if (!c.out.empty()) {
    Outputs out;
    add_report(out, cfg, report);
    out.commit();
  }
  std::fputs(eval::format_table(report).c_str(), stdout);
  return 0;
}

int cmd_predict(const Common& c, const std::string& model_path, const std::string& app_path,
                const std::string& credit_path) {
  const auto model = app::load_artifact(model_path);
  const double threshold = c.threshold.value_or(model.config.threshold);
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("threshold must be in (0, 1)");
  const auto [app_table, credit] = load_inputs(model.config, app_path, credit_path);
  const auto preds = app::predict_pipeline(model, app_table, credit, threshold, c.threads.value_or(1));
  std::string csv = model.config.schema.id + ",probability,decision\n";
  char buf[64];
  for (const auto& p : preds) {
    std::snprintf(buf, sizeof buf, ",%.17g,%d\n", p.probability, p.decision);
    csv += data::quote_csv(p.id) + buf;
  }
  if (c.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    Outputs out;
    out.add(c.out, csv);
    out.commit();
  }
  return 0;
}

int cmd_tune(const Common& c, const std::string& app_path, const std::string& credit_path) {
  auto cfg = resolve_config(c);
  const auto [app_table, credit] = load_inputs(cfg, app_path, credit_path);
  // Tuning reuses the training protocol up to the feature matrix.
  const auto ld = app::label_applicants(cfg, app_table, credit);
  const auto drop = data::drop_high_missing(ld.application, cfg.drop_threshold);
  const auto split = data::split(drop.table.row_count(), cfg.test_fraction, derive_seed(cfg.seed, SeedStream::split));
  const auto prep = app::fit_preprocessor(cfg, drop.table, split.train);
  const auto x = app::transform(prep, drop.table.select_rows(split.train));
  const auto tuned = app::run_stage("search", ErrorKind::training, [&] {
    return app::tune_learners(cfg, x.features.values, ld.labels.select(split.train));
  });
  app::json j;
  j["searches"] = app::json::array();
  for (const auto& r : tuned.searches) j["searches"].push_back(app::to_json(r));
  j["learners"] = app::json::array();
  for (const auto& l : tuned.learners) j["learners"].push_back(app::learner_to_json(l));
  Outputs out;
  out.add(fs::path(cfg.output.dir) / "search.json", j.dump(2) + "\n");
  out.commit();
  for (const auto& r : tuned.searches) {
    std::printf("%-12s best trial %3d  cv auc %.4f  %s\n", r.learner.c_str(), r.best_trial, r.best_score,
                r.trials[std::size_t(r.best_trial)].params.dump().c_str());
  }
  return 0;
}

int cmd_profile(const Common& c, const std::string& app_path, const std::string& credit_path,
                const std::vector<std::string>& by) {
  const auto cfg = resolve_config(c);
  const auto [app_table, credit] = load_inputs(cfg, app_path, credit_path);
  const auto ld = app::label_applicants(cfg, app_table, credit);
  std::printf("applicants %zu  with history %zu  merged rows %zu  positives %zu (%.4f)\n", ld.input_rows,
              ld.labels.size(), ld.merged_rows, ld.labels.positive_count(),
              double(ld.labels.positive_count()) / double(ld.labels.size()));
  std::printf("\nmissing values\n");
  for (const auto& m : data::missingness(ld.application)) {
    std::printf("  %-24s %8zu  %.4f%s\n", m.column.c_str(), m.missing, m.fraction,
                m.fraction > cfg.drop_threshold ? "  (dropped)" : "");
  }
  std::vector<std::string> groups = by;
  if (groups.empty()) {
    for (const auto& col : ld.application.columns()) {
      if (col.kind == data::ColumnKind::categorical) groups.push_back(col.name);
    }
  }
  app::json j = app::json::object();
  for (const auto& g : groups) {
    std::printf("\n%s\n", g.c_str());
    app::json rows = app::json::array();
    for (const auto& r : data::profile(ld.application, {g}, &ld.labels)) {
      std::printf("  %-32s %8zu  bad %6zu  rate %.4f\n", r.group[0].empty() ? "(missing)" : r.group[0].c_str(),
                  r.count, r.positives, r.label_rate);
      rows.push_back({{"value", r.group[0]}, {"count", r.count}, {"positives", r.positives}, {"rate", r.label_rate}});
    }
    j[g] = rows;
  }
  if (!c.out.empty()) {
    Outputs out;
    out.add(fs::path(c.out) / "profile.json", j.dump(2) + "\n");
    out.commit();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Credit-card approval pipeline"};
  cli.require_subcommand(1);
  Common common;
  const auto add_common = [&](CLI::App* sub, bool model_config) {
    if (model_config) sub->add_option("--config", common.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Master seed");
    sub->add_option("--out", common.out, "Output directory (predict: output file)");
    sub->add_option("--threshold", common.threshold, "Decision threshold in (0, 1)");
    sub->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
  };
  std::string app_path, credit_path, model_path;
  const auto add_inputs = [&](CLI::App* sub) {
    sub->add_option("--app", app_path, "Application CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--credit", credit_path, "Credit-history CSV")->required()->check(CLI::ExistingFile);
  };

  std::size_t rows = 20000;
  double imbalance = 0.05;
  auto* synth = cli.add_subcommand("synth", "Generate a planted-structure synthetic dataset");
  synth->add_option("--rows", rows, "Applicants (>= 100)");
  synth->add_option("--imbalance", imbalance, "Positive fraction in (0, 0.5)");
  add_common(synth, true);

  auto* train = cli.add_subcommand("train", "Train all models, evaluate on the test split, write the artifact");
  add_common(train, true);
  add_inputs(train);

  auto* evaluate = cli.add_subcommand("evaluate", "Evaluate a trained artifact on labelled data");
  add_common(evaluate, false);
  evaluate->add_option("--model", model_path, "Artifact file")->required()->check(CLI::ExistingFile);
  add_inputs(evaluate);

  auto* predict = cli.add_subcommand("predict", "Score applicants with a trained artifact");
  add_common(predict, false);
  predict->add_option("--model", model_path, "Artifact file")->required()->check(CLI::ExistingFile);
  add_inputs(predict);

  auto* tune = cli.add_subcommand("tune", "Random hyperparameter search on the training split");
  add_common(tune, true);
  add_inputs(tune);

  std::vector<std::string> by;
  auto* profile = cli.add_subcommand("profile", "Label rates and missingness per applicant attribute");
  add_common(profile, true);
  add_inputs(profile);
  profile->add_option("--by", by, "Categorical columns to group by (default: all)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) return cmd_synth(rows, imbalance, common);
    if (*train) return cmd_train(common, app_path, credit_path);
    if (*evaluate) return cmd_evaluate(common, model_path, app_path, credit_path);
    if (*predict) return cmd_predict(common, model_path, app_path, credit_path);
    if (*tune) return cmd_tune(common, app_path, credit_path);
    if (*profile) return cmd_profile(common, app_path, credit_path, by);
  } catch (const Error& e) {
    std::fprintf(stderr, "ccap: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ccap: training failed: %s\n", e.what());
    return static_cast<int>(ErrorKind::training);
  }
  return 1;
}
