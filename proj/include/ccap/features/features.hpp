#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ccap/data/encode.hpp"
#include "ccap/data/table.hpp"

namespace ccap::features {

using data::ColumnMeta;
using data::Encoding;
using data::FeatureMatrix;

struct FeatureRecipe {
  std::vector<std::pair<std::string, std::string>> interaction_pairs{{"AMT_INCOME_TOTAL", "tsld"}};
  int polynomial_degree = 2;  // 1 = no expansion
  bool temporal_enabled = true;
};

inline std::string interaction_name(const std::string& a, const std::string& b) {
  return "inter:" + a + "*" + b;
}

// Appends x_a * x_b for each pair.
inline FeatureMatrix add_interactions(FeatureMatrix m,
                                      const std::vector<std::pair<std::string, std::string>>& pairs) {
  for (const auto& [a, b] : pairs) {
    const auto ja = m.index_of(a);
    const auto jb = m.index_of(b);
    if (!ja || !jb) throw DataError("interaction references unknown column '" + (ja ? b : a) + "'");
    std::vector<double> col(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) col[r] = m.values(r, *ja) * m.values(r, *jb);
    m.append_column({interaction_name(a, b), a, Encoding::engineered, {}, {a, b}}, col);
  }
  return m;
}

// Squares every raw or scaled column; indicators and engineered columns are
// left alone (x^2 = x for a 0/1 indicator).
inline FeatureMatrix add_polynomial(FeatureMatrix m, int degree = 2) {
  if (degree != 1 && degree != 2) throw UsageError("polynomial degree must be 1 or 2");
  if (degree == 1) return m;
  std::vector<std::size_t> eligible;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (m.meta[j].encoding == Encoding::raw || m.meta[j].encoding == Encoding::scaled) eligible.push_back(j);
  }
  for (std::size_t j : eligible) {
    std::vector<double> col(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) col[r] = m.values(r, j) * m.values(r, j);
    const std::string name = m.meta[j].name;
    m.append_column({"sq:" + name, m.meta[j].source, Encoding::engineered, {}, {name}}, col);
  }
  return m;
}

inline FeatureMatrix apply_recipe(FeatureMatrix m, const FeatureRecipe& recipe) {
  m = add_interactions(std::move(m), recipe.interaction_pairs);
  return add_polynomial(std::move(m), recipe.polynomial_degree);
}

// Indices of engineered columns, in order.
inline std::vector<std::size_t> engineered_columns(const FeatureMatrix& m) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (m.meta[j].encoding == Encoding::engineered) out.push_back(j);
  }
  return out;
}

struct TemporalConfig {
  std::string months_column = "MONTHS_BALANCE";
  std::string status_column = "STATUS";
  std::vector<std::string> default_tokens{"2", "3", "4", "5"};
  int window = 18;  // months observed; "never defaulted" maps to window + 1
};

// Months elapsed since each ID's most recent default, counting only defaults
// inside the window [-(window - 1), 0]. IDs without one get window + 1.
inline std::map<std::string, double> time_since_last_default(const data::Table& credit,
                                                             const TemporalConfig& cfg) {
  const data::Column* id = credit.identifier();
  if (id == nullptr) throw DataError("credit table has no identifier column");
  const data::Column& months = credit.column(cfg.months_column);
  const data::Column& status = credit.column(cfg.status_column);
  if (months.kind != data::ColumnKind::numeric) {
    throw DataError("month column '" + cfg.months_column + "' is not numeric");
  }

  const double sentinel = double(cfg.window + 1);
  std::map<std::string, double> out;
  for (std::size_t r = 0; r < credit.row_count(); ++r) {
    if (!id->tokens[r]) continue;
    auto [it, inserted] = out.try_emplace(*id->tokens[r], sentinel);
    if (!months.numbers[r]) continue;
    const double elapsed = 0.0 - std::round(*months.numbers[r]);
    if (elapsed < 0 || elapsed >= cfg.window) continue;
    const std::string token = status.text(r);
    if (std::find(cfg.default_tokens.begin(), cfg.default_tokens.end(), token) == cfg.default_tokens.end()) {
      continue;
    }
    it->second = std::min(it->second, elapsed);
  }
  return out;
}

// Adds the per-ID temporal feature to an applicant table as numeric column
// `name`. Applicants without credit history get the sentinel.
inline data::Table attach_temporal(const data::Table& app, const std::map<std::string, double>& tsld,
                                   int window, const std::string& name = "tsld") {
  const data::Column* id = app.identifier();
  if (id == nullptr) throw DataError("application table has no identifier column");
  std::vector<std::optional<double>> values(app.row_count(), double(window + 1));
  for (std::size_t r = 0; r < app.row_count(); ++r) {
    if (!id->tokens[r]) continue;
    auto it = tsld.find(*id->tokens[r]);
    if (it != tsld.end()) values[r] = it->second;
  }
  data::Table out = app;
  out.add_column(data::Column::numeric(name, std::move(values)));
  return out;
}

}  // namespace ccap::features
