#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "ccap/core/matrix.hpp"
#include "ccap/data/table.hpp"

namespace ccap::data {

enum class Encoding { raw, onehot, scaled, engineered };

inline const char* to_string(Encoding e) {
  switch (e) {
    case Encoding::raw: return "raw";
    case Encoding::onehot: return "onehot";
    case Encoding::scaled: return "scaled";
    case Encoding::engineered: return "engineered";
  }
  return "?";
}

struct ColumnMeta {
  std::string name;    // unique column name, e.g. "CODE_GENDER=F" or "sq:AMT_INCOME_TOTAL"
  std::string source;  // originating table column
  Encoding encoding = Encoding::raw;
  std::string category;              // onehot only
  std::vector<std::string> parents;  // engineered only
};

// Dense numeric design matrix plus per-column provenance.
struct FeatureMatrix {
  Matrix values;
  std::vector<ColumnMeta> meta;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t j = 0; j < meta.size(); ++j) {
      if (meta[j].name == name) return j;
    }
    return std::nullopt;
  }

  std::size_t require(std::string_view name) const {
    auto j = index_of(name);
    if (!j) throw DataError("feature matrix has no column '" + std::string(name) + "'");
    return *j;
  }

  // Columns that are not one-hot indicators: the "dense" block.
  std::vector<std::size_t> dense_columns() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < meta.size(); ++j) {
      if (meta[j].encoding != Encoding::onehot) out.push_back(j);
    }
    return out;
  }

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const {
    return {values.select_rows(rows), meta};
  }

  void append_column(ColumnMeta m, std::span<const double> column) {
    if (column.size() != rows()) throw DataError("appended column has the wrong length");
    Matrix next(rows(), cols() + 1);
    for (std::size_t r = 0; r < rows(); ++r) {
      auto src = values.row(r);
      auto dst = next.row(r);
      std::copy(src.begin(), src.end(), dst.begin());
      dst[cols()] = column[r];
    }
    values = std::move(next);
    meta.push_back(std::move(m));
  }

  bool all_finite() const {
    return std::all_of(values.data().begin(), values.data().end(), [](double v) { return std::isfinite(v); });
  }
};

// Training-time vocabularies, sorted lexicographically.
struct OneHotVocabulary {
  struct Entry {
    std::string column;
    std::vector<std::string> categories;
  };
  std::vector<Entry> entries;

  const Entry* find(std::string_view column) const {
    for (const auto& e : entries) {
      if (e.column == column) return &e;
    }
    return nullptr;
  }
};

inline OneHotVocabulary fit_vocabulary(const Table& t, std::span<const std::size_t> fit_rows) {
  OneHotVocabulary vocab;
  for (const auto& c : t.columns()) {
    if (c.kind != ColumnKind::categorical) continue;
    std::set<std::string> cats;
    for (auto r : fit_rows) {
      if (c.tokens[r]) cats.insert(*c.tokens[r]);
    }
    vocab.entries.push_back({c.name, {cats.begin(), cats.end()}});
  }
  return vocab;
}

// Numeric columns pass through as raw; each categorical column expands to one
// indicator per vocabulary entry. Categories unseen at fit time encode as an
// all-zero block. Identifier columns are skipped.
inline FeatureMatrix transform_one_hot(const Table& t, const OneHotVocabulary& vocab) {
  std::vector<ColumnMeta> meta;
  for (const auto& c : t.columns()) {
    if (c.kind == ColumnKind::numeric) {
      meta.push_back({c.name, c.name, Encoding::raw, {}, {}});
    } else if (c.kind == ColumnKind::categorical) {
      const auto* entry = vocab.find(c.name);
      if (entry == nullptr) throw DataError("no vocabulary for categorical column '" + c.name + "'");
      for (const auto& cat : entry->categories) {
        meta.push_back({c.name + "=" + cat, c.name, Encoding::onehot, cat, {}});
      }
    }
  }

  FeatureMatrix out{Matrix(t.row_count(), meta.size()), std::move(meta)};
  std::size_t j = 0;
  for (const auto& c : t.columns()) {
    if (c.kind == ColumnKind::numeric) {
      for (std::size_t r = 0; r < t.row_count(); ++r) {
        if (!c.numbers[r]) {
          throw DataError("column '" + c.name + "' has a missing value at row " + std::to_string(r + 1) +
                          "; impute before encoding");
        }
        out.values(r, j) = *c.numbers[r];
      }
      ++j;
    } else if (c.kind == ColumnKind::categorical) {
      const auto& cats = vocab.find(c.name)->categories;
      for (std::size_t r = 0; r < t.row_count(); ++r) {
        if (!c.tokens[r]) continue;
        auto it = std::lower_bound(cats.begin(), cats.end(), *c.tokens[r]);
        if (it != cats.end() && *it == *c.tokens[r]) out.values(r, j + std::size_t(it - cats.begin())) = 1.0;
      }
      j += cats.size();
    }
  }
  return out;
}

inline FeatureMatrix one_hot(const Table& t, std::span<const std::size_t> fit_rows) {
  return transform_one_hot(t, fit_vocabulary(t, fit_rows));
}

// Integer category ids for embedding lookup: one column per categorical
// column, vocabulary index or vocabulary size for unseen/missing values.
inline IdMatrix category_ids(const Table& t, const OneHotVocabulary& vocab) {
  IdMatrix ids(t.row_count(), vocab.entries.size());
  for (std::size_t k = 0; k < vocab.entries.size(); ++k) {
    const auto& entry = vocab.entries[k];
    const Column& c = t.column(entry.column);
    for (std::size_t r = 0; r < t.row_count(); ++r) {
      std::int32_t id = static_cast<std::int32_t>(entry.categories.size());
      if (c.tokens[r]) {
        auto it = std::lower_bound(entry.categories.begin(), entry.categories.end(), *c.tokens[r]);
        if (it != entry.categories.end() && *it == *c.tokens[r]) {
          id = static_cast<std::int32_t>(it - entry.categories.begin());
        }
      }
      ids(r, k) = id;
    }
  }
  return ids;
}

// Embedding table sizes matching category_ids (one extra slot for unseen).
inline std::vector<std::size_t> category_cardinalities(const OneHotVocabulary& vocab) {
  std::vector<std::size_t> out;
  for (const auto& e : vocab.entries) out.push_back(e.categories.size() + 1);
  return out;
}

// ---------------------------------------------------------------------------
// Standardization

struct ScalerParams {
  struct Entry {
    std::string column;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    bool constant() const { return std == 0.0; }
  };
  std::vector<Entry> entries;

  std::vector<std::string> constant_columns() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
      if (e.constant()) out.push_back(e.column);
    }
    return out;
  }
};

// Fits mean and population std of `columns` on `fit_rows`.
inline ScalerParams fit_scaler(const FeatureMatrix& m, std::span<const std::size_t> fit_rows,
                               std::span<const std::size_t> columns) {
  ScalerParams params;
  for (std::size_t j : columns) {
    double mean = 0.0;
    for (auto r : fit_rows) mean += m.values(r, j);
    mean = fit_rows.empty() ? 0.0 : mean / double(fit_rows.size());
    double var = 0.0;
    for (auto r : fit_rows) {
      const double d = m.values(r, j) - mean;
      var += d * d;
    }
    var = fit_rows.empty() ? 0.0 : var / double(fit_rows.size());
    double sd = std::sqrt(var);
    // Columns constant up to rounding are treated as constant.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) sd = 0.0;
    params.entries.push_back({m.meta[j].name, mean, sd});
  }
  return params;
}

// x' = (x - mean) / std; constant columns map to zero.
inline FeatureMatrix apply_scaler(FeatureMatrix m, const ScalerParams& params) {
  for (const auto& e : params.entries) {
    const std::size_t j = m.require(e.column);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      m.values(r, j) = e.constant() ? 0.0 : (m.values(r, j) - e.mean) / e.std;
    }
    if (m.meta[j].encoding == Encoding::raw) m.meta[j].encoding = Encoding::scaled;
  }
  return m;
}

struct Standardized {
  FeatureMatrix matrix;
  ScalerParams params;
};

// Standardizes every non-indicator column, fitting on `fit_rows` and applying
// to all rows.
inline Standardized standardize(const FeatureMatrix& m, std::span<const std::size_t> fit_rows) {
  const auto cols = m.dense_columns();
  auto params = fit_scaler(m, fit_rows, cols);
  return {apply_scaler(m, params), std::move(params)};
}

inline Standardized standardize(const FeatureMatrix& m, std::span<const std::size_t> fit_rows,
                                std::span<const std::size_t> columns) {
  auto params = fit_scaler(m, fit_rows, columns);
  return {apply_scaler(m, params), std::move(params)};
}

}  // namespace ccap::data
