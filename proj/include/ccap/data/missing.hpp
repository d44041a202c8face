#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ccap/data/table.hpp"

namespace ccap::data {

struct DropResult {
  Table table;
  std::vector<std::string> dropped;
};

// Removes every non-identifier column whose missing fraction is strictly
// greater than `threshold`.
inline DropResult drop_high_missing(const Table& t, double threshold = 0.30) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw UsageError("missing-value drop threshold must be in (0, 1]");
  }
  DropResult out;
  for (const auto& c : t.columns()) {
    const double frac = t.row_count() == 0 ? 0.0 : double(c.missing_count()) / double(t.row_count());
    if (c.kind != ColumnKind::identifier && frac > threshold) {
      out.dropped.push_back(c.name);
    } else {
      out.table.add_column(c);
    }
  }
  return out;
}

enum class NumericImpute { mean, median };

// Per-column fill values fitted on a row subset.
struct ImputerParams {
  struct Fill {
    std::string column;
    ColumnKind kind = ColumnKind::numeric;
    double number = 0.0;
    std::string category;
  };
  std::vector<Fill> fills;
};

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Statistics come from the non-missing cells of `fit_rows` only. Mode ties go
// to the lexicographically smallest category.
inline ImputerParams fit_imputer(const Table& t, std::span<const std::size_t> fit_rows,
                                 NumericImpute numeric = NumericImpute::mean) {
  ImputerParams params;
  for (const auto& c : t.columns()) {
    if (c.kind == ColumnKind::identifier) continue;
    ImputerParams::Fill fill;
    fill.column = c.name;
    fill.kind = c.kind;
    if (c.kind == ColumnKind::numeric) {
      std::vector<double> seen;
      for (auto r : fit_rows) {
        if (c.numbers[r]) seen.push_back(*c.numbers[r]);
      }
      if (seen.empty()) throw DataError("column '" + c.name + "' is entirely missing; cannot impute");
      fill.number = numeric == NumericImpute::mean
                        ? std::accumulate(seen.begin(), seen.end(), 0.0) / double(seen.size())
                        : median_of(std::move(seen));
    } else {
      std::map<std::string, std::size_t> counts;
      for (auto r : fit_rows) {
        if (c.tokens[r]) ++counts[*c.tokens[r]];
      }
      if (counts.empty()) throw DataError("column '" + c.name + "' is entirely missing; cannot impute");
      std::size_t best = 0;
      for (const auto& [cat, n] : counts) {
        if (n > best) {
          best = n;
          fill.category = cat;
        }
      }
    }
    params.fills.push_back(std::move(fill));
  }
  return params;
}

inline Table apply_imputer(const Table& t, const ImputerParams& params) {
  Table out = t;
  for (const auto& fill : params.fills) {
    const Column* src = t.find(fill.column);
    if (src == nullptr) throw DataError("imputer expects column '" + fill.column + "'");
    Column c = *src;
    if (c.kind != fill.kind) throw DataError("column '" + fill.column + "' changed kind since fitting");
    if (c.kind == ColumnKind::numeric) {
      for (auto& v : c.numbers) {
        if (!v) v = fill.number;
      }
    } else {
      for (auto& v : c.tokens) {
        if (!v) v = fill.category;
      }
    }
    out.replace_column(std::move(c));
  }
  return out;
}

// Fit on every row and apply.
inline Table impute(const Table& t, NumericImpute numeric = NumericImpute::mean) {
  std::vector<std::size_t> all(t.row_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return apply_imputer(t, fit_imputer(t, all, numeric));
}

struct MissingSummary {
  std::string column;
  std::size_t missing = 0;
  double fraction = 0.0;
};

inline std::vector<MissingSummary> missingness(const Table& t) {
  std::vector<MissingSummary> out;
  for (const auto& c : t.columns()) {
    const std::size_t m = c.missing_count();
    out.push_back({c.name, m, t.row_count() ? double(m) / double(t.row_count()) : 0.0});
  }
  return out;
}

}  // namespace ccap::data
