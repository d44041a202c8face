#pragma once

#include <map>
#include <string>
#include <vector>

#include "ccap/data/labels.hpp"
#include "ccap/data/table.hpp"

namespace ccap::data {

struct ProfileRow {
  std::vector<std::string> group;  // one value per group column; "" for missing
  std::size_t count = 0;
  std::size_t positives = 0;
  double label_rate = 0.0;
};

// Cross-tabulated counts (and label rates, when labels are given) per
// combination of categorical group columns, sorted by group values.
inline std::vector<ProfileRow> profile(const Table& t, const std::vector<std::string>& group_columns,
                                       const Labels* labels = nullptr) {
  std::vector<const Column*> cols;
  for (const auto& name : group_columns) {
    const Column& c = t.column(name);
    if (c.kind == ColumnKind::numeric) throw DataError("profile group column '" + name + "' is numeric");
    cols.push_back(&c);
  }
  if (labels != nullptr && labels->size() != t.row_count()) {
    throw DataError("profile: label count does not match table rows");
  }

  std::map<std::vector<std::string>, ProfileRow> groups;
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    std::vector<std::string> key;
    for (const Column* c : cols) key.push_back(c->text(r));
    auto& row = groups[key];
    row.group = key;
    ++row.count;
    if (labels != nullptr) row.positives += static_cast<std::size_t>((*labels)[r]);
  }

  std::vector<ProfileRow> out;
  for (auto& [key, row] : groups) {
    row.label_rate = double(row.positives) / double(row.count);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace ccap::data
