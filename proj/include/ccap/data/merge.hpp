#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ccap/data/table.hpp"

namespace ccap::data {

namespace detail {

inline const Column& require_identifier(const Table& t, const char* which) {
  const Column* id = t.identifier();
  if (id == nullptr) throw DataError(std::string(which) + " table has no identifier column");
  return *id;
}

}  // namespace detail

// Inner join on the identifier column. One output row per (application row,
// credit row) pair sharing an ID, ordered by application row and then by
// credit row. Output columns: ID, application columns, credit columns.
inline Table merge_on_id(const Table& app, const Table& credit) {
  const Column& app_id = detail::require_identifier(app, "application");
  const Column& credit_id = detail::require_identifier(credit, "credit");
  if (app_id.name != credit_id.name) {
    throw DataError("identifier columns differ: '" + app_id.name + "' vs '" + credit_id.name + "'");
  }
  for (const auto& c : credit.columns()) {
    if (c.kind != ColumnKind::identifier && app.find(c.name) != nullptr) {
      throw DataError("column '" + c.name + "' appears in both tables");
    }
  }

  std::unordered_map<std::string, std::vector<std::size_t>> credit_rows;
  for (std::size_t r = 0; r < credit.row_count(); ++r) {
    if (credit_id.tokens[r]) credit_rows[*credit_id.tokens[r]].push_back(r);
  }

  std::vector<std::size_t> left, right;
  for (std::size_t r = 0; r < app.row_count(); ++r) {
    if (!app_id.tokens[r]) continue;
    auto it = credit_rows.find(*app_id.tokens[r]);
    if (it == credit_rows.end()) continue;
    for (std::size_t cr : it->second) {
      left.push_back(r);
      right.push_back(cr);
    }
  }
  if (left.empty()) throw DataError("application and credit tables share no IDs");

  Table out;
  out.add_column(app_id.select(left));
  for (const auto& c : app.columns()) {
    if (c.kind != ColumnKind::identifier) out.add_column(c.select(left));
  }
  for (const auto& c : credit.columns()) {
    if (c.kind != ColumnKind::identifier) out.add_column(c.select(right));
  }
  return out;
}

// Number of rows merge_on_id would produce, without materializing them.
inline std::size_t merged_row_count(const Table& app, const Table& credit) {
  const Column& app_id = detail::require_identifier(app, "application");
  const Column& credit_id = detail::require_identifier(credit, "credit");
  std::unordered_map<std::string, std::size_t> multiplicity;
  for (const auto& id : credit_id.tokens) {
    if (id) ++multiplicity[*id];
  }
  std::size_t n = 0;
  for (const auto& id : app_id.tokens) {
    if (!id) continue;
    auto it = multiplicity.find(*id);
    if (it != multiplicity.end()) n += it->second;
  }
  return n;
}

// Application rows whose ID has at least one credit-history row: the
// applicant-level view of the inner join (one row per application record).
inline std::vector<std::size_t> rows_with_history(const Table& app, const Table& credit) {
  const Column& app_id = detail::require_identifier(app, "application");
  const Column& credit_id = detail::require_identifier(credit, "credit");
  std::unordered_set<std::string> ids;
  for (const auto& id : credit_id.tokens) {
    if (id) ids.insert(*id);
  }
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < app.row_count(); ++r) {
    if (app_id.tokens[r] && ids.count(*app_id.tokens[r])) rows.push_back(r);
  }
  return rows;
}

}  // namespace ccap::data
