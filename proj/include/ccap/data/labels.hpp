#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccap/data/table.hpp"

namespace ccap::data {

// Binary target: 1 = bad credit (reject), 0 = good credit (approve).
class Labels {
 public:
  Labels() = default;
  explicit Labels(std::vector<int> values) : values_(std::move(values)) {
    for (int v : values_) {
      if (v != 0 && v != 1) throw DataError("labels must be 0 or 1, got " + std::to_string(v));
      positives_ += static_cast<std::size_t>(v);
    }
  }

  std::size_t size() const { return values_.size(); }
  int operator[](std::size_t i) const { return values_[i]; }
  const std::vector<int>& values() const { return values_; }
  std::size_t positive_count() const { return positives_; }
  std::size_t negative_count() const { return values_.size() - positives_; }
  bool has_both_classes() const { return positives_ > 0 && positives_ < values_.size(); }

  Labels select(std::span<const std::size_t> rows) const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(values_[r]);
    return Labels(std::move(out));
  }

  friend bool operator==(const Labels&, const Labels&) = default;

 private:
  std::vector<int> values_;
  std::size_t positives_ = 0;
};

// How the credit-history status tokens map to a label. Months are
// non-positive integers with 0 the most recent month.
struct LabelPolicy {
  std::string status_column = "STATUS";
  std::string months_column = "MONTHS_BALANCE";
  std::vector<std::string> alphabet{"0", "1", "2", "3", "4", "5", "C", "X"};
  std::vector<std::string> bad_tokens{"2", "3", "4", "5"};
  // When > 0 only the most recent `performance_months` months decide the
  // label and older months form the observation window for features.
  // 0 means the whole history decides the label.
  int performance_months = 0;
};

struct IdLabels {
  std::vector<std::string> ids;  // first-appearance order in the credit table
  Labels labels;
};

namespace detail {

inline int month_of(const Column& months, std::size_t r) {
  if (months.kind != ColumnKind::numeric || !months.numbers[r]) {
    throw DataError("month column '" + months.name + "' has a missing or non-numeric value at row " +
                    std::to_string(r + 1));
  }
  return static_cast<int>(std::lround(*months.numbers[r]));
}

}  // namespace detail

inline IdLabels derive_label(const Table& credit, const LabelPolicy& policy) {
  const Column* id = credit.identifier();
  if (id == nullptr) throw DataError("credit table has no identifier column");
  const Column& status = credit.column(policy.status_column);
  const Column* months = policy.performance_months > 0 ? &credit.column(policy.months_column) : nullptr;

  std::unordered_map<std::string, std::size_t> slot;
  IdLabels out;
  std::vector<int> values;
  for (std::size_t r = 0; r < credit.row_count(); ++r) {
    if (!id->tokens[r]) continue;
    const std::string token = status.text(r);
    if (std::find(policy.alphabet.begin(), policy.alphabet.end(), token) == policy.alphabet.end()) {
      throw DataError("unknown status token '" + token + "' at credit row " + std::to_string(r + 1));
    }
    auto [it, inserted] = slot.try_emplace(*id->tokens[r], out.ids.size());
    if (inserted) {
      out.ids.push_back(*id->tokens[r]);
      values.push_back(0);
    }
    if (months != nullptr && detail::month_of(*months, r) <= -policy.performance_months) continue;
    if (std::find(policy.bad_tokens.begin(), policy.bad_tokens.end(), token) != policy.bad_tokens.end()) {
      values[it->second] = 1;
    }
  }
  out.labels = Labels(std::move(values));
  return out;
}

// Credit rows older than the performance window, with months shifted so the
// most recent observation month is 0. Returns the table unchanged when the
// policy has no performance window.
inline Table observation_window(const Table& credit, const LabelPolicy& policy) {
  if (policy.performance_months <= 0) return credit;
  const Column& months = credit.column(policy.months_column);
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < credit.row_count(); ++r) {
    if (detail::month_of(months, r) <= -policy.performance_months) keep.push_back(r);
  }
  Table out = credit.select_rows(keep);
  Column shifted = out.column(policy.months_column);
  for (auto& m : shifted.numbers) *m += policy.performance_months;
  out.replace_column(std::move(shifted));
  return out;
}

}  // namespace ccap::data
