#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ccap/core/error.hpp"

namespace ccap::data {

enum class ColumnKind { numeric, categorical, identifier };

inline const char* to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::identifier: return "identifier";
  }
  return "?";
}

// A column stores typed cells; std::nullopt is the missing marker. Numeric
// columns use `numbers`, categorical and identifier columns use `tokens`.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  std::vector<std::optional<double>> numbers;
  std::vector<std::optional<std::string>> tokens;

  static Column numeric(std::string name, std::vector<std::optional<double>> values) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::numeric;
    c.numbers = std::move(values);
    return c;
  }

  static Column categorical(std::string name, std::vector<std::optional<std::string>> values,
                            ColumnKind kind = ColumnKind::categorical) {
    Column c;
    c.name = std::move(name);
    c.kind = kind;
    c.tokens = std::move(values);
    return c;
  }

  std::size_t size() const { return kind == ColumnKind::numeric ? numbers.size() : tokens.size(); }

  bool missing(std::size_t r) const {
    return kind == ColumnKind::numeric ? !numbers[r].has_value() : !tokens[r].has_value();
  }

  std::size_t missing_count() const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < size(); ++r) n += missing(r) ? 1 : 0;
    return n;
  }

  // Cell as text, "" when missing.
  std::string text(std::size_t r) const;

  Column select(std::span<const std::size_t> rows) const {
    Column out;
    out.name = name;
    out.kind = kind;
    if (kind == ColumnKind::numeric) {
      out.numbers.reserve(rows.size());
      for (auto r : rows) out.numbers.push_back(numbers[r]);
    } else {
      out.tokens.reserve(rows.size());
      for (auto r : rows) out.tokens.push_back(tokens[r]);
    }
    return out;
  }
};

inline std::string format_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::string Column::text(std::size_t r) const {
  if (missing(r)) return {};
  return kind == ColumnKind::numeric ? format_number(*numbers[r]) : *tokens[r];
}

inline std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

class Table {
 public:
  Table() = default;

  std::size_t row_count() const { return rows_; }
  std::size_t column_count() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }

  void add_column(Column column) {
    if (find(column.name) != nullptr) throw DataError("duplicate column name '" + column.name + "'");
    if (columns_.empty()) {
      rows_ = column.size();
    } else if (column.size() != rows_) {
      throw DataError("column '" + column.name + "' has " + std::to_string(column.size()) +
                      " cells, table has " + std::to_string(rows_) + " rows");
    }
    columns_.push_back(std::move(column));
  }

  void replace_column(Column column) {
    for (auto& c : columns_) {
      if (c.name == column.name) {
        if (column.size() != rows_) throw DataError("replacement column '" + column.name + "' has wrong length");
        c = std::move(column);
        return;
      }
    }
    throw DataError("no column named '" + column.name + "'");
  }

  void remove_column(const std::string& name) {
    std::erase_if(columns_, [&](const Column& c) { return c.name == name; });
  }

  const Column* find(std::string_view name) const {
    for (const auto& c : columns_) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  const Column& column(std::string_view name) const {
    const Column* c = find(name);
    if (c == nullptr) throw DataError("no column named '" + std::string(name) + "'");
    return *c;
  }

  // The identifier column, or nullptr when the table has none.
  const Column* identifier() const {
    for (const auto& c : columns_) {
      if (c.kind == ColumnKind::identifier) return &c;
    }
    return nullptr;
  }

  Table select_rows(std::span<const std::size_t> rows) const {
    Table out;
    out.rows_ = rows.size();
    for (const auto& c : columns_) out.columns_.push_back(c.select(rows));
    return out;
  }

 private:
  std::vector<Column> columns_;
  std::size_t rows_ = 0;
};

// ---------------------------------------------------------------------------
// CSV

// Splits one CSV record. Supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

// Builds a table from raw string cells, inferring column kinds: the column
// named `id_column` is the identifier, a column whose non-empty cells all
// parse as numbers is numeric, anything else is categorical. Empty strings
// become missing markers.
inline Table infer_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows, const std::string& id_column,
                         const std::string& source = "<memory>") {
  std::unordered_set<std::string> seen;
  bool has_id = false;
  for (const auto& h : header) {
    if (!seen.insert(h).second) throw DataError(source + ": duplicate column '" + h + "' in header");
    has_id = has_id || h == id_column;
  }
  if (!id_column.empty() && !has_id) {
    throw DataError(source + ": missing identifier column '" + id_column + "'");
  }

  Table table;
  for (std::size_t c = 0; c < header.size(); ++c) {
    bool numeric = header[c] != id_column;
    for (std::size_t r = 0; r < rows.size() && numeric; ++r) {
      const auto& cell = rows[r][c];
      if (!cell.empty() && !parse_number(cell)) numeric = false;
    }
    if (numeric) {
      std::vector<std::optional<double>> values(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) values[r] = parse_number(rows[r][c]);
      table.add_column(Column::numeric(header[c], std::move(values)));
    } else {
      std::vector<std::optional<std::string>> values(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r][c].empty()) values[r] = rows[r][c];
      }
      const auto kind = header[c] == id_column ? ColumnKind::identifier : ColumnKind::categorical;
      table.add_column(Column::categorical(header[c], std::move(values), kind));
    }
  }
  return table;
}

inline Table read_csv(std::istream& in, const std::string& id_column, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file, expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);

  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(source + ":" + std::to_string(line_no) + ": ragged row, expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }
  return infer_table(header, rows, id_column, source);
}

inline Table load_table(const std::string& path, const std::string& id_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read '" + path + "'");
  return read_csv(in, id_column, path);
}

inline std::pair<Table, Table> load_tables(const std::string& app_path, const std::string& credit_path,
                                           const std::string& id_column) {
  return {load_table(app_path, id_column), load_table(credit_path, id_column)};
}

inline void write_csv(std::ostream& out, const Table& t) {
  const auto& cols = t.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << quote_csv(cols[c].name);
  out << '\n';
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << quote_csv(cols[c].text(r));
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out, t);
}

}  // namespace ccap::data
