#include "xai/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "xai/error.hpp"
#include "xai/format.hpp"

namespace xai {

std::string to_string(ColumnKind kind) {
  return kind == ColumnKind::numeric ? "numeric" : "categorical";
}

}  // namespace xai

namespace xai::data {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::uint8_t> to_mask(const std::vector<bool>& missing,
                                  std::size_t n) {
  std::vector<std::uint8_t> mask(n, 0);
  if (missing.empty()) return mask;
  if (missing.size() != n) {
    throw SchemaError("missing mask length differs from value count");
  }
  for (std::size_t i = 0; i < n; ++i) mask[i] = missing[i] ? 1 : 0;
  return mask;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Reads one RFC-4180 record. Returns false at end of input. `line` counts
// physical lines consumed so far.
bool read_record(std::istream& in, char delim, std::vector<std::string>& fields,
                 std::size_t& line) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  const std::size_t start_line = line + 1;
  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  for (;;) {
    const int ch = in.get();
    if (ch == std::char_traits<char>::eof()) {
      if (in_quotes) throw ParseError(start_line, "unterminated quoted field");
      fields.push_back(std::move(field));
      ++line;
      return true;
    }
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      if (!trim(field).empty() || was_quoted) {
        throw ParseError(line + 1, "unexpected quote inside unquoted field");
      }
      field.clear();
      in_quotes = true;
      was_quoted = true;
    } else if (c == delim) {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      ++line;
      return true;
    } else {
      if (was_quoted && c != ' ' && c != '\t') {
        throw ParseError(line + 1, "characters after closing quote");
      }
      if (!was_quoted) field += c;
    }
  }
}

}  // namespace

// --- Column ----------------------------------------------------------------

Column Column::numeric(std::string name, std::vector<double> values,
                       std::vector<bool> missing) {
  Column c;
  c.name_ = std::move(name);
  c.kind_ = ColumnKind::numeric;
  c.missing_ = to_mask(missing, values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) c.missing_[i] = 1;
    if (c.missing_[i]) values[i] = kNaN;
  }
  c.values_ = std::move(values);
  return c;
}

Column Column::categorical(std::string name, std::vector<std::string> cells,
                           std::vector<bool> missing) {
  Column c;
  c.name_ = std::move(name);
  c.kind_ = ColumnKind::categorical;
  c.missing_ = to_mask(missing, cells.size());
  c.values_.resize(cells.size(), kNaN);
  std::unordered_map<std::string, int> codes;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (c.missing_[i]) continue;
    auto [it, inserted] =
        codes.emplace(cells[i], static_cast<int>(c.levels_.size()));
    if (inserted) c.levels_.push_back(cells[i]);
    c.values_[i] = it->second;
  }
  return c;
}

Column Column::categorical_codes(std::string name,
                                 std::vector<std::string> levels,
                                 std::span<const int> codes) {
  Column c;
  c.name_ = std::move(name);
  c.kind_ = ColumnKind::categorical;
  c.levels_ = std::move(levels);
  c.values_.resize(codes.size(), kNaN);
  c.missing_.resize(codes.size(), 0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] < 0) {
      c.missing_[i] = 1;
    } else {
      if (static_cast<std::size_t>(codes[i]) >= c.levels_.size()) {
        throw SchemaError("column '" + c.name_ + "': level code out of range");
      }
      c.values_[i] = codes[i];
    }
  }
  return c;
}

std::size_t Column::missing_count() const {
  return static_cast<std::size_t>(
      std::count(missing_.begin(), missing_.end(), std::uint8_t{1}));
}

int Column::code(std::size_t row) const {
  return missing_[row] ? -1 : static_cast<int>(values_[row]);
}

const std::string& Column::level(std::size_t row) const {
  return levels_.at(static_cast<std::size_t>(code(row)));
}

std::string Column::text(std::size_t row) const {
  if (missing_[row]) return {};
  if (kind_ == ColumnKind::categorical) return level(row);
  return format_double(values_[row]);
}

Column Column::with_name(std::string name) const {
  Column c = *this;
  c.name_ = std::move(name);
  return c;
}

Column Column::select_rows(std::span<const std::size_t> rows) const {
  Column c;
  c.name_ = name_;
  c.kind_ = kind_;
  c.levels_ = levels_;
  c.values_.reserve(rows.size());
  c.missing_.reserve(rows.size());
  for (std::size_t r : rows) {
    c.values_.push_back(values_.at(r));
    c.missing_.push_back(missing_[r]);
  }
  return c;
}

bool Column::operator==(const Column& other) const {
  if (name_ != other.name_ || kind_ != other.kind_ ||
      levels_ != other.levels_ || missing_ != other.missing_ ||
      values_.size() != other.values_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (missing_[i]) continue;
    if (values_[i] != other.values_[i]) return false;
  }
  return true;
}

// --- Table -----------------------------------------------------------------

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::unordered_set<std::string> names;
  for (const auto& c : columns_) {
    if (c.name().empty()) throw SchemaError("empty column name");
    if (!names.insert(c.name()).second) {
      throw SchemaError("duplicate column name '" + c.name() + "'");
    }
  }
  n_rows_ = columns_.empty() ? 0 : columns_.front().size();
  for (const auto& c : columns_) {
    if (c.size() != n_rows_) {
      throw SchemaError("column '" + c.name() + "' has " +
                        std::to_string(c.size()) + " rows, expected " +
                        std::to_string(n_rows_));
    }
  }
}

const Column& Table::column(std::string_view name) const {
  if (auto i = find(name)) return columns_[*i];
  throw SchemaError("unknown column '" + std::string(name) + "'");
}

std::optional<std::size_t> Table::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name() == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Table::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& c : columns_) names.push_back(c.name());
  return names;
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> cols;
  cols.reserve(columns_.size());
  for (const auto& c : columns_) cols.push_back(c.select_rows(rows));
  Table t(std::move(cols));
  t.n_rows_ = rows.size();
  return t;
}

Table Table::with_column(Column column) const {
  std::vector<Column> cols = columns_;
  if (auto i = find(column.name())) {
    cols[*i] = std::move(column);
  } else {
    cols.push_back(std::move(column));
  }
  return Table(std::move(cols));
}

// --- CSV -------------------------------------------------------------------

Table read_csv(std::istream& in, const CsvOptions& options) {
  std::size_t line = 0;
  std::vector<std::string> header;
  if (!read_record(in, options.delimiter, header, line)) {
    throw ParseError(1, "missing header row");
  }
  {
    std::unordered_set<std::string> seen;
    for (auto& h : header) {
      h = std::string(trim(h));
      if (h.empty()) throw SchemaError("empty column name in header");
      if (!seen.insert(h).second) {
        throw SchemaError("duplicate column name '" + h + "' in header");
      }
    }
  }
  for (const auto& [name, kind] : options.kinds) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw SchemaError("kind override for unknown column '" + name + "'");
    }
  }

  const std::size_t n_cols = header.size();
  std::vector<std::vector<std::string>> cells(n_cols);
  std::vector<std::vector<bool>> missing(n_cols);
  std::vector<std::size_t> row_lines;
  std::vector<std::string> fields;
  for (;;) {
    const std::size_t before = line;
    if (!read_record(in, options.delimiter, fields, line)) break;
    if (fields.size() == 1 && trim(fields[0]).empty() && n_cols > 1) {
      continue;  // blank line
    }
    if (fields.size() != n_cols) {
      throw ParseError(before + 1, "expected " + std::to_string(n_cols) +
                                       " fields, found " +
                                       std::to_string(fields.size()));
    }
    row_lines.push_back(before + 1);
    for (std::size_t c = 0; c < n_cols; ++c) {
      const std::string_view t = trim(fields[c]);
      const bool is_missing = std::any_of(
          options.missing_tokens.begin(), options.missing_tokens.end(),
          [&](const std::string& tok) { return iequals(t, tok); });
      missing[c].push_back(is_missing);
      cells[c].emplace_back(is_missing ? std::string_view{} : t);
    }
  }

  std::vector<Column> columns;
  columns.reserve(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    std::optional<ColumnKind> forced;
    if (auto it = options.kinds.find(header[c]); it != options.kinds.end()) {
      forced = it->second;
    }
    std::vector<double> numbers(cells[c].size(), kNaN);
    bool numeric = forced.value_or(ColumnKind::numeric) == ColumnKind::numeric;
    for (std::size_t r = 0; numeric && r < cells[c].size(); ++r) {
      if (missing[c][r]) continue;
      if (auto v = parse_number(cells[c][r])) {
        numbers[r] = *v;
      } else if (forced) {
        throw SchemaError("line " + std::to_string(row_lines[r]) +
                          ": column '" + header[c] +
                          "' declared numeric but holds '" + cells[c][r] + "'");
      } else {
        numeric = false;
      }
    }
    if (numeric) {
      columns.push_back(Column::numeric(header[c], std::move(numbers), missing[c]));
    } else {
      columns.push_back(
          Column::categorical(header[c], std::move(cells[c]), missing[c]));
    }
  }
  return Table(std::move(columns));
}

Table load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in, options);
}

void write_csv(const Table& table, std::ostream& out) {
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    if (c) out << ',';
    out << csv_escape(table.column(c).name());
  }
  out << '\n';
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      if (c) out << ',';
      out << csv_escape(table.column(c).text(r));
    }
    out << '\n';
  }
}

void save_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_csv(table, out);
}

}  // namespace xai::data
