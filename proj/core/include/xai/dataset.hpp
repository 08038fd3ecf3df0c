#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xai/frame.hpp"

namespace xai::data {

/// One named column. Values are stored as doubles: the number itself for
/// numeric columns, the level code for categorical ones. Missing cells hold
/// NaN and are flagged in the mask.
class Column {
 public:
  static Column numeric(std::string name, std::vector<double> values,
                        std::vector<bool> missing = {});
  static Column categorical(std::string name,
                            std::vector<std::string> cells,
                            std::vector<bool> missing = {});
  // codes index into `levels`; a negative code marks a missing cell.
  static Column categorical_codes(std::string name,
                                  std::vector<std::string> levels,
                                  std::span<const int> codes);

  const std::string& name() const noexcept { return name_; }
  ColumnKind kind() const noexcept { return kind_; }
  bool is_numeric() const noexcept { return kind_ == ColumnKind::numeric; }
  std::size_t size() const noexcept { return values_.size(); }

  bool is_missing(std::size_t row) const { return missing_[row] != 0; }
  std::size_t missing_count() const;

  double value(std::size_t row) const { return values_[row]; }
  int code(std::size_t row) const;
  const std::string& level(std::size_t row) const;
  const std::vector<std::string>& levels() const noexcept { return levels_; }
  std::span<const double> values() const noexcept { return values_; }

  // Cell rendered as CSV text; empty when missing.
  std::string text(std::size_t row) const;

  FeatureSpec spec() const { return {name_, kind_, levels_}; }

  Column with_name(std::string name) const;
  Column select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const Column& other) const;

 private:
  Column() = default;

  std::string name_;
  ColumnKind kind_ = ColumnKind::numeric;
  std::vector<double> values_;
  std::vector<std::string> levels_;
  std::vector<std::uint8_t> missing_;
};

/// Immutable, column-typed table. All columns share one row count and have
/// unique non-empty names.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<Column> columns);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return columns_.size(); }

  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t index) const { return columns_.at(index); }
  const Column& column(std::string_view name) const;
  std::optional<std::size_t> find(std::string_view name) const;
  std::vector<std::string> column_names() const;

  Table select_rows(std::span<const std::size_t> rows) const;
  Table with_column(Column column) const;  // replaces a same-named column

  bool operator==(const Table& other) const = default;

 private:
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

// --- CSV ---------------------------------------------------------------

struct CsvOptions {
  char delimiter = ',';
  // Matched case-insensitively after trimming surrounding whitespace.
  std::vector<std::string> missing_tokens{"", "NA", "NaN"};
  std::map<std::string, ColumnKind> kinds;
};

Table read_csv(std::istream& in, const CsvOptions& options = {});
Table load_csv(const std::filesystem::path& path,
               const CsvOptions& options = {});
void write_csv(const Table& table, std::ostream& out);
void save_csv(const Table& table, const std::filesystem::path& path);

// --- Missingness ---------------------------------------------------------

struct ColumnMissingness {
  std::string name;
  std::size_t count = 0;
  double fraction = 0.0;
};

// A set of columns that are missing together in `rows` rows (and no other
// column is missing in those rows). The empty set counts complete rows.
struct MissingPattern {
  std::vector<std::size_t> columns;
  std::size_t rows = 0;
};

struct MissingnessReport {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::size_t missing_cells = 0;
  double overall_fraction = 0.0;
  std::vector<ColumnMissingness> columns;
  std::vector<MissingPattern> patterns;  // most frequent first
};

MissingnessReport missingness(const Table& table);
nlohmann::json to_json(const MissingnessReport& report);
// One row per pattern: a 0/1 flag per column (1 = missing), then the row
// count and the number of missing columns in the pattern.
void write_pattern_csv(const MissingnessReport& report, std::ostream& out);

// --- Imputation ----------------------------------------------------------

enum class ImputeStrategy { median_mode, predictive };

ImputeStrategy parse_impute_strategy(std::string_view name);

/// Returns a copy with every missing cell filled. median_mode uses the
/// column median (numeric) or modal level (categorical, first level wins
/// ties). predictive fits a depth-3 tree per incomplete column on the
/// columns that have no missing values, falling back to median_mode when no
/// column is complete.
Table impute(const Table& table, ImputeStrategy strategy,
             std::uint64_t seed = 0);

// --- Splitting -----------------------------------------------------------

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  std::optional<std::string> stratify_on;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

SplitIndices split_indices(const Table& table, const SplitSpec& spec);
std::pair<Table, Table> split(const Table& table, const SplitSpec& spec);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

std::vector<Fold> kfold(std::size_t n_rows, std::size_t k,
                        std::uint64_t seed);
inline std::vector<Fold> kfold(const Table& table, std::size_t k,
                               std::uint64_t seed) {
  return kfold(table.n_rows(), k, seed);
}

}  // namespace xai::data
