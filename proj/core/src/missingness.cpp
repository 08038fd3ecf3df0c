#include <algorithm>
#include <map>
#include <ostream>

#include "xai/dataset.hpp"
#include "xai/format.hpp"

namespace xai::data {

MissingnessReport missingness(const Table& table) {
  MissingnessReport report;
  report.n_rows = table.n_rows();
  report.n_cols = table.n_cols();
  for (const auto& column : table.columns()) {
    ColumnMissingness m;
    m.name = column.name();
    m.count = column.missing_count();
    m.fraction = report.n_rows
                     ? static_cast<double>(m.count) /
                           static_cast<double>(report.n_rows)
                     : 0.0;
    report.missing_cells += m.count;
    report.columns.push_back(std::move(m));
  }
  const std::size_t cells = report.n_rows * report.n_cols;
  report.overall_fraction =
      cells ? static_cast<double>(report.missing_cells) /
                  static_cast<double>(cells)
            : 0.0;

  std::map<std::vector<std::size_t>, std::size_t> counts;
  std::vector<std::size_t> key;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    key.clear();
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      if (table.column(c).is_missing(r)) key.push_back(c);
    }
    ++counts[key];
  }
  for (auto& [cols, rows] : counts) report.patterns.push_back({cols, rows});
  std::stable_sort(report.patterns.begin(), report.patterns.end(),
                   [](const MissingPattern& a, const MissingPattern& b) {
                     return a.rows > b.rows;
                   });
  return report;
}

nlohmann::json to_json(const MissingnessReport& report) {
  nlohmann::json j;
  j["n_rows"] = report.n_rows;
  j["n_cols"] = report.n_cols;
  j["missing_cells"] = report.missing_cells;
  j["overall_fraction"] = report.overall_fraction;
  auto& cols = j["columns"] = nlohmann::json::array();
  for (const auto& c : report.columns) {
    cols.push_back({{"name", c.name}, {"missing", c.count}, {"fraction", c.fraction}});
  }
  auto& patterns = j["patterns"] = nlohmann::json::array();
  for (const auto& p : report.patterns) {
    nlohmann::json names = nlohmann::json::array();
    for (std::size_t c : p.columns) names.push_back(report.columns[c].name);
    patterns.push_back({{"missing_columns", names}, {"rows", p.rows}});
  }
  return j;
}

void write_pattern_csv(const MissingnessReport& report, std::ostream& out) {
  for (const auto& c : report.columns) out << csv_escape(c.name) << ',';
  out << "rows,n_missing\n";
  for (const auto& p : report.patterns) {
    std::vector<int> flags(report.n_cols, 0);
    for (std::size_t c : p.columns) flags[c] = 1;
    for (int f : flags) out << f << ',';
    out << p.rows << ',' << p.columns.size() << '\n';
  }
}

}  // namespace xai::data
