#include <algorithm>
#include <cmath>

#include "xai/dataset.hpp"
#include "xai/error.hpp"
#include "xai/tree.hpp"

namespace xai::data {
namespace {

constexpr std::size_t kPredictiveDepth = 3;

double column_median(const Column& column) {
  std::vector<double> observed;
  for (std::size_t r = 0; r < column.size(); ++r) {
    if (!column.is_missing(r)) observed.push_back(column.value(r));
  }
  std::sort(observed.begin(), observed.end());
  const std::size_t n = observed.size();
  return n % 2 ? observed[n / 2] : 0.5 * (observed[n / 2 - 1] + observed[n / 2]);
}

int column_mode(const Column& column) {
  std::vector<std::size_t> counts(column.levels().size(), 0);
  for (std::size_t r = 0; r < column.size(); ++r) {
    if (!column.is_missing(r)) ++counts[static_cast<std::size_t>(column.code(r))];
  }
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                          counts.begin());
}

Column fill(const Column& column, const std::vector<double>& fills) {
  if (column.is_numeric()) {
    std::vector<double> values(column.values().begin(), column.values().end());
    for (std::size_t r = 0; r < values.size(); ++r) {
      if (column.is_missing(r)) values[r] = fills[r];
    }
    return Column::numeric(column.name(), std::move(values));
  }
  std::vector<int> codes(column.size());
  for (std::size_t r = 0; r < codes.size(); ++r) {
    codes[r] = column.is_missing(r) ? static_cast<int>(fills[r]) : column.code(r);
  }
  return Column::categorical_codes(column.name(), column.levels(), codes);
}

Column impute_median_mode(const Column& column) {
  const double v = column.is_numeric() ? column_median(column)
                                       : static_cast<double>(column_mode(column));
  return fill(column, std::vector<double>(column.size(), v));
}

// Fits a depth-limited tree on rows where `column` is observed, using the
// complete columns as features. Categorical targets are fit with one output
// per level (squared error on indicators is the Gini criterion) and each
// leaf predicts its majority level.
Column impute_with_tree(const Column& column,
                        const std::vector<const Column*>& predictors,
                        std::uint64_t seed) {
  const std::size_t n = column.size();
  std::vector<FeatureSpec> features;
  for (const Column* p : predictors) features.push_back(p->spec());
  Frame x(n, predictors.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < predictors.size(); ++c) {
      x(r, c) = predictors[c]->value(r);
    }
  }
  const std::size_t n_outputs =
      column.is_numeric() ? 1 : std::max<std::size_t>(1, column.levels().size());
  std::vector<double> targets(n * n_outputs, 0.0);
  std::vector<std::uint8_t> in_sample(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    if (column.is_missing(r)) continue;
    in_sample[r] = 1;
    if (column.is_numeric()) {
      targets[r] = column.value(r);
    } else {
      targets[r * n_outputs + static_cast<std::size_t>(column.code(r))] = 1.0;
    }
  }
  models::SortedIndex sorted(x, features);
  models::GrowParams params;
  params.max_depth = kPredictiveDepth;
  params.min_node_size = 1;
  params.seed = seed;
  models::RegressionTree tree =
      models::grow_tree(x, features, sorted, targets, n_outputs, in_sample, params);

  if (!column.is_numeric()) {
    // Majority level per leaf; ties go to the lowest level code.
    const auto& nodes = tree.nodes();
    std::vector<std::vector<std::size_t>> votes(
        nodes.size(), std::vector<std::size_t>(n_outputs, 0));
    for (std::size_t r = 0; r < n; ++r) {
      if (!in_sample[r]) continue;
      ++votes[tree.leaf_index(x.row(r))][static_cast<std::size_t>(column.code(r))];
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i].is_leaf()) continue;
      const auto& v = votes[i];
      tree.set_value(i, static_cast<double>(std::max_element(v.begin(), v.end()) -
                                            v.begin()));
    }
  }

  std::vector<double> fills(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    if (column.is_missing(r)) fills[r] = tree.predict(x.row(r));
  }
  return fill(column, fills);
}

}  // namespace

ImputeStrategy parse_impute_strategy(std::string_view name) {
  if (name == "median_mode") return ImputeStrategy::median_mode;
  if (name == "predictive") return ImputeStrategy::predictive;
  throw ConfigError("unknown imputation strategy '" + std::string(name) +
                    "' (expected median_mode or predictive)");
}

Table impute(const Table& table, ImputeStrategy strategy, std::uint64_t seed) {
  for (const auto& column : table.columns()) {
    const std::size_t missing = column.missing_count();
    if (missing > 0 && missing == column.size()) {
      throw ImputeError("column '" + column.name() +
                        "' has no observed values to impute from");
    }
  }
  std::vector<const Column*> complete;
  for (const auto& column : table.columns()) {
    if (column.missing_count() == 0) complete.push_back(&column);
  }
  std::vector<Column> out;
  out.reserve(table.n_cols());
  for (const auto& column : table.columns()) {
    if (column.missing_count() == 0) {
      out.push_back(column);
    } else if (strategy == ImputeStrategy::predictive && !complete.empty()) {
      out.push_back(impute_with_tree(column, complete, seed));
    } else {
      out.push_back(impute_median_mode(column));
    }
  }
  return Table(std::move(out));
}

}  // namespace xai::data
